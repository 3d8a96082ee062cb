"""Generator losses: masked content and style, total variation and shadow."""

from deshadow_oct.losses.mixture import LossBreakdown, LossWeights, combine, total_loss
from deshadow_oct.losses.perceptual import (
    MASK_THRESHOLD,
    content_distance,
    content_loss,
    gram,
    mask_images,
    perceptual_losses,
    style_distance,
    style_loss,
)
from deshadow_oct.losses.regularizers import shadow_loss, tv_loss

__all__ = [
    "MASK_THRESHOLD",
    "LossBreakdown",
    "LossWeights",
    "combine",
    "content_distance",
    "content_loss",
    "gram",
    "mask_images",
    "perceptual_losses",
    "shadow_loss",
    "style_distance",
    "style_loss",
    "total_loss",
    "tv_loss",
]
