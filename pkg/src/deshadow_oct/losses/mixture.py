"""Weighted generator objective: content + style + shadow + total variation."""

from dataclasses import dataclass
import logging

from pydantic import BaseModel, Field
import torch
from torch import nn

from deshadow_oct.const.column import ColumnNames
from deshadow_oct.losses.perceptual import MASK_THRESHOLD, mask_images, perceptual_losses
from deshadow_oct.losses.regularizers import shadow_loss, tv_loss
from deshadow_oct.nets.backbone import Backbone

logger = logging.getLogger(__name__)


class LossWeights(BaseModel):
    """Weights of the four generator loss terms."""

    content: float = Field(default=100.0, ge=0.0, description="Content loss weight (w1)")
    style: float = Field(default=0.1, ge=0.0, description="Style loss weight (w2)")
    shadow: float = Field(default=100.0, ge=0.0, description="Shadow loss weight (w3)")
    tv: float = Field(default=1e-5, ge=0.0, description="Total variation weight (w4)")
    mask_threshold: float = Field(
        default=MASK_THRESHOLD, gt=0.0, lt=1.0, description="Predicted-mask binarization level"
    )


@dataclass
class LossBreakdown:
    content: torch.Tensor
    style: torch.Tensor
    shadow: torch.Tensor
    tv: torch.Tensor
    total: torch.Tensor

    def as_row(self) -> dict[str, float]:
        return {
            ColumnNames.CONTENT.value: float(self.content.detach()),
            ColumnNames.STYLE.value: float(self.style.detach()),
            ColumnNames.SHADOW.value: float(self.shadow.detach()),
            ColumnNames.TV.value: float(self.tv.detach()),
            ColumnNames.TOTAL.value: float(self.total.detach()),
        }


def combine(
    content: torch.Tensor,
    style: torch.Tensor,
    shadow: torch.Tensor,
    tv: torch.Tensor,
    weights: LossWeights,
) -> LossBreakdown:
    total = (
        weights.content * content
        + weights.style * style
        + weights.shadow * shadow
        + weights.tv * tv
    )
    return LossBreakdown(content=content, style=style, shadow=shadow, tv=tv, total=total)


def total_loss(
    baseline: torch.Tensor,
    deshadowed: torch.Tensor,
    pred_mask: torch.Tensor,
    weights: LossWeights,
    backbone: Backbone,
    detector: nn.Module,
) -> LossBreakdown:
    """Full generator loss for one batch.

    Content and style compare the masked baseline/deshadowed pair; shadow and
    total variation see the raw deshadowed image.
    """
    b_masked, d_masked = mask_images(baseline, deshadowed, pred_mask, weights.mask_threshold)
    content, style = perceptual_losses(b_masked, d_masked, backbone)
    breakdown = combine(
        content,
        style,
        shadow_loss(deshadowed, detector),
        tv_loss(deshadowed),
        weights,
    )
    logger.debug(
        "loss " + " ".join(f"{key}={value:.6g}" for key, value in breakdown.as_row().items())
    )
    return breakdown
