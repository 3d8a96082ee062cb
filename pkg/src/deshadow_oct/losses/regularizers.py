import torch
from torch import nn

from deshadow_oct.error.exceptions import ShapeError


def tv_loss(deshadowed: torch.Tensor) -> torch.Tensor:
    """Anisotropic total variation per pixel, averaged over the batch.

    Boundary terms without a neighbour are omitted; the sum is divided by H * W.
    """
    height, width = deshadowed.shape[-2:]
    if height < 2 or width < 2:
        raise ShapeError(f"tv_loss needs at least 2x2 images, got {height}x{width}")
    dy = (deshadowed[..., 1:, :] - deshadowed[..., :-1, :]).abs().flatten(1).sum(dim=1)
    dx = (deshadowed[..., :, 1:] - deshadowed[..., :, :-1]).abs().flatten(1).sum(dim=1)
    return ((dy + dx) / (height * width)).mean()


def shadow_loss(deshadowed: torch.Tensor, detector: nn.Module) -> torch.Tensor:
    """Sum of the detector's soft shadow map per image, averaged over the batch.

    Gradients reach ``deshadowed``; the caller keeps the detector frozen.
    """
    return detector(deshadowed).flatten(1).sum(dim=1).mean()
