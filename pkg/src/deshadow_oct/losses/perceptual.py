"""Masked content and style losses on backbone features."""

from collections.abc import Sequence

import torch

from deshadow_oct.error.exceptions import ShapeError
from deshadow_oct.nets.backbone import Backbone

MASK_THRESHOLD = 0.5


def mask_images(
    baseline: torch.Tensor,
    deshadowed: torch.Tensor,
    pred_mask: torch.Tensor,
    threshold: float = MASK_THRESHOLD,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Zero every pixel whose predicted shadow probability is >= ``threshold`` in both images."""
    if baseline.shape != deshadowed.shape or baseline.shape != pred_mask.shape:
        raise ShapeError(
            f"Shapes differ: baseline {tuple(baseline.shape)}, deshadowed "
            f"{tuple(deshadowed.shape)}, mask {tuple(pred_mask.shape)}"
        )
    keep = (pred_mask.detach() < threshold).to(baseline.dtype)
    return baseline * keep, deshadowed * keep


def gram(features: torch.Tensor) -> torch.Tensor:
    """Gram matrix of (C, H, W) or (N, C, H, W) features: channel-by-channel inner products."""
    squeeze = features.ndim == 3
    if squeeze:
        features = features.unsqueeze(0)
    n, c = features.shape[:2]
    flat = features.reshape(n, c, -1)
    g = flat @ flat.transpose(1, 2)
    return g[0] if squeeze else g


def content_distance(
    target: Sequence[torch.Tensor], pred: Sequence[torch.Tensor]
) -> torch.Tensor:
    """Sum over taps of the per-image mean squared feature difference, averaged over the batch."""
    total = 0.0
    for t, p in zip(target, pred, strict=True):
        total = total + ((p - t) ** 2).flatten(1).mean(dim=1)
    return total.mean()


def style_distance(
    target: Sequence[torch.Tensor], pred: Sequence[torch.Tensor]
) -> torch.Tensor:
    """Sum over taps of the squared Frobenius distance between Gram matrices, batch mean."""
    total = 0.0
    for t, p in zip(target, pred, strict=True):
        total = total + ((gram(p) - gram(t)) ** 2).sum(dim=(1, 2))
    return total.mean()


def _features(backbone: Backbone, x: torch.Tensor, track_grad: bool) -> list[torch.Tensor]:
    if track_grad:
        return backbone(x).features
    with torch.no_grad():
        return backbone(x).features


def content_loss(
    b_masked: torch.Tensor, d_masked: torch.Tensor, backbone: Backbone
) -> torch.Tensor:
    target = _features(backbone, b_masked, b_masked.requires_grad)
    return content_distance(target, backbone(d_masked).features)


def style_loss(b_masked: torch.Tensor, d_masked: torch.Tensor, backbone: Backbone) -> torch.Tensor:
    target = _features(backbone, b_masked, b_masked.requires_grad)
    return style_distance(target, backbone(d_masked).features)


def perceptual_losses(
    b_masked: torch.Tensor, d_masked: torch.Tensor, backbone: Backbone
) -> tuple[torch.Tensor, torch.Tensor]:
    """(content, style) from one backbone pass per image."""
    target = _features(backbone, b_masked, b_masked.requires_grad)
    pred = backbone(d_masked).features
    return content_distance(target, pred), style_distance(target, pred)
