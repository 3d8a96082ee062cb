"""Helpers shared by the backbone, detector and remover networks."""

from collections.abc import Iterator, Sequence
from contextlib import contextmanager
import hashlib

import numpy as np
import torch
from torch import nn

from deshadow_oct.error.exceptions import ContractViolationError, ShapeError, ValidationError
from deshadow_oct.imaging.bscan import BScan, MaskKind, ShadowMask


def count_parameters(module: nn.Module, trainable_only: bool = True) -> int:
    return sum(p.numel() for p in module.parameters() if p.requires_grad or not trainable_only)


def weights_hash(module: nn.Module) -> str:
    """SHA-256 over every parameter and buffer, in registration order."""
    digest = hashlib.sha256()
    for name, tensor in module.state_dict().items():
        digest.update(name.encode())
        digest.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()


def freeze(module: nn.Module) -> nn.Module:
    module.eval()
    module.requires_grad_(False)
    return module


@contextmanager
def frozen(module: nn.Module) -> Iterator[nn.Module]:
    """Freeze ``module`` for the duration of the block and verify it was not modified.

    Raises:
        ContractViolationError: If the weights changed inside the block.
    """
    was_training = module.training
    grads = [p.requires_grad for p in module.parameters()]
    before = weights_hash(module)
    freeze(module)
    try:
        yield module
    finally:
        after = weights_hash(module)
        for param, flag in zip(module.parameters(), grads):
            param.requires_grad_(flag)
        module.train(was_training)
    if after != before:
        raise ContractViolationError(
            f"{type(module).__name__} weights changed while frozen ({before[:12]} -> {after[:12]})"
        )


def check_input(x: torch.Tensor, size: tuple[int, int], name: str) -> None:
    if x.ndim != 4 or x.shape[1] != 1:
        raise ShapeError(f"{name} expects (N, 1, H, W) input, got {tuple(x.shape)}")
    if tuple(x.shape[-2:]) != tuple(size):
        raise ShapeError(f"{name} expects {size[0]}x{size[1]} images, got {tuple(x.shape[-2:])}")


def images_to_tensor(
    imgs: Sequence[BScan], dtype: torch.dtype = torch.float32, device: str | torch.device = "cpu"
) -> torch.Tensor:
    if not imgs:
        raise ValidationError("Empty image batch")
    shapes = {img.shape for img in imgs}
    if len(shapes) != 1:
        raise ShapeError(f"Batch mixes image shapes {sorted(shapes)}")
    stacked = np.stack([img.pixels for img in imgs])[:, None]
    return torch.from_numpy(stacked).to(device=device, dtype=dtype)


def masks_to_tensor(
    masks: Sequence[ShadowMask],
    dtype: torch.dtype = torch.float32,
    device: str | torch.device = "cpu",
) -> torch.Tensor:
    stacked = np.stack([mask.values for mask in masks])[:, None]
    return torch.from_numpy(stacked).to(device=device, dtype=dtype)


def tensor_to_images(batch: torch.Tensor, source_ids: Sequence[str] | None = None) -> list[BScan]:
    arrays = batch.detach().cpu().to(torch.float64).numpy()[:, 0]
    ids = list(source_ids) if source_ids is not None else [""] * len(arrays)
    return [BScan(pixels=np.clip(a, 0.0, 1.0), source_id=i) for a, i in zip(arrays, ids)]


def tensor_to_masks(batch: torch.Tensor) -> list[ShadowMask]:
    arrays = batch.detach().cpu().to(torch.float64).numpy()[:, 0]
    return [ShadowMask(values=np.clip(a, 0.0, 1.0), kind=MaskKind.PREDICTED_SOFT) for a in arrays]
