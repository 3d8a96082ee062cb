"""U-Net shadow detector: a per-pixel soft shadow mask in (0, 1)."""

import numpy as np
from pydantic import BaseModel, Field
import torch
from torch import nn
import torch.nn.functional as F

from deshadow_oct.error.exceptions import ShapeError, ValidationError
from deshadow_oct.imaging.bscan import BScan, ShadowMask
from deshadow_oct.imaging.resize import NETWORK_SIZE
from deshadow_oct.nets.common import check_input, images_to_tensor, tensor_to_masks


class DetectorConfig(BaseModel):
    """Shape of the detector U-Net."""

    in_channels: int = Field(default=1, ge=1, description="Input channels")
    base_filters: int = Field(default=64, ge=1, description="Filters of the first encoder level")
    depth: int = Field(default=4, ge=1, description="Number of 2x2 max-pool descents")
    kernel: int = Field(default=3, ge=1, description="Convolution kernel size (odd)")
    width_divisor: int = Field(default=1, ge=1, description="Divide every filter count by this")

    def encoder_filters(self) -> list[int]:
        widths = (self.base_filters * 2**level for level in range(self.depth))
        return [max(w // self.width_divisor, 1) for w in widths]


def _double_conv(in_ch: int, out_ch: int, kernel: int) -> nn.Sequential:
    pad = kernel // 2
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, kernel, padding=pad),
        nn.ReLU(inplace=True),
        nn.Conv2d(out_ch, out_ch, kernel, padding=pad),
        nn.ReLU(inplace=True),
    )


class _UpBlock(nn.Module):
    def __init__(self, in_ch: int, skip_ch: int, out_ch: int, kernel: int):
        super().__init__()
        self.up = nn.ConvTranspose2d(in_ch, in_ch // 2, kernel_size=2, stride=2)
        self.conv = _double_conv(in_ch // 2 + skip_ch, out_ch, kernel)

    def forward(self, x: torch.Tensor, skip: torch.Tensor) -> torch.Tensor:
        return self.conv(torch.cat([self.up(x), skip], dim=1))


class ShadowDetector(nn.Module):
    """Encoder/decoder with skip concatenation and a sigmoid head.

    With the default config the encoder runs at 64/128/256/512 filters, the
    bottleneck stays at 512 and the network has about 13.3M parameters.
    """

    def __init__(
        self, config: DetectorConfig | None = None, input_size: tuple[int, int] = NETWORK_SIZE
    ):
        super().__init__()
        self.config = config or DetectorConfig()
        if self.config.kernel % 2 == 0:
            raise ValidationError(f"Detector kernel must be odd, got {self.config.kernel}")
        self.input_size = tuple(input_size)
        stride = 2**self.config.depth
        if any(s % stride for s in self.input_size):
            raise ShapeError(f"Detector input {self.input_size} must be divisible by {stride}")

        filters = self.config.encoder_filters()
        kernel = self.config.kernel
        self.encoders = nn.ModuleList()
        in_ch = self.config.in_channels
        for out_ch in filters:
            self.encoders.append(_double_conv(in_ch, out_ch, kernel))
            in_ch = out_ch
        self.pool = nn.MaxPool2d(2)
        self.bottleneck = _double_conv(filters[-1], filters[-1], kernel)

        self.decoders = nn.ModuleList()
        up_ch = filters[-1]
        for level in reversed(range(self.config.depth)):
            out_ch = filters[level - 1] if level > 0 else filters[0]
            self.decoders.append(_UpBlock(up_ch, filters[level], out_ch, kernel))
            up_ch = out_ch
        self.head = nn.Conv2d(up_ch, 1, kernel_size=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        check_input(x, self.input_size, "ShadowDetector")
        skips = []
        for encoder in self.encoders:
            x = encoder(x)
            skips.append(x)
            x = self.pool(x)
        x = self.bottleneck(x)
        for decoder, skip in zip(self.decoders, reversed(skips)):
            x = decoder(x, skip)
        return torch.sigmoid(self.head(x))

    @torch.no_grad()
    def predict(self, imgs: list[BScan]) -> list[ShadowMask]:
        """Eval-mode soft masks for a batch of B-scans."""
        was_training = self.training
        self.eval()
        param = next(self.parameters())
        out = self(images_to_tensor(imgs, dtype=param.dtype, device=param.device))
        self.train(was_training)
        return tensor_to_masks(out)


def bce_loss(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """Mean per-pixel binary cross entropy on tensors."""
    if pred.shape != gt.shape:
        raise ShapeError(f"Prediction shape {tuple(pred.shape)} != target {tuple(gt.shape)}")
    if not torch.all((gt == 0) | (gt == 1)):
        raise ValidationError("Detector targets must be binary {0, 1}")
    return F.binary_cross_entropy(pred, gt)


def detector_loss(pred: ShadowMask, gt: ShadowMask) -> float:
    """Mean per-pixel BCE between a predicted soft mask and a ground-truth mask."""
    if not gt.is_binary:
        raise ValidationError("Ground-truth mask must be binary")
    if pred.shape != gt.shape:
        raise ShapeError(f"Mask shapes differ: {pred.shape} vs {gt.shape}")
    p = torch.from_numpy(np.array(pred.values))
    g = torch.from_numpy(np.array(gt.values))
    return float(bce_loss(p, g))
