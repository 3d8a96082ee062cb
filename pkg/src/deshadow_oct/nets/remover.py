"""Encoder/decoder shadow remover mapping a shadowed B-scan to a deshadowed one."""

import logging
import time

from pydantic import BaseModel, Field, model_validator
import torch
from torch import nn

from deshadow_oct.error.exceptions import ShapeError, ValidationError
from deshadow_oct.imaging.bscan import BScan
from deshadow_oct.imaging.resize import NETWORK_SIZE
from deshadow_oct.nets.common import check_input, images_to_tensor, tensor_to_images

logger = logging.getLogger(__name__)

DEFAULT_DECODER_FILTERS = (512, 512, 512, 256, 128, 64, 64, 64)


class RemoverConfig(BaseModel):
    """Shape of the remover network.

    ``decoder_filters[k]`` is the width of decoding stage ``k`` (deepest first);
    its length must equal ``n_down``.
    """

    n_down: int = Field(default=8, ge=1, description="Stride-2 Down modules (and Up stages)")
    base_filters: int = Field(default=64, ge=1, description="Filters of the first Down module")
    max_filters: int = Field(default=512, ge=1, description="Encoder filter plateau")
    decoder_filters: tuple[int, ...] = Field(
        default=DEFAULT_DECODER_FILTERS, description="Decoder widths, deepest stage first"
    )
    down_kernel: int = Field(default=4, description="Down/Up kernel size")
    refine_kernel: int = Field(default=3, description="Refine kernel size (odd)")
    dropout_p: float = Field(default=0.5, ge=0.0, lt=1.0, description="Refine dropout rate")
    dropout_stages: int = Field(default=3, ge=0, description="Leading decoder stages with dropout")
    leaky_slope: float = Field(default=0.2, ge=0.0, description="Encoder LeakyReLU slope")
    width_divisor: int = Field(default=1, ge=1, description="Divide every filter count by this")

    @model_validator(mode="after")
    def _fit_decoder(self) -> "RemoverConfig":
        explicit = "decoder_filters" in self.model_fields_set
        if not explicit and len(self.decoder_filters) != self.n_down:
            padded = (self.max_filters,) * max(self.n_down - len(DEFAULT_DECODER_FILTERS), 0)
            self.decoder_filters = (padded + DEFAULT_DECODER_FILTERS)[-self.n_down :]
        if len(self.decoder_filters) != self.n_down:
            raise ValueError(
                f"decoder_filters has {len(self.decoder_filters)} stages, n_down is {self.n_down}"
            )
        if self.refine_kernel % 2 == 0:
            raise ValueError(f"refine_kernel must be odd, got {self.refine_kernel}")
        return self

    def encoder_filters(self) -> list[int]:
        return [
            max(min(self.base_filters * 2**k, self.max_filters) // self.width_divisor, 1)
            for k in range(self.n_down)
        ]

    def decoder_widths(self) -> list[int]:
        return [max(f // self.width_divisor, 1) for f in self.decoder_filters]


class _Down(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, cfg: RemoverConfig, norm: bool):
        super().__init__()
        pad = (cfg.down_kernel - 2) // 2
        layers: list[nn.Module] = [nn.Conv2d(in_ch, out_ch, cfg.down_kernel, stride=2, padding=pad)]
        if norm:
            layers.append(nn.BatchNorm2d(out_ch))
        layers.append(nn.LeakyReLU(cfg.leaky_slope))
        self.block = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.block(x)


def _refine(in_ch: int, out_ch: int, kernel: int, norm: bool, dropout: float) -> nn.Sequential:
    layers: list[nn.Module] = [nn.Conv2d(in_ch, out_ch, kernel, padding=kernel // 2)]
    if norm:
        layers.append(nn.BatchNorm2d(out_ch))
    layers.append(nn.ReLU(inplace=True))
    if dropout > 0.0:
        layers.append(nn.Dropout(dropout))
    return nn.Sequential(*layers)


class _DecodeStage(nn.Module):
    """Up (transposed conv) then concat the skip then two Refine convolutions."""

    def __init__(
        self, in_ch: int, skip_ch: int, out_ch: int, cfg: RemoverConfig, norm: bool, dropout: float
    ):
        super().__init__()
        pad = (cfg.down_kernel - 2) // 2
        up: list[nn.Module] = [
            nn.ConvTranspose2d(in_ch, out_ch, cfg.down_kernel, stride=2, padding=pad)
        ]
        if norm:
            up.append(nn.BatchNorm2d(out_ch))
        up.append(nn.ReLU(inplace=True))
        self.up = nn.Sequential(*up)
        self.refine1 = _refine(out_ch + skip_ch, out_ch, cfg.refine_kernel, norm, dropout)
        self.refine2 = _refine(out_ch, out_ch, cfg.refine_kernel, norm, 0.0)

    def forward(self, x: torch.Tensor, skip: torch.Tensor) -> torch.Tensor:
        x = torch.cat([self.up(x), skip], dim=1)
        return self.refine2(self.refine1(x))


class ShadowRemover(nn.Module):
    """Eight Down modules and eight decoding stages with skip concatenation.

    The last decoding stage has no batch norm and is followed by a 1x1
    projection and a sigmoid, so outputs lie in (0, 1).
    """

    def __init__(
        self, config: RemoverConfig | None = None, input_size: tuple[int, int] = NETWORK_SIZE
    ):
        super().__init__()
        self.config = cfg = config or RemoverConfig()
        self.input_size = tuple(input_size)
        stride = 2**cfg.n_down
        if any(s % stride for s in self.input_size):
            raise ShapeError(f"Remover input {self.input_size} must be divisible by {stride}")

        enc = cfg.encoder_filters()
        self.downs = nn.ModuleList()
        in_ch = 1
        for k, out_ch in enumerate(enc):
            self.downs.append(_Down(in_ch, out_ch, cfg, norm=k > 0))
            in_ch = out_ch

        # deepest skip first; the raw input feeds the last stage
        skip_channels = list(reversed(enc[:-1])) + [1]
        self.stages = nn.ModuleList()
        for k, (out_ch, skip_ch) in enumerate(zip(cfg.decoder_widths(), skip_channels)):
            last = k == cfg.n_down - 1
            dropout = cfg.dropout_p if k < cfg.dropout_stages else 0.0
            self.stages.append(
                _DecodeStage(in_ch, skip_ch, out_ch, cfg, norm=not last, dropout=dropout)
            )
            in_ch = out_ch
        self.head = nn.Conv2d(in_ch, 1, kernel_size=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        check_input(x, self.input_size, "ShadowRemover")
        skips = [x]
        for down in self.downs:
            x = down(x)
            skips.append(x)
        skips.pop()
        for stage, skip in zip(self.stages, reversed(skips)):
            x = stage(x, skip)
        return torch.sigmoid(self.head(x))

    def encoder_sizes(self, x: torch.Tensor) -> list[tuple[int, int]]:
        """Spatial size at the input and after every Down module."""
        sizes = [tuple(x.shape[-2:])]
        with torch.no_grad():
            for down in self.downs:
                x = down(x)
                sizes.append(tuple(x.shape[-2:]))
        return sizes


def remover_infer_batch(
    remover: ShadowRemover,
    imgs: list[BScan],
    batch_size: int | None = None,
    timings_ms: list[float] | None = None,
) -> list[BScan]:
    """Deshadow B-scans in eval mode, logging wall time per batch.

    When ``timings_ms`` is given, the per-image time of every batch is appended to it.

    Raises:
        ValidationError: If ``imgs`` is empty.
    """
    if not imgs:
        raise ValidationError("remover_infer_batch needs at least one image")
    batch_size = batch_size or len(imgs)
    param = next(remover.parameters())
    was_training = remover.training
    remover.eval()
    outputs: list[BScan] = []
    try:
        with torch.no_grad():
            for start in range(0, len(imgs), batch_size):
                chunk = imgs[start : start + batch_size]
                x = images_to_tensor(chunk, dtype=param.dtype, device=param.device)
                tic = time.perf_counter()
                y = remover(x)
                if y.is_cuda:
                    torch.cuda.synchronize()
                elapsed_ms = (time.perf_counter() - tic) * 1000.0
                logger.info(
                    f"Deshadowed batch of {len(chunk)} in {elapsed_ms:.1f} ms "
                    f"({elapsed_ms / len(chunk):.2f} ms/image)"
                )
                if timings_ms is not None:
                    timings_ms.extend([elapsed_ms / len(chunk)] * len(chunk))
                outputs.extend(tensor_to_images(y, [img.source_id for img in chunk]))
    finally:
        remover.train(was_training)
    return outputs
