"""Paired geometric augmentation for (B-scan, shadow mask) training samples."""

from dataclasses import asdict, dataclass
import logging

import numpy as np
from pydantic import BaseModel, Field, model_validator
import torch
from torchvision.transforms import InterpolationMode
from torchvision.transforms.v2 import functional as TF

from deshadow_oct.imaging.bscan import BScan, MaskKind, ShadowMask
from deshadow_oct.imaging.resize import NETWORK_SIZE, resize_array

logger = logging.getLogger(__name__)


class AugmentConfig(BaseModel):
    """Sampling ranges for the random affine transform."""

    p_hflip: float = Field(default=0.5, ge=0.0, le=1.0, description="Horizontal flip probability")
    rot_deg: tuple[float, float] = Field(default=(-40.0, 40.0), description="Rotation range")
    translate_frac: tuple[float, float] = Field(
        default=(-0.2, 0.2), description="Translation range as a fraction of each axis"
    )
    scale: tuple[float, float] = Field(default=(0.8, 1.2), description="Isotropic scale range")
    shear_deg: tuple[float, float] = Field(default=(-20.0, 20.0), description="X-shear range")
    out_size: tuple[int, int] = Field(default=NETWORK_SIZE, description="Output (height, width)")
    rng_seed: int = Field(default=0, description="Base seed combined with each draw seed")

    @model_validator(mode="after")
    def _check_ranges(self) -> "AugmentConfig":
        errors: list[str] = []
        for name in ("rot_deg", "translate_frac", "scale", "shear_deg"):
            low, high = getattr(self, name)
            if low > high:
                errors.append(f"{name}: lower bound {low} exceeds upper bound {high}")
        if self.scale[0] <= 0.0:
            errors.append(f"scale must be positive, got {self.scale}")
        if min(self.out_size) < 2:
            errors.append(f"out_size must be at least 2x2, got {self.out_size}")
        if errors:
            raise ValueError("\n".join(errors))
        return self

    @classmethod
    def identity(cls, out_size: tuple[int, int] = NETWORK_SIZE) -> "AugmentConfig":
        return cls(
            p_hflip=0.0,
            rot_deg=(0.0, 0.0),
            translate_frac=(0.0, 0.0),
            scale=(1.0, 1.0),
            shear_deg=(0.0, 0.0),
            out_size=out_size,
        )


@dataclass(frozen=True)
class AffineParams:
    hflip: bool
    angle: float
    translate_x: float
    translate_y: float
    scale: float
    shear_x: float

    @property
    def is_identity(self) -> bool:
        return (
            self.angle == 0.0
            and self.translate_x == 0.0
            and self.translate_y == 0.0
            and self.scale == 1.0
            and self.shear_x == 0.0
        )

    def as_dict(self) -> dict:
        return asdict(self)


def sample_params(cfg: AugmentConfig, draw_seed: int) -> AffineParams:
    """Draw one transform; translations are fractions of the output size."""
    rng = np.random.default_rng((cfg.rng_seed, draw_seed))
    hflip = bool(rng.random() < cfg.p_hflip)
    angle = float(rng.uniform(*cfg.rot_deg))
    tx = float(rng.uniform(*cfg.translate_frac))
    ty = float(rng.uniform(*cfg.translate_frac))
    scale = float(rng.uniform(*cfg.scale))
    shear = float(rng.uniform(*cfg.shear_deg))
    return AffineParams(
        hflip=hflip, angle=angle, translate_x=tx, translate_y=ty, scale=scale, shear_x=shear
    )


def _warp(array: np.ndarray, params: AffineParams, mode: InterpolationMode) -> np.ndarray:
    height, width = array.shape
    tensor = torch.from_numpy(np.ascontiguousarray(array))[None]
    if params.hflip:
        tensor = TF.horizontal_flip(tensor)
    if not params.is_identity:
        tensor = TF.affine(
            tensor,
            angle=params.angle,
            translate=[params.translate_x * width, params.translate_y * height],
            scale=params.scale,
            shear=[params.shear_x, 0.0],
            interpolation=mode,
            fill=0.0,
        )
    return tensor[0].numpy()


def augment_pair(
    img: BScan, mask: ShadowMask, cfg: AugmentConfig, draw_seed: int
) -> tuple[BScan, ShadowMask]:
    """Apply one sampled transform identically to an image and its mask.

    Both are resized to ``cfg.out_size`` first. Exposed borders are filled with 0;
    ground-truth masks stay binary.
    """
    mask.check_pairs_with(img)
    params = sample_params(cfg, draw_seed)
    logger.debug(f"augment draw {draw_seed}: {params.as_dict()}")

    binary = mask.kind is MaskKind.GROUND_TRUTH_BINARY
    pixels = resize_array(img.pixels, cfg.out_size, clip=img.is_normalized)
    values = resize_array(mask.values, cfg.out_size, binary=binary)

    pixels = _warp(pixels, params, InterpolationMode.BILINEAR)
    if binary:
        values = (_warp(values, params, InterpolationMode.NEAREST) >= 0.5).astype(np.float64)
    else:
        values = _warp(values, params, InterpolationMode.BILINEAR)

    if img.is_normalized:
        pixels = np.clip(pixels, 0.0, 1.0)
    return img.with_pixels(pixels), ShadowMask(values=np.clip(values, 0.0, 1.0), kind=mask.kind)
