"""Energy-based adaptive attenuation compensation, used as a comparison baseline.

Per column the decompressed intensity ``M = I**decompression`` is divided by
twice the energy stored at and below each row, ``E(z) = sum_{u >= z} M(u)``.
The denominator is floored at ``E(0) * 10**(-threshold)`` so the deepest rows
are not amplified without bound. The ratio is recompressed with
``1 / compression``, raised to ``contrast`` and clipped to [0, 1].
"""

import logging

import numpy as np
from pydantic import BaseModel, Field

from deshadow_oct.error.exceptions import ValidationError
from deshadow_oct.imaging.bscan import BScan

logger = logging.getLogger(__name__)


class CompensationExponents(BaseModel):
    contrast: float = Field(default=1.0, gt=0.0, description="Exponent applied last")
    decompression: float = Field(default=4.0, gt=0.0, description="Power applied to raw pixels")
    compression: float = Field(default=4.0, gt=0.0, description="Root taken after compensation")
    threshold: float = Field(default=6.0, ge=0.0, description="Energy floor in decades below E(0)")


def cumulative_energy(decompressed: np.ndarray) -> np.ndarray:
    """Inclusive bottom-up cumulative sum along rows; non-increasing with depth."""
    return np.cumsum(decompressed[::-1], axis=0)[::-1]


def zero_energy_columns(img: BScan, exponents: CompensationExponents | None = None) -> np.ndarray:
    exponents = exponents or CompensationExponents()
    energy = cumulative_energy(np.power(img.pixels, exponents.decompression))
    return np.flatnonzero(energy[0] <= 0.0)


def compensate(img: BScan, exponents: CompensationExponents | None = None) -> BScan:
    """Adaptive compensation of a normalized B-scan.

    Columns without any energy are returned unmodified and logged.
    """
    exponents = exponents or CompensationExponents()
    if not img.is_normalized:
        raise ValidationError(f"compensate needs a normalized B-scan, got '{img.source_id}'")

    decompressed = np.power(img.pixels, exponents.decompression)
    energy = cumulative_energy(decompressed)
    surface_energy = energy[0]
    dead = surface_energy <= 0.0
    if dead.any():
        logger.warning(
            f"{img.source_id or 'image'}: {int(dead.sum())} zero-energy columns left unmodified"
        )

    floor = surface_energy * 10.0 ** (-exponents.threshold)
    denominator = 2.0 * np.maximum(energy, floor[None, :])
    ratio = np.divide(
        decompressed, denominator, out=np.zeros_like(decompressed), where=denominator > 0.0
    )
    out = np.power(np.power(ratio, 1.0 / exponents.compression), exponents.contrast)
    out[:, dead] = img.pixels[:, dead]
    return img.with_pixels(np.clip(out, 0.0, 1.0))
