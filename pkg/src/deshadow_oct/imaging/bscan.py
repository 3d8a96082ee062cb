"""Core data model: B-scans, shadow masks and regions of interest.

All three types are immutable after construction. Pixel arrays are copied on
construction and marked read-only, so instances can be shared across threads.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from deshadow_oct.error.exceptions import ShapeError, ValidationError


class MaskKind(Enum):
    GROUND_TRUTH_BINARY = "ground_truth_binary"
    PREDICTED_SOFT = "predicted_soft"


class Layer(Enum):
    """Retinal layers in which intralayer contrast is measured."""

    RNFL = "RNFL"
    IPL = "IPL"
    PR = "PR"
    RPE = "RPE"


def _frozen_array(values: np.ndarray) -> np.ndarray:
    array = np.array(values, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class BScan:
    """A single-channel OCT B-scan.

    Attributes:
        pixels: 2-D intensity array; rows are axial depth (row 0 is the
            shallowest, vitreous side), columns are lateral A-scan positions.
        source_id: Opaque identifier, usually the file stem.
        is_normalized: Whether every pixel is guaranteed to lie in [0, 1].
    """

    pixels: np.ndarray
    source_id: str = ""
    is_normalized: bool = True

    def __post_init__(self) -> None:
        pixels = _frozen_array(self.pixels)
        errors: list[str] = []

        if pixels.ndim != 2:
            raise ShapeError(f"B-scan must be 2-D, got shape {pixels.shape}")
        if pixels.shape[0] < 2 or pixels.shape[1] < 2:
            errors.append(f"B-scan must be at least 2x2, got {pixels.shape}")
        if not np.all(np.isfinite(pixels)):
            errors.append(f"{int((~np.isfinite(pixels)).sum())} non-finite pixels")
        elif self.is_normalized:
            out_of_range = int(((pixels < 0.0) | (pixels > 1.0)).sum())
            if out_of_range:
                errors.append(f"{out_of_range} pixels outside [0, 1] in a normalized B-scan")

        if errors:
            raise ValidationError("\n".join(errors))
        object.__setattr__(self, "pixels", pixels)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def with_pixels(self, pixels: np.ndarray) -> "BScan":
        """Return a new B-scan with the same metadata and new pixels."""
        return BScan(pixels=pixels, source_id=self.source_id, is_normalized=self.is_normalized)


@dataclass(frozen=True)
class ShadowMask:
    """Per-pixel shadow map aligned to a B-scan.

    Ground-truth masks hold only {0, 1}; predicted masks are continuous in [0, 1].
    """

    values: np.ndarray
    kind: MaskKind = MaskKind.GROUND_TRUTH_BINARY

    def __post_init__(self) -> None:
        values = _frozen_array(self.values)
        errors: list[str] = []

        if values.ndim != 2:
            raise ShapeError(f"Shadow mask must be 2-D, got shape {values.shape}")
        out_of_range = int(((values < 0.0) | (values > 1.0) | ~np.isfinite(values)).sum())
        if out_of_range:
            errors.append(f"{out_of_range} mask values outside [0, 1]")
        if self.kind is MaskKind.GROUND_TRUTH_BINARY:
            non_binary = int(((values != 0.0) & (values != 1.0)).sum())
            if non_binary:
                errors.append(f"{non_binary} non-binary values in a ground-truth mask")

        if errors:
            raise ValidationError("\n".join(errors))
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.values.shape[0]), int(self.values.shape[1]))

    @property
    def is_binary(self) -> bool:
        return self.kind is MaskKind.GROUND_TRUTH_BINARY

    def check_pairs_with(self, img: BScan) -> None:
        if self.shape != img.shape:
            raise ShapeError(f"Mask shape {self.shape} does not match B-scan shape {img.shape}")


@dataclass(frozen=True)
class RegionOfInterest:
    """Square measurement window; (row, col) is its top-left pixel."""

    row: int
    col: int
    layer_label: Layer
    shadowed: bool
    size: int = field(default=5)

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValidationError(f"ROI size must be positive, got {self.size}")
        if self.row < 0 or self.col < 0:
            raise ValidationError(f"ROI origin must be non-negative, got ({self.row}, {self.col})")

    def fits(self, shape: tuple[int, int]) -> bool:
        return self.row + self.size <= shape[0] and self.col + self.size <= shape[1]

    def window(self, pixels: np.ndarray) -> np.ndarray:
        """Return the size x size pixel window, validating bounds."""
        if not self.fits(pixels.shape):
            raise ValidationError(
                f"ROI at ({self.row}, {self.col}) size {self.size} exceeds image {pixels.shape}"
            )
        return pixels[self.row : self.row + self.size, self.col : self.col + self.size]
