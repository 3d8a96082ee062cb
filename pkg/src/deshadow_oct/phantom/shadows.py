"""Artificial exponential-decay shadows.

The attenuation below the shadow origin is ``exp(-(i - start_row) / alpha)``,
with ``alpha`` a decay length in pixels.
"""

from dataclasses import asdict, dataclass
from enum import Enum
import logging

import numpy as np
from pydantic import BaseModel, Field, model_validator

from deshadow_oct.error.exceptions import PlacementError, ValidationError
from deshadow_oct.imaging.bscan import BScan, MaskKind, ShadowMask

logger = logging.getLogger(__name__)

# --- constants ---
WIDTH_RANGE = (1, 100)
ALPHA_RANGE = (100.0, 300.0)
MAX_PLACEMENT_ATTEMPTS = 200


class StartMode(Enum):
    SURFACE = "surface"
    TOP = "top"


@dataclass(frozen=True)
class ShadowSpec:
    """One vertical shadow band: columns [col_start, col_start + width)."""

    col_start: int
    width: int
    alpha: float
    start_row: int = 0

    def __post_init__(self) -> None:
        errors: list[str] = []
        if not WIDTH_RANGE[0] <= self.width <= WIDTH_RANGE[1]:
            errors.append(f"shadow width must be in {list(WIDTH_RANGE)}, got {self.width}")
        if not ALPHA_RANGE[0] <= self.alpha <= ALPHA_RANGE[1]:
            errors.append(f"shadow alpha must be in {list(ALPHA_RANGE)}, got {self.alpha}")
        if self.col_start < 0:
            errors.append(f"col_start must be non-negative, got {self.col_start}")
        if self.start_row < 0:
            errors.append(f"start_row must be non-negative, got {self.start_row}")
        if errors:
            raise ValidationError("\n".join(errors))

    @property
    def col_end(self) -> int:
        return self.col_start + self.width

    def as_dict(self) -> dict:
        return asdict(self)


class ShadowSettings(BaseModel):
    """Ranges the artificial shadow parameters are drawn from."""

    n_shadows: int = Field(default=2, ge=1, description="Shadows injected per image")
    width_min: int = Field(default=WIDTH_RANGE[0], ge=WIDTH_RANGE[0], description="Min width")
    width_max: int = Field(default=WIDTH_RANGE[1], le=WIDTH_RANGE[1], description="Max width")
    alpha_min: float = Field(default=ALPHA_RANGE[0], ge=ALPHA_RANGE[0], description="Min decay")
    alpha_max: float = Field(default=ALPHA_RANGE[1], le=ALPHA_RANGE[1], description="Max decay")
    start_mode: StartMode = Field(
        default=StartMode.SURFACE,
        description="Shadows begin at the retinal surface or at the image top",
    )
    min_gap: int = Field(default=1, ge=1, description="Minimum clear columns between bands")
    max_attempts: int = Field(
        default=MAX_PLACEMENT_ATTEMPTS, ge=1, description="Placement retries before giving up"
    )

    @model_validator(mode="after")
    def _check_ranges(self) -> "ShadowSettings":
        if self.width_min > self.width_max:
            raise ValueError(f"width_min {self.width_min} > width_max {self.width_max}")
        if self.alpha_min > self.alpha_max:
            raise ValueError(f"alpha_min {self.alpha_min} > alpha_max {self.alpha_max}")
        return self


def attenuation(offsets: np.ndarray, alpha: float) -> np.ndarray:
    """Multiplier for pixels ``offsets`` rows below the shadow origin."""
    return np.exp(-np.asarray(offsets, dtype=np.float64) / alpha)


def inject_shadow(img: BScan, spec: ShadowSpec) -> tuple[BScan, ShadowMask]:
    """Darken one column band with depth-decaying attenuation.

    Returns:
        (shadowed image, binary mask that is 1 exactly on the attenuated pixels)

    Raises:
        ValidationError: If the band or start row lies outside the image.
    """
    if spec.col_end > img.width:
        raise ValidationError(
            f"Shadow columns [{spec.col_start}, {spec.col_end}) exceed image width {img.width}"
        )
    if spec.start_row >= img.height:
        raise ValidationError(
            f"Shadow start row {spec.start_row} outside image height {img.height}"
        )

    pixels = np.array(img.pixels, copy=True)
    offsets = np.arange(img.height - spec.start_row, dtype=np.float64)
    band = np.s_[spec.start_row :, spec.col_start : spec.col_end]
    pixels[band] = pixels[band] * attenuation(offsets, spec.alpha)[:, None]

    mask = np.zeros(img.shape, dtype=np.float64)
    mask[band] = 1.0
    return img.with_pixels(pixels), ShadowMask(values=mask, kind=MaskKind.GROUND_TRUTH_BINARY)


def _overlaps(col_start: int, width: int, placed: list[ShadowSpec], min_gap: int) -> bool:
    for other in placed:
        if col_start < other.col_end + min_gap and other.col_start < col_start + width + min_gap:
            return True
    return False


def place_shadows(
    shape: tuple[int, int],
    settings: ShadowSettings,
    rng: np.random.Generator,
    surface: int | np.ndarray = 0,
) -> list[ShadowSpec]:
    """Draw non-overlapping shadow bands with uniform widths and decay lengths.

    ``surface`` is the tissue surface row, either one row or one per column. In
    surface mode a band starts at the deepest surface row under its columns.

    Raises:
        PlacementError: If the bands cannot be placed within the retry budget.
    """
    height, width = shape
    surface_rows = np.broadcast_to(np.asarray(surface, dtype=np.float64), (width,))
    placed: list[ShadowSpec] = []

    for attempt in range(settings.max_attempts):
        if len(placed) == settings.n_shadows:
            break
        band_width = int(rng.integers(settings.width_min, settings.width_max + 1))
        alpha = float(rng.uniform(settings.alpha_min, settings.alpha_max))
        if band_width > width:
            continue
        col_start = int(rng.integers(0, width - band_width + 1))
        if _overlaps(col_start, band_width, placed, settings.min_gap):
            logger.debug(f"Shadow placement attempt {attempt} overlaps, retrying")
            continue
        start_row = 0
        if settings.start_mode is StartMode.SURFACE:
            start_row = int(np.ceil(surface_rows[col_start : col_start + band_width].max()))
        placed.append(
            ShadowSpec(col_start=col_start, width=band_width, alpha=alpha, start_row=start_row)
        )

    if len(placed) < settings.n_shadows:
        raise PlacementError(
            f"Could not place {settings.n_shadows} non-overlapping shadows in a "
            f"{height}x{width} image after {settings.max_attempts} attempts"
        )
    return sorted(placed, key=lambda s: s.col_start)


def apply_shadows(img: BScan, specs: list[ShadowSpec]) -> tuple[BScan, ShadowMask]:
    """Inject several bands; the returned mask is their union."""
    shadowed = img
    union = np.zeros(img.shape, dtype=np.float64)
    for spec in specs:
        shadowed, mask = inject_shadow(shadowed, spec)
        union = np.maximum(union, mask.values)
    return shadowed, ShadowMask(values=union, kind=MaskKind.GROUND_TRUTH_BINARY)


def make_validation_pair(
    img: BScan,
    n_shadows: int = 2,
    rng_seed: int = 0,
    settings: ShadowSettings | None = None,
    surface: int | np.ndarray = 0,
) -> tuple[BScan, ShadowMask, BScan]:
    """Build a (shadowed, mask, ground truth) triple from a shadow-free image.

    The ground truth is ``img`` itself.

    Raises:
        ValidationError: If the image is not wider than two of the widest bands.
    """
    settings = (settings or ShadowSettings()).model_copy(update={"n_shadows": n_shadows})
    if img.width <= 2 * settings.width_max:
        raise ValidationError(
            f"Image width {img.width} leaves no room for shadows up to "
            f"{settings.width_max} columns wide; need more than {2 * settings.width_max}"
        )
    rng = np.random.default_rng(rng_seed)
    specs = place_shadows(img.shape, settings, rng, surface=surface)
    shadowed, mask = apply_shadows(img, specs)
    return shadowed, mask, img
