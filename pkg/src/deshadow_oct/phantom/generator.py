"""Synthetic layered OCT-like B-scans with known shadow-free ground truth."""

import numpy as np
from pydantic import BaseModel, Field, model_validator

from deshadow_oct.error.exceptions import ValidationError
from deshadow_oct.imaging.bscan import BScan, Layer


class PhantomSpec(BaseModel):
    """Geometry and intensity description of one phantom B-scan.

    Layer ``k`` spans from boundary ``k-1`` (or the image top) to boundary ``k``
    (or the image bottom), so there is always one more layer than boundaries.
    """

    height: int = Field(default=256, ge=2, description="Image height in pixels (axial)")
    width: int = Field(default=256, ge=2, description="Image width in pixels (lateral)")
    layer_boundaries: tuple[float, ...] = Field(
        default=(0.15, 0.30, 0.45, 0.60, 0.72),
        description="Ordered depth fractions in (0, 1) separating consecutive layers",
    )
    layer_mean_intensities: tuple[float, ...] = Field(
        default=(0.03, 0.75, 0.45, 0.55, 0.85, 0.35),
        description="Mean intensity of every layer, top to bottom",
    )
    layer_labels: tuple[str | None, ...] = Field(
        default=(None, "RNFL", "IPL", "PR", "RPE", None),
        description="Retinal layer name per layer (None for unlabeled tissue)",
    )
    speckle_std: float = Field(default=0.05, ge=0.0, description="Multiplicative noise scale")
    boundary_wobble_amplitude: float = Field(
        default=3.0, ge=0.0, description="Sinusoidal boundary displacement in pixels"
    )
    boundary_wobble_period: float = Field(
        default=128.0, gt=0.0, description="Lateral period of the boundary wobble in pixels"
    )
    rng_seed: int = Field(default=0, description="Seed for speckle and wobble phase")

    @model_validator(mode="after")
    def _check_layers(self) -> "PhantomSpec":
        errors: list[str] = []
        bounds = self.layer_boundaries
        if any(not 0.0 < b < 1.0 for b in bounds):
            errors.append(f"layer_boundaries must lie in (0, 1), got {bounds}")
        if any(b1 >= b2 for b1, b2 in zip(bounds, bounds[1:])):
            errors.append(f"layer_boundaries must be strictly increasing, got {bounds}")
        if len(self.layer_mean_intensities) != len(bounds) + 1:
            errors.append(
                f"need {len(bounds) + 1} layer_mean_intensities, "
                f"got {len(self.layer_mean_intensities)}"
            )
        if any(not 0.0 <= m <= 1.0 for m in self.layer_mean_intensities):
            errors.append("layer_mean_intensities must lie in [0, 1]")
        if (
            "layer_labels" not in self.model_fields_set
            and len(self.layer_labels) != len(bounds) + 1
        ):
            # custom geometry without labels: no ROI layers
            self.layer_labels = ()
        if len(self.layer_labels) not in (0, len(bounds) + 1):
            errors.append(f"need {len(bounds) + 1} layer_labels, got {len(self.layer_labels)}")
        valid_labels = {layer.value for layer in Layer}
        unknown = {lab for lab in self.layer_labels if lab is not None and lab not in valid_labels}
        if unknown:
            errors.append(f"unknown layer labels {sorted(unknown)}")
        if errors:
            raise ValueError("\n".join(errors))
        return self

    @property
    def n_layers(self) -> int:
        return len(self.layer_boundaries) + 1

    def boundary_rows(self) -> np.ndarray:
        """Nominal (wobble-free) boundary rows."""
        return np.asarray(self.layer_boundaries, dtype=np.float64) * self.height

    def boundary_profiles(self, rng: np.random.Generator | None = None) -> np.ndarray:
        """Wobbled row of every boundary at every column, shape (n_boundaries, width).

        The wobble phases are the first draws of ``rng`` (by default a generator
        seeded with ``rng_seed``), exactly as in ``generate_phantom``.
        """
        rng = rng if rng is not None else np.random.default_rng(self.rng_seed)
        columns = np.arange(self.width, dtype=np.float64)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=len(self.layer_boundaries))
        wobble = self.boundary_wobble_amplitude * np.sin(
            2.0 * np.pi * columns[None, :] / self.boundary_wobble_period + phases[:, None]
        )
        return self.boundary_rows()[:, None] + wobble

    def surface_rows(self) -> np.ndarray:
        """Wobbled first boundary per column; zeros without boundaries."""
        if not self.layer_boundaries:
            return np.zeros(self.width)
        return self.boundary_profiles()[0]

    def surface_row(self) -> int:
        """First row lying inside the top tissue layer at every column."""
        return int(np.ceil(self.surface_rows().max()))

    def label_of(self, layer_index: int) -> Layer | None:
        if not self.layer_labels:
            return None
        label = self.layer_labels[layer_index]
        return Layer(label) if label is not None else None


def _check_degenerate(spec: PhantomSpec) -> None:
    rows = spec.boundary_rows()
    gaps = np.diff(np.concatenate([[0.0], rows, [float(spec.height)]]))
    min_gap = 2.0 * spec.boundary_wobble_amplitude + 1.0
    if len(rows) and np.any(gaps < min_gap):
        raise ValidationError(
            f"Degenerate phantom: layer thickness {gaps.min():.1f}px is below "
            f"{min_gap:.1f}px, boundaries would overlap with wobble "
            f"{spec.boundary_wobble_amplitude}px"
        )


def generate_phantom(spec: PhantomSpec) -> tuple[BScan, np.ndarray]:
    """Generate a layered phantom and its per-pixel layer label map.

    Returns:
        (B-scan clipped to [0, 1], integer layer map of the same shape).
        The result is fully determined by ``spec.rng_seed``.
    """
    _check_degenerate(spec)
    rng = np.random.default_rng(spec.rng_seed)
    height, width = spec.height, spec.width
    # (n_boundaries, width)
    boundaries = spec.boundary_profiles(rng)

    rows = np.arange(height, dtype=np.float64)[:, None]
    layer_map = np.zeros((height, width), dtype=np.int64)
    for boundary in boundaries:
        layer_map += (rows >= boundary[None, :]).astype(np.int64)

    means = np.asarray(spec.layer_mean_intensities, dtype=np.float64)
    pixels = means[layer_map]
    if spec.speckle_std > 0.0:
        pixels = pixels * (1.0 + spec.speckle_std * rng.standard_normal((height, width)))

    return BScan(pixels=np.clip(pixels, 0.0, 1.0), source_id=f"phantom_{spec.rng_seed}"), layer_map


def jitter_spec(
    spec: PhantomSpec, seed: int, mean_jitter: float = 0.0, boundary_jitter: float = 0.0
) -> PhantomSpec:
    """Copy of ``spec`` with uniformly perturbed layer means and boundary fractions.

    The copy uses ``seed`` for its own speckle and wobble. Perturbed boundaries
    that would lose their order fall back to the nominal ones.
    """
    rng = np.random.default_rng(seed)
    means = np.asarray(spec.layer_mean_intensities, dtype=np.float64)
    means = np.clip(means + rng.uniform(-mean_jitter, mean_jitter, size=len(means)), 0.0, 1.0)
    nominal = np.asarray(spec.layer_boundaries, dtype=np.float64)
    bounds = nominal + rng.uniform(-boundary_jitter, boundary_jitter, size=len(nominal))
    if np.any(np.diff(bounds) <= 0.0) or np.any((bounds <= 0.0) | (bounds >= 1.0)):
        bounds = nominal

    data = spec.model_dump()
    data.update(
        layer_mean_intensities=tuple(float(m) for m in means),
        layer_boundaries=tuple(float(b) for b in bounds),
        rng_seed=int(seed),
    )
    return PhantomSpec.model_validate(data)
