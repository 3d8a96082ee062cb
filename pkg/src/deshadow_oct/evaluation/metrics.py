"""Image quality metrics: intralayer contrast, lateral profiles and restoration error."""

from collections.abc import Sequence

import numpy as np

from deshadow_oct.error.exceptions import UndefinedContrastError, ValidationError
from deshadow_oct.imaging.bscan import BScan, RegionOfInterest, ShadowMask

# --- constants ---
PSNR_CAP_DB = 100.0
ROI_SIZE = 5


def _check_rois(
    img: BScan, rois_clear: Sequence[RegionOfInterest], rois_shadow: Sequence[RegionOfInterest]
) -> None:
    errors: list[str] = []
    if not rois_clear or not rois_shadow:
        errors.append(
            f"need clear and shadowed ROIs, got {len(rois_clear)} and {len(rois_shadow)}"
        )
    labels = {roi.layer_label for roi in [*rois_clear, *rois_shadow]}
    if len(labels) > 1:
        errors.append(f"ROIs mix layers {sorted(label.value for label in labels)}")
    if any(roi.shadowed for roi in rois_clear):
        errors.append("a clear ROI is flagged as shadowed")
    if not all(roi.shadowed for roi in rois_shadow):
        errors.append("a shadowed ROI is flagged as clear")
    for roi in [*rois_clear, *rois_shadow]:
        if roi.size != ROI_SIZE:
            errors.append(f"ROI at ({roi.row}, {roi.col}) is {roi.size}x{roi.size}, not 5x5")
        elif not roi.fits(img.shape):
            errors.append(f"ROI at ({roi.row}, {roi.col}) lies outside image {img.shape}")
    if errors:
        raise ValidationError("\n".join(errors))


def intralayer_contrast(
    img: BScan, rois_clear: Sequence[RegionOfInterest], rois_shadow: Sequence[RegionOfInterest]
) -> float:
    """|I1 - I2| / (I1 + I2) with I1, I2 the pooled means of the clear and shadowed windows.

    0 means no visible shadow, 1 a fully dark shadow.

    Raises:
        UndefinedContrastError: If both pooled means are zero.
    """
    _check_rois(img, rois_clear, rois_shadow)
    i1 = float(np.concatenate([roi.window(img.pixels).ravel() for roi in rois_clear]).mean())
    i2 = float(np.concatenate([roi.window(img.pixels).ravel() for roi in rois_shadow]).mean())
    if i1 + i2 == 0.0:
        raise UndefinedContrastError(
            f"{img.source_id or 'image'}: clear and shadowed regions are both zero"
        )
    return abs(i1 - i2) / (i1 + i2)


def lateral_profile(
    img: BScan, layer_band: tuple[int, int], cols: range | None = None
) -> np.ndarray:
    """Per-column mean intensity over rows [top, bottom)."""
    top, bottom = layer_band
    cols = cols if cols is not None else range(img.width)
    if not 0 <= top < bottom <= img.height:
        raise ValidationError(f"Empty or out-of-bounds band [{top}, {bottom}) for {img.shape}")
    if len(cols) == 0 or cols.start < 0 or cols.stop > img.width:
        raise ValidationError(f"Columns {cols} outside image width {img.width}")
    return img.pixels[top:bottom, cols.start : cols.stop : cols.step].mean(axis=0)


def layer_profile(img: BScan, layer_map: np.ndarray, layer_index: int) -> np.ndarray:
    """Per-column mean over the pixels of one layer; follows boundary wobble exactly."""
    if layer_map.shape != img.shape:
        raise ValidationError(f"Layer map {layer_map.shape} does not match image {img.shape}")
    inside = layer_map == layer_index
    counts = inside.sum(axis=0)
    if np.any(counts == 0):
        raise ValidationError(f"Layer {layer_index} is missing from some columns")
    return (img.pixels * inside).sum(axis=0) / counts


def psnr(mse: float, cap: float = PSNR_CAP_DB) -> float:
    if mse <= 0.0:
        return cap
    return float(min(10.0 * np.log10(1.0 / mse), cap))


def restoration_error(
    deshadowed: BScan, ground_truth: BScan, mask: ShadowMask, psnr_cap: float = PSNR_CAP_DB
) -> tuple[float, float]:
    """MAE and PSNR (dB, peak 1.0, capped) over the masked pixels only."""
    mask.check_pairs_with(deshadowed)
    mask.check_pairs_with(ground_truth)
    inside = mask.values >= 0.5
    if not inside.any():
        raise ValidationError("restoration_error needs a non-empty mask")
    diff = deshadowed.pixels[inside] - ground_truth.pixels[inside]
    return float(np.abs(diff).mean()), psnr(float((diff**2).mean()), psnr_cap)


def outside_mask_error(deshadowed: BScan, ground_truth: BScan, mask: ShadowMask) -> float:
    """MAE over the pixels outside the mask; 0 when the mask covers the image."""
    mask.check_pairs_with(deshadowed)
    mask.check_pairs_with(ground_truth)
    outside = mask.values < 0.5
    if not outside.any():
        return 0.0
    return float(np.abs(deshadowed.pixels[outside] - ground_truth.pixels[outside]).mean())


def relative_improvement(baseline: float, value: float) -> float:
    """(baseline - value) / baseline in percent; NaN when the baseline is 0."""
    if baseline == 0.0:
        return float("nan")
    return (baseline - value) / baseline * 100.0
