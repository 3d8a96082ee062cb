"""Lossless single-channel raster I/O for B-scans and masks.

Only PNG and TIFF are accepted: lossy compression would corrupt the shadow
intensity statistics the whole pipeline depends on.
"""

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from deshadow_oct.error.exceptions import ImageFormatError, ValidationError
from deshadow_oct.imaging.bscan import BScan, MaskKind, ShadowMask

SUPPORTED_SUFFIXES = {".png", ".tif", ".tiff"}
_SUPPORTED_FORMATS = {"PNG", "TIFF"}

# PIL mode -> full-scale value of the stored integers
_MODE_MAX = {
    "1": 1,
    "L": 255,
    "I;16": 65535,
    "I;16B": 65535,
    "I;16L": 65535,
    "I;16N": 65535,
    # 16-bit PNGs are opened as 32-bit "I" by some Pillow versions
    "I": 65535,
}
_MULTI_CHANNEL_MODES = {
    "RGB", "RGBA", "RGBX", "CMYK", "YCbCr", "LA", "La", "P", "PA", "HSV", "LAB",
}

MASK_THRESHOLD_8BIT = 127


def _check_suffix(path: Path) -> None:
    if path.suffix.lower() not in SUPPORTED_SUFFIXES:
        raise ImageFormatError(
            f"Unsupported file format '{path.suffix}' for {path}; "
            f"use one of {sorted(SUPPORTED_SUFFIXES)}"
        )


def _read_raw(path: Path) -> tuple[np.ndarray, int]:
    """Read a single-channel raster and return (integer array, full-scale value)."""
    path = Path(path)
    _check_suffix(path)
    if not path.exists():
        raise FileNotFoundError(f"Image file not found: {path}")

    try:
        with Image.open(path) as image:
            image.load()
            fmt, mode = image.format, image.mode
            if fmt not in _SUPPORTED_FORMATS:
                raise ImageFormatError(f"{path}: {fmt} is not a lossless PNG/TIFF raster")
            if mode in _MULTI_CHANNEL_MODES:
                raise ImageFormatError(f"{path}: expected a single channel, got mode {mode}")
            if mode not in _MODE_MAX:
                raise ImageFormatError(f"{path}: unsupported pixel mode {mode}, need 8 or 16 bit")
            if mode == "1":
                array = np.asarray(image.convert("L"), dtype=np.int64)
                max_value = 255
            else:
                array = np.asarray(image, dtype=np.int64)
                max_value = _MODE_MAX[mode]
    except (UnidentifiedImageError, OSError) as e:
        raise ImageFormatError(f"Unreadable image file {path}: {e}") from e

    if array.ndim != 2:
        raise ImageFormatError(f"{path}: expected a 2-D raster, got shape {array.shape}")
    if array.min() < 0 or array.max() > max_value:
        raise ImageFormatError(f"{path}: pixel values exceed the {max_value} full scale")
    return array, max_value


def load_image(path: Path) -> BScan:
    """Load an 8- or 16-bit raster and rescale it to [0, 1] by the format maximum."""
    path = Path(path)
    array, max_value = _read_raw(path)
    return BScan(pixels=array / float(max_value), source_id=path.stem, is_normalized=True)


def save_image(img: BScan, path: Path, bit_depth: int = 16) -> None:
    """Quantize a normalized B-scan to 8 or 16 bits and write it losslessly."""
    path = Path(path)
    _check_suffix(path)
    if bit_depth not in (8, 16):
        raise ValidationError(f"bit_depth must be 8 or 16, got {bit_depth}")
    if not img.is_normalized:
        raise ValidationError(f"Cannot save un-normalized B-scan '{img.source_id}'")

    max_value = (1 << bit_depth) - 1
    quantized = np.rint(np.clip(img.pixels, 0.0, 1.0) * max_value)
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(quantized.astype(dtype)).save(path)


def load_mask(path: Path) -> ShadowMask:
    """Load a ground-truth shadow mask stored as {0, max}.

    Raises:
        ValidationError: If any pixel holds an intermediate gray value.
    """
    path = Path(path)
    array, max_value = _read_raw(path)
    offending = int(((array != 0) & (array != max_value)).sum())
    if offending:
        raise ValidationError(
            f"{path}: mask has {offending} pixels that are neither 0 nor {max_value}"
        )
    threshold = MASK_THRESHOLD_8BIT if max_value == 255 else max_value // 2
    values = (array > threshold).astype(np.float64)
    return ShadowMask(values=values, kind=MaskKind.GROUND_TRUTH_BINARY)


def save_mask(mask: ShadowMask, path: Path) -> None:
    """Write a binary mask as an 8-bit {0, 255} raster."""
    path = Path(path)
    _check_suffix(path)
    if not mask.is_binary:
        raise ValidationError("Only ground-truth binary masks can be saved as mask files")
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray((mask.values * 255).astype(np.uint8)).save(path)
