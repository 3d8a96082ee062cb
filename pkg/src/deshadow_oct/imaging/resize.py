import numpy as np
import torch
import torch.nn.functional as F

from deshadow_oct.imaging.bscan import BScan, MaskKind, ShadowMask

NETWORK_SIZE = (512, 512)


def _interpolate(array: np.ndarray, target: tuple[int, int], mode: str) -> np.ndarray:
    tensor = torch.from_numpy(np.ascontiguousarray(array, dtype=np.float64))[None, None]
    if mode == "bilinear":
        out = F.interpolate(tensor, size=target, mode="bilinear", align_corners=False)
    else:
        out = F.interpolate(tensor, size=target, mode="nearest-exact")
    return out[0, 0].numpy()


def resize_array(
    array: np.ndarray, target: tuple[int, int], binary: bool = False, clip: bool = True
) -> np.ndarray:
    """Resize a 2-D array; bilinear for intensities, nearest + re-binarize for binary maps."""
    target = (int(target[0]), int(target[1]))
    if tuple(array.shape) == target:
        return np.array(array, dtype=np.float64, copy=True)
    if binary:
        return (_interpolate(array, target, "nearest") >= 0.5).astype(np.float64)
    out = _interpolate(array, target, "bilinear")
    return np.clip(out, 0.0, 1.0) if clip else out


def resize(img: BScan | ShadowMask, target: tuple[int, int] = NETWORK_SIZE) -> BScan | ShadowMask:
    """Resize a B-scan or a mask to the network input size.

    B-scans and predicted masks use bilinear interpolation; ground-truth masks
    use nearest-neighbour sampling and stay strictly binary.
    """
    if isinstance(img, ShadowMask):
        binary = img.kind is MaskKind.GROUND_TRUTH_BINARY
        return ShadowMask(values=resize_array(img.values, target, binary=binary), kind=img.kind)
    return img.with_pixels(resize_array(img.pixels, target, clip=img.is_normalized))
