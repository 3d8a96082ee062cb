"""B-scan and mask data model, lossless I/O and resizing."""

from deshadow_oct.imaging.bscan import BScan, Layer, MaskKind, RegionOfInterest, ShadowMask
from deshadow_oct.imaging.io import load_image, load_mask, save_image, save_mask
from deshadow_oct.imaging.resize import NETWORK_SIZE, resize, resize_array

__all__ = [
    "NETWORK_SIZE",
    "BScan",
    "Layer",
    "MaskKind",
    "RegionOfInterest",
    "ShadowMask",
    "load_image",
    "load_mask",
    "resize",
    "resize_array",
    "save_image",
    "save_mask",
]
