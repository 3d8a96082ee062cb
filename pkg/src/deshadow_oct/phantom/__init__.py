"""Synthetic layered phantoms, artificial shadows and automatic ROIs."""

from deshadow_oct.phantom.generator import PhantomSpec, generate_phantom, jitter_spec
from deshadow_oct.phantom.rois import auto_rois
from deshadow_oct.phantom.shadows import (
    ShadowSettings,
    ShadowSpec,
    StartMode,
    apply_shadows,
    attenuation,
    inject_shadow,
    make_validation_pair,
    place_shadows,
)

__all__ = [
    "PhantomSpec",
    "ShadowSettings",
    "ShadowSpec",
    "StartMode",
    "apply_shadows",
    "attenuation",
    "auto_rois",
    "generate_phantom",
    "inject_shadow",
    "jitter_spec",
    "make_validation_pair",
    "place_shadows",
]
