"""Contrast, profile and restoration metrics, the compensation baseline and reports."""

from deshadow_oct.evaluation.compensation import (
    CompensationExponents,
    compensate,
    cumulative_energy,
    zero_energy_columns,
)
from deshadow_oct.evaluation.metrics import (
    PSNR_CAP_DB,
    intralayer_contrast,
    lateral_profile,
    layer_profile,
    outside_mask_error,
    psnr,
    relative_improvement,
    restoration_error,
)
from deshadow_oct.evaluation.report import EvalReport, EvalSample, build_report
from deshadow_oct.evaluation.rois_io import read_rois, split_by_layer, write_rois

__all__ = [
    "PSNR_CAP_DB",
    "CompensationExponents",
    "EvalReport",
    "EvalSample",
    "build_report",
    "compensate",
    "cumulative_energy",
    "intralayer_contrast",
    "lateral_profile",
    "layer_profile",
    "outside_mask_error",
    "psnr",
    "read_rois",
    "relative_improvement",
    "restoration_error",
    "split_by_layer",
    "write_rois",
    "zero_energy_columns",
]
