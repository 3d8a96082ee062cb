"""Evaluation report: per-image metrics, aggregates and exported artifacts."""

from collections.abc import Callable, Sequence
from dataclasses import dataclass
import json
import logging
import math
from pathlib import Path

import pandas as pd
from pydantic import BaseModel, Field
from scipy.stats import wilcoxon
from tqdm import tqdm

from deshadow_oct.const.column import ColumnNames, Method
from deshadow_oct.error.exceptions import UndefinedContrastError
from deshadow_oct.evaluation.compensation import CompensationExponents, compensate
from deshadow_oct.evaluation.metrics import (
    PSNR_CAP_DB,
    intralayer_contrast,
    lateral_profile,
    outside_mask_error,
    relative_improvement,
    restoration_error,
)
from deshadow_oct.evaluation.plots import plot_contrast_boxplot, plot_profiles
from deshadow_oct.evaluation.rois_io import RoiTable, split_by_layer
from deshadow_oct.imaging.bscan import BScan, Layer, RegionOfInterest, ShadowMask

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"

REPORT_JSON = "report.json"
SCHEMA_JSON = "report.schema.json"
CONTRAST_CSV = "contrast.csv"
RESTORATION_CSV = "restoration.csv"
AGGREGATES_CSV = "aggregates.csv"
PROFILES_CSV = "profiles.csv"
BOXPLOT_PNG = "contrast_boxplot.png"
PROFILES_PNG = "profiles_{stem}.png"


@dataclass(frozen=True)
class EvalSample:
    """One test image; ``ground_truth`` and ``mask`` exist for artificial shadows."""

    stem: str
    image: BScan
    mask: ShadowMask | None = None
    ground_truth: BScan | None = None


class ContrastRecord(BaseModel):
    stem: str
    layer: Layer
    method: Method
    contrast: float = Field(ge=0.0, le=1.0)
    improvement_pct: float | None = None


class RestorationRecord(BaseModel):
    stem: str
    method: Method
    mae: float = Field(ge=0.0)
    psnr: float
    outside_mae: float = Field(ge=0.0)


class AggregateRecord(BaseModel):
    layer: Layer
    method: Method
    n: int
    contrast_mean: float
    contrast_std: float
    improvement_mean: float | None = None
    improvement_std: float | None = None
    wilcoxon_p: float | None = Field(
        default=None, description="Paired signed-rank p-value against the baseline contrast"
    )


class RestorationAggregate(BaseModel):
    method: Method
    n: int
    mae_mean: float
    mae_std: float
    psnr_mean: float
    psnr_std: float
    outside_mae_mean: float
    outside_mae_std: float
    mae_improvement_pct: float | None = None


class EvalReport(BaseModel):
    """Versioned evaluation result; every contrast lies in [0, 1]."""

    schema_version: str = SCHEMA_VERSION
    config_hash: str | None = None
    checkpoint: str | None = None
    compensation: CompensationExponents | None = None
    psnr_cap_db: float = PSNR_CAP_DB
    n_images: int = 0
    n_evaluated: int = 0
    skipped: list[str] = Field(default_factory=list)
    undefined_contrast: list[str] = Field(default_factory=list)
    contrast: list[ContrastRecord] = Field(default_factory=list)
    aggregates: list[AggregateRecord] = Field(default_factory=list)
    restoration: list[RestorationRecord] | None = None
    restoration_aggregates: list[RestorationAggregate] | None = None

    def methods(self) -> list[Method]:
        return sorted({r.method for r in self.contrast}, key=lambda m: list(Method).index(m))

    def layers(self) -> list[Layer]:
        return sorted({r.layer for r in self.contrast}, key=lambda lab: list(Layer).index(lab))

    def save(self, out_dir: Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / REPORT_JSON).write_text(self.model_dump_json(indent=2))
        (out_dir / SCHEMA_JSON).write_text(json.dumps(EvalReport.model_json_schema(), indent=2))

    @classmethod
    def load(cls, path: Path) -> "EvalReport":
        return cls.model_validate_json(Path(path).read_text())


def _nan_to_none(value: float) -> float | None:
    return None if value is None or math.isnan(value) else float(value)


def _std(series: pd.Series) -> float:
    return float(series.std(ddof=0))


def paired_wilcoxon(baseline: pd.Series, other: pd.Series) -> float | None:
    """Signed-rank p-value of paired samples; None when the test is undefined."""
    diff = (other - baseline).dropna()
    if len(diff) < 2 or not diff.any():
        return None
    try:
        result = wilcoxon(baseline.loc[diff.index], other.loc[diff.index])
    except ValueError:
        return None
    return _nan_to_none(float(result.pvalue))


def aggregate_contrast(records: Sequence[ContrastRecord]) -> list[AggregateRecord]:
    """Mean and population standard deviation per (layer, method).

    Non-baseline methods also carry a paired Wilcoxon p-value over the images
    scored with both methods in that layer.
    """
    if not records:
        return []
    df = pd.DataFrame([r.model_dump() for r in records])
    # enum-free keys for the pivot
    by_image = pd.DataFrame([r.model_dump(mode="json") for r in records]).pivot_table(
        index=["layer", "stem"], columns="method", values="contrast", aggfunc="first"
    )
    out: list[AggregateRecord] = []
    for (layer, method), group in df.groupby(["layer", "method"], sort=False):
        improvement = group["improvement_pct"].dropna()
        p_value = None
        if method is not Method.BASELINE and Method.BASELINE.value in by_image.columns:
            paired = by_image.loc[layer.value]
            p_value = paired_wilcoxon(paired[Method.BASELINE.value], paired[method.value])
        out.append(
            AggregateRecord(
                layer=layer,
                method=method,
                n=len(group),
                contrast_mean=float(group["contrast"].mean()),
                contrast_std=_std(group["contrast"]),
                improvement_mean=float(improvement.mean()) if len(improvement) else None,
                improvement_std=_std(improvement) if len(improvement) else None,
                wilcoxon_p=p_value,
            )
        )
    order = {(lab, m): i for i, (lab, m) in enumerate((lab, m) for lab in Layer for m in Method)}
    return sorted(out, key=lambda a: order[(a.layer, a.method)])


def aggregate_restoration(records: Sequence[RestorationRecord]) -> list[RestorationAggregate]:
    if not records:
        return []
    df = pd.DataFrame([r.model_dump() for r in records])
    baseline_mae = df.loc[df["method"] == Method.BASELINE, "mae"]
    out: list[RestorationAggregate] = []
    for method in Method:
        group = df[df["method"] == method]
        if group.empty:
            continue
        mae_mean = float(group["mae"].mean())
        improvement = None
        if method is not Method.BASELINE and len(baseline_mae):
            improvement = _nan_to_none(relative_improvement(float(baseline_mae.mean()), mae_mean))
        out.append(
            RestorationAggregate(
                method=method,
                n=len(group),
                mae_mean=mae_mean,
                mae_std=_std(group["mae"]),
                psnr_mean=float(group["psnr"].mean()),
                psnr_std=_std(group["psnr"]),
                outside_mae_mean=float(group["outside_mae"].mean()),
                outside_mae_std=_std(group["outside_mae"]),
                mae_improvement_pct=improvement,
            )
        )
    return out


def _profile_rows(
    stem: str, layer: Layer, method: Method, img: BScan, rois: list[RegionOfInterest]
) -> list[dict]:
    top = min(roi.row for roi in rois)
    bottom = max(roi.row + roi.size for roi in rois)
    profile = lateral_profile(img, (top, bottom))
    return [
        {
            ColumnNames.STEM.value: stem,
            ColumnNames.LAYER.value: layer.value,
            ColumnNames.METHOD.value: method.value,
            ColumnNames.COLUMN.value: col,
            ColumnNames.INTENSITY.value: float(value),
        }
        for col, value in enumerate(profile)
    ]


def build_report(
    samples: Sequence[EvalSample],
    deshadow: Callable[[list[BScan]], list[BScan]],
    rois: RoiTable,
    out_dir: Path | None = None,
    with_compensation: bool = False,
    exponents: CompensationExponents | None = None,
    psnr_cap: float = PSNR_CAP_DB,
    config_hash: str | None = None,
    checkpoint: str | None = None,
) -> EvalReport:
    """Score baseline, deshadowed and (optionally) compensated images.

    Images without ROIs are skipped with a warning and listed in the report.
    When ``out_dir`` is given the JSON report, its schema, CSV exports and the
    contrast box plot are written there.
    """
    exponents = exponents or CompensationExponents()
    report = EvalReport(
        config_hash=config_hash,
        checkpoint=checkpoint,
        compensation=exponents if with_compensation else None,
        psnr_cap_db=psnr_cap,
        n_images=len(samples),
    )
    restoration: list[RestorationRecord] = []
    profile_rows: list[dict] = []

    for sample in tqdm(samples, desc="Evaluating"):
        image_rois = rois.get(sample.stem)
        if not image_rois:
            logger.warning(f"No ROIs for '{sample.stem}', skipping")
            report.skipped.append(sample.stem)
            continue

        variants = {Method.BASELINE: sample.image, Method.DESHADOWED: deshadow([sample.image])[0]}
        if with_compensation:
            variants[Method.COMPENSATED] = compensate(sample.image, exponents)

        for layer, (clear, shadowed) in split_by_layer(image_rois).items():
            try:
                values = {
                    m: intralayer_contrast(img, clear, shadowed) for m, img in variants.items()
                }
            except UndefinedContrastError as e:
                logger.warning(f"{sample.stem} {layer.value}: {e}")
                report.undefined_contrast.append(f"{sample.stem}:{layer.value}")
                continue
            for method, value in values.items():
                improvement = None
                if method is not Method.BASELINE:
                    improvement = _nan_to_none(relative_improvement(values[Method.BASELINE], value))
                report.contrast.append(
                    ContrastRecord(
                        stem=sample.stem,
                        layer=layer,
                        method=method,
                        contrast=value,
                        improvement_pct=improvement,
                    )
                )
                profile_rows.extend(
                    _profile_rows(sample.stem, layer, method, variants[method], clear + shadowed)
                )

        if sample.ground_truth is not None and sample.mask is not None:
            for method, img in variants.items():
                mae, psnr_db = restoration_error(img, sample.ground_truth, sample.mask, psnr_cap)
                restoration.append(
                    RestorationRecord(
                        stem=sample.stem,
                        method=method,
                        mae=mae,
                        psnr=psnr_db,
                        outside_mae=outside_mask_error(img, sample.ground_truth, sample.mask),
                    )
                )
        report.n_evaluated += 1

    report.aggregates = aggregate_contrast(report.contrast)
    if restoration:
        report.restoration = restoration
        report.restoration_aggregates = aggregate_restoration(restoration)

    if report.skipped:
        logger.warning(f"Skipped {len(report.skipped)} of {report.n_images} images without ROIs")
    if out_dir is not None:
        write_report(report, profile_rows, Path(out_dir))
    return report


def write_report(report: EvalReport, profile_rows: list[dict], out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    report.save(out_dir)

    contrast_df = pd.DataFrame([r.model_dump(mode="json") for r in report.contrast])
    contrast_df.to_csv(out_dir / CONTRAST_CSV, index=False)
    pd.DataFrame([a.model_dump(mode="json") for a in report.aggregates]).to_csv(
        out_dir / AGGREGATES_CSV, index=False
    )
    pd.DataFrame(profile_rows).to_csv(out_dir / PROFILES_CSV, index=False)
    if report.restoration:
        pd.DataFrame([r.model_dump(mode="json") for r in report.restoration]).to_csv(
            out_dir / RESTORATION_CSV, index=False
        )
    if not contrast_df.empty:
        plot_contrast_boxplot(contrast_df, out_dir / BOXPLOT_PNG)
    if profile_rows:
        # first evaluated image only
        stem = profile_rows[0][ColumnNames.STEM.value]
        plot_profiles(
            pd.DataFrame(profile_rows), stem, out_dir / PROFILES_PNG.format(stem=stem)
        )
