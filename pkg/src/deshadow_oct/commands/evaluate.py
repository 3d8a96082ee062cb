from pathlib import Path

import click
from rich.console import Console

from deshadow_oct.commands.common import ensure_output_dir
from deshadow_oct.commands.infer import deshadow_image
from deshadow_oct.core.dataset import DatasetManager
from deshadow_oct.core.manifest import RunManifest
from deshadow_oct.error import handle_command_errors
from deshadow_oct.evaluation.report import (
    AGGREGATES_CSV,
    BOXPLOT_PNG,
    CONTRAST_CSV,
    PROFILES_CSV,
    REPORT_JSON,
    RESTORATION_CSV,
    SCHEMA_JSON,
    EvalReport,
    EvalSample,
    build_report,
)
from deshadow_oct.evaluation.rois_io import read_rois
from deshadow_oct.imaging.bscan import BScan
from deshadow_oct.training.state import ModelCheckpoint
from deshadow_oct.training.trainer import networks_from_checkpoint

console = Console()


def _print_summary(report: EvalReport) -> None:
    console.print(
        f"Evaluated {report.n_evaluated}/{report.n_images} images "
        f"({len(report.skipped)} without ROIs, {len(report.undefined_contrast)} undefined layers)"
    )
    for agg in report.aggregates:
        line = (
            f"  {agg.layer.value:<5} {agg.method.value:<12} "
            f"contrast {agg.contrast_mean:.3f} ± {agg.contrast_std:.3f}"
        )
        if agg.improvement_mean is not None:
            line += f"  improvement {agg.improvement_mean:+.1f}%"
        console.print(line, highlight=False)
    for agg in report.restoration_aggregates or []:
        console.print(
            f"  {agg.method.value:<12} MAE {agg.mae_mean:.4f}  PSNR {agg.psnr_mean:.2f} dB  "
            f"outside MAE {agg.outside_mae_mean:.4f}",
            highlight=False,
        )


@click.command()
@click.option(
    "--checkpoint",
    "-k",
    type=click.Path(path_type=Path, exists=True, dir_okay=False),
    required=True,
    help="Training checkpoint holding the remover",
)
@click.option(
    "--data-dir",
    "-d",
    type=click.Path(path_type=Path, exists=True, file_okay=False),
    required=True,
    help="Dataset with images/ and optionally masks/ and ground_truth/",
)
@click.option(
    "--roi-file",
    "-r",
    type=click.Path(path_type=Path, dir_okay=False),
    default=None,
    help="ROI table (defaults to <data-dir>/rois.tsv)",
)
@click.option(
    "--out-dir",
    "-o",
    type=click.Path(path_type=Path, file_okay=False),
    required=True,
    help="Directory for the report, CSV exports and plots",
)
@click.option(
    "--with-compensation",
    is_flag=True,
    help="Also score the attenuation-compensation baseline",
)
@click.option("--resize", "allow_resize", is_flag=True, help="Resize non-network-size inputs")
@click.option("--force", is_flag=True, help="Write into a non-empty output directory")
@handle_command_errors
def evaluate(
    checkpoint: Path,
    data_dir: Path,
    roi_file: Path | None,
    out_dir: Path,
    with_compensation: bool,
    allow_resize: bool,
    force: bool,
) -> None:
    """Score baseline and deshadowed (and compensated) images against ROIs."""
    manager = DatasetManager(data_dir)
    roi_file = roi_file or manager.roi_file
    ckpt = ModelCheckpoint.load(checkpoint)
    config, _, remover = networks_from_checkpoint(ckpt)
    rois = read_rois(roi_file, size=config.evaluation.roi_size)
    out_dir = ensure_output_dir(out_dir, force)

    network_size = tuple(config.imaging.network_size)
    samples = [
        EvalSample(stem=s.stem, image=s.image, mask=s.mask, ground_truth=s.ground_truth)
        for s in manager.load_all()
    ]

    def deshadow(imgs: list[BScan]) -> list[BScan]:
        return [deshadow_image(remover, img, network_size, allow_resize) for img in imgs]

    report = build_report(
        samples,
        deshadow,
        rois,
        out_dir=out_dir,
        with_compensation=with_compensation,
        exponents=config.compensation,
        psnr_cap=config.evaluation.psnr_cap_db,
        config_hash=ckpt.config_hash,
        checkpoint=str(checkpoint),
    )

    outputs = {
        "report": REPORT_JSON,
        "schema": SCHEMA_JSON,
        "contrast": CONTRAST_CSV,
        "aggregates": AGGREGATES_CSV,
        "profiles": PROFILES_CSV,
    }
    if report.restoration:
        outputs["restoration"] = RESTORATION_CSV
    if report.contrast:
        outputs["boxplot"] = BOXPLOT_PNG
    RunManifest(
        command="evaluate",
        config_hash=ckpt.config_hash,
        seed=config.train.rng_seed,
        config=ckpt.config,
        outputs=outputs,
        notes={
            "checkpoint": str(checkpoint),
            "roi_file": str(roi_file),
            "with_compensation": with_compensation,
        },
    ).save(out_dir)

    _print_summary(report)
    console.print(f"[green]Evaluation report saved to:[/green] {out_dir / REPORT_JSON}")
