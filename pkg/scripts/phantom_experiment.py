#!/usr/bin/env python3
"""End-to-end phantom experiment: simulate, train, evaluate and check acceptance.

Training phantoms and held-out test phantoms come from different simulation
seeds. The test set is scored with and without the compensation baseline and
three criteria are checked:

- mean intralayer contrast drops by at least 25% after deshadowing
- masked-region MAE against ground truth improves by at least 30%
- MAE outside the injected masks stays below 0.02
"""

from pathlib import Path
import sys

import click
import pandas as pd
from rich.console import Console

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from deshadow_oct.commands.infer import deshadow_image
from deshadow_oct.commands.simulate import write_phantom_dataset
from deshadow_oct.const.column import Method
from deshadow_oct.core.config import Config, load_config
from deshadow_oct.core.dataset import ROI_FILE, DatasetManager
from deshadow_oct.evaluation.report import EvalReport, EvalSample, build_report
from deshadow_oct.evaluation.rois_io import read_rois
from deshadow_oct.nets.backbone import backbone_from_config
from deshadow_oct.training.state import CHECKPOINT_DIR, LATEST_CHECKPOINT, ModelCheckpoint
from deshadow_oct.training.trainer import PairedData, networks_from_checkpoint, run_schedule

console = Console()

# --- constants ---

CONTRAST_DROP_PCT = 25.0
MAE_IMPROVEMENT_PCT = 30.0
OUTSIDE_MAE_MAX = 0.02
TEST_SEED_OFFSET = 1_000_003


def _with_simulation(config: Config, n_images: int, seed: int) -> Config:
    simulation = config.simulation.model_copy(update={"n_images": n_images, "seed": seed})
    return config.model_copy(update={"simulation": simulation})


def _evaluate(config: Config, checkpoint: Path, test_dir: Path, out_dir: Path) -> EvalReport:
    _, _, remover = networks_from_checkpoint(ModelCheckpoint.load(checkpoint))
    size = tuple(config.imaging.network_size)
    samples = [
        EvalSample(stem=s.stem, image=s.image, mask=s.mask, ground_truth=s.ground_truth)
        for s in DatasetManager(test_dir).load_all(require_masks=True)
    ]
    return build_report(
        samples,
        lambda imgs: [deshadow_image(remover, img, size, allow_resize=True) for img in imgs],
        read_rois(test_dir / ROI_FILE, size=config.evaluation.roi_size),
        out_dir=out_dir,
        with_compensation=True,
        exponents=config.compensation,
        psnr_cap=config.evaluation.psnr_cap_db,
        config_hash=config.config_hash(),
        checkpoint=str(checkpoint),
    )


def check_acceptance(report: EvalReport) -> pd.DataFrame:
    """One row per criterion with the measured value and a pass flag."""
    contrast = pd.DataFrame([r.model_dump() for r in report.contrast])
    means = contrast.groupby("method")["contrast"].mean()
    baseline = float(means[Method.BASELINE])
    deshadowed = float(means[Method.DESHADOWED])
    contrast_drop = (baseline - deshadowed) / baseline * 100.0 if baseline else float("nan")

    restoration = {a.method: a for a in report.restoration_aggregates or []}
    desh = restoration.get(Method.DESHADOWED)
    mae_improvement = desh.mae_improvement_pct if desh else None
    outside_mae = desh.outside_mae_mean if desh else None

    rows = [
        {
            "criterion": "contrast drop (%)",
            "value": contrast_drop,
            "threshold": f">= {CONTRAST_DROP_PCT}",
            "passed": contrast_drop >= CONTRAST_DROP_PCT,
        },
        {
            "criterion": "masked MAE improvement (%)",
            "value": mae_improvement,
            "threshold": f">= {MAE_IMPROVEMENT_PCT}",
            "passed": mae_improvement is not None and mae_improvement >= MAE_IMPROVEMENT_PCT,
        },
        {
            "criterion": "outside-mask MAE",
            "value": outside_mae,
            "threshold": f"< {OUTSIDE_MAE_MAX}",
            "passed": outside_mae is not None and outside_mae < OUTSIDE_MAE_MAX,
        },
    ]
    return pd.DataFrame(rows)


@click.command()
@click.option(
    "--config",
    "config_path",
    type=click.Path(path_type=Path, exists=True),
    default=Path(__file__).parent.parent / "configs" / "phantom_experiment.yaml",
)
@click.option("--out-dir", type=click.Path(path_type=Path), default="output/phantom_experiment")
@click.option("--n-test", type=int, default=20, show_default=True, help="Held-out phantoms")
@click.option("--skip-train", is_flag=True, help="Reuse the latest checkpoint in --out-dir")
def main(config_path: Path, out_dir: Path, n_test: int, skip_train: bool):
    """Run the phantom experiment."""
    config = load_config(config_path)
    train_dir, test_dir = out_dir / "train_data", out_dir / "test_data"
    run_dir, eval_dir = out_dir / "run", out_dir / "eval"
    checkpoint = run_dir / CHECKPOINT_DIR / LATEST_CHECKPOINT

    if not skip_train:
        console.print(f"Simulating {config.simulation.n_images} training phantoms...")
        write_phantom_dataset(config, train_dir)
        samples = DatasetManager(train_dir).load_all(require_masks=True)
        data = PairedData.from_samples(samples, tuple(config.imaging.network_size))
        final = run_schedule(data, config, backbone_from_config(config.backbone), run_dir)
        console.print(f"Training finished at position {final.next_position}")

    console.print(f"Simulating {n_test} held-out phantoms...")
    test_config = _with_simulation(config, n_test, config.simulation.seed + TEST_SEED_OFFSET)
    write_phantom_dataset(test_config, test_dir)

    report = _evaluate(config, checkpoint, test_dir, eval_dir)
    results = check_acceptance(report)
    results.to_csv(out_dir / "acceptance.csv", index=False)

    for row in results.itertuples(index=False):
        mark = "[green]PASS[/green]" if row.passed else "[red]FAIL[/red]"
        console.print(f"{mark} {row.criterion}: {row.value} ({row.threshold})")
    console.print(f"[green]Results saved to:[/green] {out_dir / 'acceptance.csv'}")
    if not results["passed"].all():
        sys.exit(1)


if __name__ == "__main__":
    main()
