from pathlib import Path

import click
from rich.console import Console

from deshadow_oct.commands.common import ensure_output_dir, resolve_config
from deshadow_oct.core.dataset import DatasetManager
from deshadow_oct.core.manifest import LedgerEntry, RunManifest
from deshadow_oct.error import handle_command_errors
from deshadow_oct.nets.backbone import N_CONVS, backbone_from_config
from deshadow_oct.nets.common import count_parameters, weights_hash
from deshadow_oct.training.loss_log import DETECTOR_LOSS_CSV, REMOVER_LOSS_CSV
from deshadow_oct.training.state import CHECKPOINT_DIR, LATEST_CHECKPOINT, check_resumable
from deshadow_oct.training.trainer import PairedData, Trainer

console = Console()


@click.command()
@click.option(
    "--config",
    "-c",
    "config_path",
    type=click.Path(path_type=Path, exists=True, dir_okay=False),
    default=None,
    help="Config file (YAML or JSON); defaults are used when omitted",
)
@click.option(
    "--data-dir",
    "-d",
    type=click.Path(path_type=Path, exists=True, file_okay=False),
    required=True,
    help="Dataset with images/ and masks/",
)
@click.option(
    "--out-dir",
    "-o",
    type=click.Path(path_type=Path, file_okay=False),
    required=True,
    help="Run directory for checkpoints, loss logs and the manifest",
)
@click.option(
    "--resume",
    type=click.Path(path_type=Path, exists=True, dir_okay=False),
    default=None,
    help="Checkpoint to continue from (must match the config hash)",
)
@click.option("--force", is_flag=True, help="Write into a non-empty output directory")
@click.option(
    "--stop-after",
    type=click.IntRange(min=1),
    default=None,
    hidden=True,
    help="Stop after this many schedule positions",
)
@click.pass_context
@handle_command_errors
def train(
    ctx: click.Context,
    config_path: Path | None,
    data_dir: Path,
    out_dir: Path,
    resume: Path | None,
    force: bool,
    stop_after: int | None,
) -> None:
    """Train the shadow detector and remover with the alternating schedule."""
    config = resolve_config(ctx, config_path)
    if resume is not None:
        check_resumable(resume, config.config_hash())
    out_dir = ensure_output_dir(out_dir, force or resume is not None)

    samples = DatasetManager(data_dir).load_all(require_masks=True)
    data = PairedData.from_samples(samples, tuple(config.imaging.network_size))
    backbone = backbone_from_config(config.backbone)
    console.print(
        f"Training on {len(data)} images; backbone taps {list(backbone.taps)} "
        f"({backbone.weights_checksum[:16]})"
    )

    trainer = Trainer(config, data, backbone, out_dir)
    if resume is not None:
        trainer.resume_from(resume)
    final = trainer.run(stop_after=stop_after)

    RunManifest(
        command="train",
        config_hash=config.config_hash(),
        seed=config.train.rng_seed,
        config=config.model_dump(mode="json"),
        backbone_checksum=backbone.weights_checksum,
        taps=list(backbone.taps),
        n_backbone_convs=N_CONVS,
        phase_ledger=[LedgerEntry(**entry) for entry in trainer.ledger],
        outputs={
            "checkpoint": f"{CHECKPOINT_DIR}/{LATEST_CHECKPOINT}",
            "remover_loss": REMOVER_LOSS_CSV,
            "detector_loss": DETECTOR_LOSS_CSV,
        },
        notes={
            "detector_parameters": count_parameters(trainer.detector),
            "remover_parameters": count_parameters(trainer.remover),
            "detector_weights_sha256": weights_hash(trainer.detector),
            "remover_weights_sha256": weights_hash(trainer.remover),
            "next_position": final.next_position,
            "stopped_early": final.stopped_early,
            "probe_history": final.probe_history,
            "refine_activation": "relu",
        },
    ).save(out_dir)

    done = final.next_position
    total = len(trainer.schedule)
    status = "stopped early" if final.stopped_early else f"{done}/{total} positions"
    console.print(
        f"[green]Training {status}, checkpoints saved to:[/green] {out_dir / CHECKPOINT_DIR}"
    )
