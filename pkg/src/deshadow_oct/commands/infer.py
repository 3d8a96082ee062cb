from pathlib import Path

import click
import numpy as np
from rich.console import Console
from tqdm import tqdm

from deshadow_oct.commands.common import ensure_output_dir
from deshadow_oct.core.dataset import IMAGES_DIR
from deshadow_oct.core.manifest import RunManifest
from deshadow_oct.error import EXIT_DATA, handle_command_errors
from deshadow_oct.error.exceptions import DataError, ShapeError
from deshadow_oct.imaging.bscan import BScan
from deshadow_oct.imaging.io import SUPPORTED_SUFFIXES, load_image, save_image
from deshadow_oct.imaging.resize import resize
from deshadow_oct.nets.remover import ShadowRemover, remover_infer_batch
from deshadow_oct.training.state import ModelCheckpoint
from deshadow_oct.training.trainer import networks_from_checkpoint

console = Console()


def input_files(in_dir: Path) -> list[Path]:
    """Images of ``in_dir`` (or of its ``images/`` subdirectory), sorted by name."""
    source = in_dir / IMAGES_DIR if (in_dir / IMAGES_DIR).is_dir() else in_dir
    return sorted(p for p in source.iterdir() if p.suffix.lower() in SUPPORTED_SUFFIXES)


def deshadow_image(
    remover: ShadowRemover,
    img: BScan,
    network_size: tuple[int, int],
    allow_resize: bool,
    timings_ms: list[float] | None = None,
) -> BScan:
    """Deshadow one B-scan, resizing to the network size and back when allowed.

    Raises:
        ShapeError: If the image is not network-sized and ``allow_resize`` is off.
    """
    native = img.shape
    if native != tuple(network_size):
        if not allow_resize:
            raise ShapeError(
                f"{img.source_id}: {native[0]}x{native[1]} image, network expects "
                f"{network_size[0]}x{network_size[1]} (use --resize)"
            )
        img = resize(img, network_size)
    out = remover_infer_batch(remover, [img], timings_ms=timings_ms)[0]
    return resize(out, native) if out.shape != native else out


@click.command()
@click.option(
    "--checkpoint",
    "-k",
    type=click.Path(path_type=Path, exists=True, dir_okay=False),
    required=True,
    help="Training checkpoint holding the remover",
)
@click.option(
    "--in-dir",
    "-i",
    type=click.Path(path_type=Path, exists=True, file_okay=False),
    required=True,
    help="Directory of B-scans (or a dataset with images/)",
)
@click.option(
    "--out-dir",
    "-o",
    type=click.Path(path_type=Path, file_okay=False),
    required=True,
    help="Directory for deshadowed images (same file names)",
)
@click.option("--resize", "allow_resize", is_flag=True, help="Resize non-network-size inputs")
@click.option("--force", is_flag=True, help="Write into a non-empty output directory")
@handle_command_errors
def infer(checkpoint: Path, in_dir: Path, out_dir: Path, allow_resize: bool, force: bool) -> None:
    """Deshadow every B-scan in a directory."""
    ckpt = ModelCheckpoint.load(checkpoint)
    config, _, remover = networks_from_checkpoint(ckpt)
    network_size = tuple(config.imaging.network_size)
    out_dir = ensure_output_dir(out_dir, force)

    files = input_files(in_dir)
    if not files:
        raise DataError(f"No PNG/TIFF images in {in_dir}")

    timings: list[float] = []
    failures: list[str] = []
    outputs: dict[str, str] = {}
    for path in tqdm(files, desc="Deshadowing"):
        try:
            img = load_image(path)
            out = deshadow_image(remover, img, network_size, allow_resize, timings)
        except DataError as e:
            failures.append(f"{path.name}: {e}")
            console.print(f"[red]Skipped[/red] {path.name}: {e}", highlight=False)
            continue
        save_image(out, out_dir / path.name, bit_depth=config.imaging.bit_depth)
        outputs[path.stem] = path.name

    timing = {}
    if timings:
        timing = {
            "mean_ms": float(np.mean(timings)),
            "median_ms": float(np.median(timings)),
            "n_images": len(timings),
        }
    RunManifest(
        command="infer",
        config_hash=ckpt.config_hash,
        seed=config.train.rng_seed,
        config=ckpt.config,
        outputs=outputs,
        notes={"checkpoint": str(checkpoint), "failures": failures, "timing": timing},
    ).save(out_dir)

    console.print(f"[green]Deshadowed {len(outputs)} images saved to:[/green] {out_dir}")
    if timing:
        console.print(
            f"  Timing: mean {timing['mean_ms']:.2f} ms/image, "
            f"median {timing['median_ms']:.2f} ms/image"
        )
    if failures:
        console.print(f"[red]{len(failures)} of {len(files)} images failed[/red]")
        raise click.exceptions.Exit(EXIT_DATA)
