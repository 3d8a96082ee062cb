from pathlib import Path

import click
from rich.console import Console
from tqdm import tqdm

from deshadow_oct.commands.common import ensure_output_dir, resolve_config
from deshadow_oct.core.config import Config
from deshadow_oct.core.dataset import (
    GROUND_TRUTH_DIR,
    IMAGES_DIR,
    MASKS_DIR,
    ROI_FILE,
)
from deshadow_oct.core.manifest import RunManifest
from deshadow_oct.core.reproducibility import derive_seed
from deshadow_oct.error import handle_command_errors
from deshadow_oct.evaluation.rois_io import RoiTable, write_rois
from deshadow_oct.imaging.io import save_image, save_mask
from deshadow_oct.phantom.generator import generate_phantom, jitter_spec
from deshadow_oct.phantom.rois import auto_rois
from deshadow_oct.phantom.shadows import make_validation_pair

console = Console()


def stem_of(index: int) -> str:
    return f"phantom_{index:04d}"


def write_phantom_dataset(config: Config, out_dir: Path) -> RoiTable:
    """Write ``simulation.n_images`` (shadowed, mask, ground truth) triples and their ROIs.

    Image ``k`` is fully determined by a seed derived from ``(simulation.seed, k)``.
    """
    sim = config.simulation
    rois: RoiTable = {}
    for index in tqdm(range(sim.n_images), desc="Simulating phantoms"):
        seed = derive_seed(sim.seed, index)
        spec = jitter_spec(config.phantom, seed, sim.mean_jitter, sim.boundary_jitter)
        clean, layer_map = generate_phantom(spec)
        shadowed, mask, truth = make_validation_pair(
            clean,
            n_shadows=config.shadows.n_shadows,
            rng_seed=seed,
            settings=config.shadows,
            surface=spec.surface_rows(),
        )
        stem = stem_of(index)
        bit_depth = config.imaging.bit_depth
        save_image(shadowed, out_dir / IMAGES_DIR / f"{stem}.png", bit_depth=bit_depth)
        save_mask(mask, out_dir / MASKS_DIR / f"{stem}.png")
        save_image(truth, out_dir / GROUND_TRUTH_DIR / f"{stem}.png", bit_depth=bit_depth)
        rois[stem] = auto_rois(
            layer_map,
            mask,
            [spec.label_of(k) for k in range(spec.n_layers)],
            count=config.evaluation.rois_per_side,
            size=config.evaluation.roi_size,
        )
    write_rois(rois, out_dir / ROI_FILE)
    return rois


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
    "--out-dir",
    "-o",
    type=click.Path(path_type=Path, file_okay=False),
    required=True,
    help="Dataset directory to create",
)
@click.option("--force", is_flag=True, help="Write into a non-empty output directory")
@click.pass_context
@handle_command_errors
def simulate(ctx: click.Context, config_path: Path | None, out_dir: Path, force: bool) -> None:
    """Generate a phantom dataset with artificial shadows and ground truth."""
    config = resolve_config(ctx, config_path)
    out_dir = ensure_output_dir(out_dir, force)

    rois = write_phantom_dataset(config, out_dir)
    n_rois = sum(len(v) for v in rois.values())

    RunManifest(
        command="simulate",
        config_hash=config.config_hash(),
        seed=config.simulation.seed,
        config=config.model_dump(mode="json"),
        outputs={
            "images": IMAGES_DIR,
            "masks": MASKS_DIR,
            "ground_truth": GROUND_TRUTH_DIR,
            "rois": ROI_FILE,
        },
        notes={"n_images": config.simulation.n_images, "n_rois": n_rois},
    ).save(out_dir)

    n_images = config.simulation.n_images
    console.print(f"[green]Simulated {n_images} phantoms saved to:[/green] {out_dir}")
    console.print(f"  ROIs: {n_rois} in {out_dir / ROI_FILE}")
