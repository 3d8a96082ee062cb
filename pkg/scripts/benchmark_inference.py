#!/usr/bin/env python3
"""Inference benchmark for the shadow remover.

Times the remover on random B-scans at several batch sizes, either with
freshly initialized weights for a config or with the weights of a checkpoint.
"""

from pathlib import Path
import sys

import click
import numpy as np
import pandas as pd
import torch

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from deshadow_oct.core.config import load_config
from deshadow_oct.imaging.bscan import BScan
from deshadow_oct.nets.common import count_parameters
from deshadow_oct.nets.remover import ShadowRemover, remover_infer_batch
from deshadow_oct.training.state import ModelCheckpoint
from deshadow_oct.training.trainer import networks_from_checkpoint


def load_remover(config_path: Path | None, checkpoint: Path | None):
    """Return (remover, network size) from a checkpoint or a config."""
    if checkpoint is not None:
        config, _, remover = networks_from_checkpoint(ModelCheckpoint.load(checkpoint))
    else:
        config = load_config(config_path)
        remover = ShadowRemover(config.remover, tuple(config.imaging.network_size)).eval()
    return remover, tuple(config.imaging.network_size)


def benchmark_batch_size(
    remover: ShadowRemover,
    size: tuple[int, int],
    batch_size: int,
    n_images: int,
    warmup: int = 1,
) -> dict:
    """Benchmark a single batch size.

    Args:
        remover: Network to time
        size: (height, width) of the inputs
        batch_size: Images per forward pass
        n_images: Images timed after warm-up
        warmup: Untimed batches run first

    Returns:
        Dictionary with benchmark results
    """
    print(f"\n{'=' * 60}")
    print(f"Benchmarking: batch size {batch_size}")
    print(f"{'=' * 60}")

    rng = np.random.default_rng(0)
    imgs = [BScan(pixels=rng.uniform(size=size), source_id=f"bench_{k}") for k in range(n_images)]
    remover_infer_batch(remover, imgs[:batch_size] * warmup, batch_size=batch_size)

    timings: list[float] = []
    remover_infer_batch(remover, imgs, batch_size=batch_size, timings_ms=timings)

    mean_ms = float(np.mean(timings))
    print(f"  Mean: {mean_ms:.2f} ms/image")
    print(f"  Median: {float(np.median(timings)):.2f} ms/image")

    return {
        "batch_size": batch_size,
        "n_images": n_images,
        "mean_ms_per_image": mean_ms,
        "median_ms_per_image": float(np.median(timings)),
        "images_per_second": 1000.0 / mean_ms if mean_ms else float("inf"),
    }


@click.command()
@click.option(
    "--config", "config_path", type=click.Path(path_type=Path, exists=True), default=None
)
@click.option("--checkpoint", type=click.Path(path_type=Path, exists=True), default=None)
@click.option("--batch-sizes", "-b", type=int, multiple=True, default=(1, 2, 4, 8))
@click.option("--n-images", type=int, default=16, show_default=True)
@click.option("--threads", type=int, default=None, help="torch intra-op threads")
@click.option("--output", type=click.Path(path_type=Path), default="benchmark_inference.csv")
def main(config_path, checkpoint, batch_sizes, n_images, threads, output):
    """Run inference benchmark."""
    if threads:
        torch.set_num_threads(threads)

    remover, size = load_remover(config_path, checkpoint)
    print(f"Remover: {count_parameters(remover):,} parameters, input {size[0]}x{size[1]}")

    results = [
        benchmark_batch_size(remover, size, batch_size, n_images)
        for batch_size in batch_sizes
    ]

    # Print summary
    print(f"\n{'=' * 60}")
    print("BENCHMARK SUMMARY")
    print(f"{'=' * 60}")

    df_results = pd.DataFrame(results)
    print(df_results.to_string(index=False))

    # Save results
    df_results.to_csv(output, index=False)
    print(f"\nResults saved to: {output}")


if __name__ == "__main__":
    main()
