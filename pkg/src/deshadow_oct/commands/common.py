"""Helpers shared by the sub-commands."""

from pathlib import Path

import click

from deshadow_oct.core.config import Config, load_config
from deshadow_oct.error.exceptions import ConfigError


def resolve_config(ctx: click.Context, config_path: Path | None) -> Config:
    """Load the config and apply the root ``--seed`` override, if any."""
    config = load_config(config_path)
    seed = (ctx.obj or {}).get("seed")
    return config.with_seed(seed) if seed is not None else config


def ensure_output_dir(out_dir: Path, force: bool) -> Path:
    """Create ``out_dir``; refuse a non-empty one unless ``force``.

    Raises:
        ConfigError: If ``out_dir`` holds files and ``force`` is not set.
    """
    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()) and not force:
        raise ConfigError(f"Output directory {out_dir} is not empty (use --force to overwrite)")
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir
