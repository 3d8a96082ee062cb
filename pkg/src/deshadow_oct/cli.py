"""CLI entry point for deshadow-oct."""

import logging
import sys

import click
from rich.console import Console
from rich.logging import RichHandler

from deshadow_oct import __version__
from deshadow_oct.commands import evaluate, infer, simulate, train
from deshadow_oct.error import EXIT_OK, EXIT_USAGE

console = Console(stderr=True)


class DeshadowGroup(click.Group):
    """Root group that reports click usage errors with exit code 1."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        if not standalone_mode:
            return super().main(args, prog_name, complete_var, standalone_mode, **extra)
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.Abort:
            console.print("Aborted!")
            sys.exit(EXIT_USAGE)
        sys.exit(rv if isinstance(rv, int) else EXIT_OK)


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


@click.group(cls=DeshadowGroup)
@click.version_option(version=__version__, prog_name="deshadow-oct")
@click.option("--verbose", "-v", is_flag=True, help="Log debug messages (per-step losses)")
@click.option("--seed", type=int, default=None, help="Override every seed in the config")
@click.pass_context
def main(ctx, verbose: bool, seed: int | None):
    """Shadow detection and removal for OCT B-scans.

    Simulate phantom datasets, train the detector/remover pair, deshadow
    images and evaluate intralayer contrast and restoration error.
    """
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    _setup_logging(verbose)


# Register commands
main.add_command(simulate.simulate)
main.add_command(train.train)
main.add_command(infer.infer)
main.add_command(evaluate.evaluate)


if __name__ == "__main__":
    main()
