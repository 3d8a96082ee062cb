import functools
from typing import Callable

import click
from rich.console import Console

from deshadow_oct.error.exceptions import (
    BackboneInitError,
    ConfigError,
    ContractViolationError,
    DataError,
)

console = Console(stderr=True)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


def handle_command_errors(func: Callable) -> Callable:
    """Translate domain exceptions into the documented exit codes.

    0 success, 1 usage/config error, 2 data error, 3 internal error.
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigError, BackboneInitError) as e:
            console.print(f"[red]Error:[/red] {e}", highlight=False)
            raise click.exceptions.Exit(EXIT_USAGE)
        except (DataError, FileNotFoundError) as e:
            console.print(f"[red]Error:[/red] {e}", highlight=False)
            raise click.exceptions.Exit(EXIT_DATA)
        except ContractViolationError as e:
            console.print(f"[red]Internal error:[/red] {e}", highlight=False)
            raise click.exceptions.Exit(EXIT_INTERNAL)
        except click.exceptions.Exit:
            raise
        except Exception as e:
            console.print(f"[red]Unexpected error:[/red] {e}", highlight=False)
            raise click.exceptions.Exit(EXIT_INTERNAL)

    return wrapper
