from deshadow_oct.error.cmd import (
    EXIT_DATA,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_USAGE,
    handle_command_errors,
)
from deshadow_oct.error.exceptions import (
    BackboneInitError,
    CheckpointError,
    ConfigError,
    ContractViolationError,
    DataError,
    DeshadowError,
    ImageFormatError,
    PlacementError,
    ShapeError,
    UndefinedContrastError,
    ValidationError,
)

__all__ = [
    "EXIT_DATA",
    "EXIT_INTERNAL",
    "EXIT_OK",
    "EXIT_USAGE",
    "BackboneInitError",
    "CheckpointError",
    "ConfigError",
    "ContractViolationError",
    "DataError",
    "DeshadowError",
    "ImageFormatError",
    "PlacementError",
    "ShapeError",
    "UndefinedContrastError",
    "ValidationError",
    "handle_command_errors",
]
