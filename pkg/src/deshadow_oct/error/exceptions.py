"""Exception hierarchy shared by every deshadow-oct module."""


class DeshadowError(Exception):
    """Base class for all errors raised by deshadow-oct."""

    pass


class ConfigError(DeshadowError):
    """Invalid configuration or command usage."""

    pass


class DataError(DeshadowError):
    """Input data does not satisfy a precondition."""

    pass


class ValidationError(DataError):
    """One or more validation checks failed; the message lists every problem."""

    pass


class ImageFormatError(DataError):
    """Unsupported raster format, bit depth or channel count."""

    pass


class ShapeError(DataError):
    """Array or tensor shape does not match what the operation expects."""

    pass


class PlacementError(DataError):
    """Artificial shadows could not be placed without overlap."""

    pass


class UndefinedContrastError(DataError):
    """Intralayer contrast is undefined because I1 + I2 == 0."""

    pass


class CheckpointError(DataError):
    """Checkpoint file is corrupt, truncated or incompatible."""

    pass


class BackboneInitError(DeshadowError):
    """Feature backbone could not be initialised."""

    pass


class ContractViolationError(DeshadowError):
    """A network that must stay frozen changed during a training phase."""

    pass
