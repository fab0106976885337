"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
anything else -> 4.
"""


class GodiceError(Exception):
    """Base class for package errors."""


class ConfigError(GodiceError):
    """Invalid configuration value or combination."""


class SchemeError(ConfigError):
    """Incompatible label schemes / checkpoints."""


class DataError(GodiceError):
    """Dataset file or dataset content problems."""


class StalenessError(DataError):
    """Sampling requested option labels that are not present yet."""


class ImmutabilityError(DataError):
    """Attempted write to annotated option labels."""


class ShapeError(GodiceError, ValueError):
    """Array shape does not match a network or batch contract."""


class StateError(GodiceError, RuntimeError):
    """Operation requires recorded state that is absent."""
