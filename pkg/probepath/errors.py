"""
probepath.errors

Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes:
  - InputError (and subclasses) -> 1
  - InvariantViolation          -> 2
"""


class ProbePathError(Exception):
    """Base class for every error raised by probepath."""


class InputError(ProbePathError, ValueError):
    """A file, spec or configuration value could not be used."""


class SceneError(InputError):
    """Node cloud, MP list or SceneSpec is malformed."""


class ConfigError(InputError):
    """Configuration JSON or override is invalid."""


class MatrixFormatError(InputError):
    """A time matrix CSV could not be parsed."""


class SolverSizeError(InputError):
    """The instance is too large for the requested solver."""


class OrientationInfeasible(ProbePathError, ValueError):
    """The probe head cannot be oriented to address a measurement point."""


class InvariantViolation(ProbePathError, RuntimeError):
    """An internal post-condition failed (e.g. a planned move collides)."""


__all__ = [
    "ProbePathError",
    "InputError",
    "SceneError",
    "ConfigError",
    "MatrixFormatError",
    "SolverSizeError",
    "OrientationInfeasible",
    "InvariantViolation",
]
