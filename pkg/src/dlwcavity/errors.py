"""Exception types shared across the package."""


class CavityError(Exception):
    """Base class for all errors raised by dlwcavity."""


class ValidationError(CavityError, ValueError):
    """An input value is outside its allowed range."""


class ConfigError(ValidationError):
    """A configuration is malformed or semantically invalid."""


class GeometryError(CavityError, ValueError):
    """A structure does not fit into the grid or the cavity."""


class DomainError(CavityError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class SolverError(CavityError, RuntimeError):
    """An iterative solve did not converge or could not be bracketed."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ExtractionError(CavityError, ValueError):
    """Not enough bound modes to extract a coupling."""


class FormatError(CavityError, ValueError):
    """A data file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CalibrationWarning(UserWarning):
    """A tight-binding fit or parity check is poor."""
