"""Exception hierarchy shared by all modules."""


class PurispecError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PurispecError, ValueError):
    """Invalid input value (non-finite coupling, bad grid, wrong shape...)."""


class DimensionError(ValidationError):
    """Chain length or matrix dimension outside the supported range."""


class AliasingError(ValidationError):
    """Time step too coarse to resolve the spectral bandwidth."""


class ComputationError(PurispecError, RuntimeError):
    """A numerical routine failed (e.g. eigensolver did not converge)."""


class PositivityError(ComputationError):
    """A matrix expected to be positive semidefinite is significantly indefinite."""

    def __init__(self, message, most_negative=None):
        super().__init__(message)
        self.most_negative = most_negative


class DegenerateTemperatureError(ComputationError):
    """Reconstructed partition function is not positive."""


class ConfigError(PurispecError):
    """Experiment configuration failed schema validation."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
