"""Exception types shared across the package."""


class RescompError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(RescompError):
    pass


class NonSquare(RescompError):
    pass


class IndivisibleChunks(RescompError):
    pass


class LocalityTooLarge(RescompError):
    pass


class SingularSystem(RescompError):
    pass


class TooShort(RescompError):
    pass


class SolverDiverged(RescompError):
    pass


class InterpolantOutOfRange(RescompError):
    pass


class NonFiniteState(RescompError):
    """Raised when a closed-loop forecast produces non-finite values.

    Attributes:
        step: index of the first affected forecast step.
        partial: the finite prefix of the forecast, if any.
    """

    def __init__(self, step, partial=None):
        super().__init__(f"forecast diverged to non-finite values at step {step}")
        self.step = step
        self.partial = partial


class LineSearchFailed(RescompError):
    pass


class VersionMismatch(RescompError):
    pass


class CorruptChecksum(RescompError):
    pass


class UnknownSystem(RescompError):
    pass


class ConfigError(RescompError):
    """Invalid experiment configuration; carries the offending field name."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
