"""Exception hierarchy shared by the numerical modules and the CLI."""


class DysonError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class InvalidParameter(DysonError, ValueError):
    exit_code = 2


class PreconditionViolation(DysonError):
    pass


class UnsupportedConfiguration(DysonError):
    pass


class NumericFailure(DysonError):
    """A quadrature or series did not reach its tolerance.

    ``diagnostics`` carries whatever the caller found useful (achieved
    error, node counts, ...).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class TruncationError(NumericFailure):
    pass


class ContourPlacementError(NumericFailure):
    pass


class ClusterError(PreconditionViolation):
    pass


class StepFailure(NumericFailure):
    pass
