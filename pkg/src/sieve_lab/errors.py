"""Exception types raised across the package."""


class SieveLabError(Exception):
    """Base class for all package errors."""


class NumericalFailure(SieveLabError):
    """A numerical routine did not reach its tolerance.

    ``estimate`` carries the achieved error estimate when one is available.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class BudgetExceeded(SieveLabError):
    """An enumeration or scan needed more work than its configured budget."""

    def __init__(self, message, count):
        super().__init__(message)
        self.count = count


class TruncationError(SieveLabError):
    """Residual mass of a truncated sum exceeds the requested tolerance."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class IncompleteScan(SieveLabError):
    """The small-count gap scan did not meet its stopping rule in budget."""


class DataError(SieveLabError, ValueError):
    """Input data violates a structural assumption (e.g. coincident points)."""


class LawSpecError(SieveLabError, ValueError):
    """A law description string or its parameters are invalid."""
