"""Shared error types for the elstable package."""


class DegenerateSeriesError(ValueError):
    """Raised when an input series cannot be normalized (all zeros, NaN/inf)."""


class DomainError(ValueError):
    """Raised when a parameter value lies outside a score's domain."""


class NumericalError(RuntimeError):
    """Raised when a computed quantity violates a numerical sanity bound."""


class SolverError(RuntimeError):
    """Raised when an iterative solver fails to converge.

    Carries the last residual norm so callers can report how close the
    solver got before giving up.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class TruncationWarning(UserWarning):
    """Emitted when a truncated series expansion looks unconverged."""
