"""Exception hierarchy shared by all solvers."""


class ConvBodyError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(ConvBodyError, ValueError):
    """Bad input: wrong dimension, non-positive parameter, zero vector, ..."""


class OutOfRangeError(InvalidArgumentError):
    """A closed form was requested outside the parameter range it covers."""


class EmptyBodyError(ConvBodyError):
    """The requested intersection K ∩ (t + L) is empty."""


class NumericalFailureError(ConvBodyError):
    """A solver produced an inconsistent state (sign violation, unbounded LP)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NonConvergenceError(NumericalFailureError):
    """Iteration cap hit before the requested accuracy was certified."""

    def __init__(self, message, best_value=None, gap=None, diagnostics=None):
        super().__init__(message, diagnostics)
        self.best_value = best_value
        self.gap = gap
