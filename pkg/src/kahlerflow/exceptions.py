"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class PositivityError(ValueError):
    """A metric eigenvalue (or a quantity required to be positive) is not."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class EvaluationError(ArithmeticError):
    """A derivative or potential evaluated to a non-finite number."""


class ExtractionError(RuntimeError):
    """Two independent numerical routes to the same quantity disagree."""

    def __init__(self, message, spread=None):
        super().__init__(message)
        self.spread = spread


class AccuracyError(RuntimeError):
    """An adaptive scheme did not reach its requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class FitError(RuntimeError):
    """A least-squares fit is degenerate or its residual is too large."""


class StepFailure(RuntimeError):
    """The implicit time stepper could not advance the state."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
