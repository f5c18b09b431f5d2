"""Exception types shared across the package."""


class DomainError(ValueError):
    """Inputs violate a documented precondition."""


class NumericError(FloatingPointError):
    """A computation produced non-finite or contradictory intermediates."""


class ConvergenceError(RuntimeError):
    """An iterative routine exhausted its budget.

    Carries the best residual seen so the caller can decide what to do.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
