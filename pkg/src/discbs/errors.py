"""Exception types raised across the package."""


class DomainError(ValueError):
    """Argument outside the domain of the function."""


class TailExhaustedError(ArithmeticError):
    """Survival probability underflowed to zero at the requested point."""


class TruncationError(ArithmeticError):
    """A series hit its term budget before the tail criterion was met.

    The partial sum is kept on ``partial`` so callers can still inspect it.
    """

    def __init__(self, message, partial=None, terms=None):
        super().__init__(message)
        self.partial = partial
        self.terms = terms


class ConvergenceError(RuntimeError):
    """An iterative fit failed to converge."""
