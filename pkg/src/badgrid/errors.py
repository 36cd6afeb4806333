"""Exception hierarchy. The CLI maps each family to an exit code."""


class BadgridError(Exception):
    """Base class for all library errors."""


class PreconditionError(BadgridError, ValueError):
    """An input violates a documented precondition or type invariant."""


class DimensionError(PreconditionError):
    """Vector or matrix shapes do not match."""


class InsufficientDataError(PreconditionError):
    """Too few records to compute the requested statistic."""


class ScopeError(PreconditionError):
    """The operation is only defined for a restricted class of inputs."""


class RationalPairError(PreconditionError):
    """(A, b) has an exact integer solution within the scanned range."""


class PrecisionError(BadgridError):
    """Enumeration would go past the precision horizon of a rational truncation."""


class BudgetError(BadgridError):
    """Enumeration budget exceeded.

    ``best`` holds the best value found before giving up (or None) and
    ``certified`` is always False.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
        self.certified = False
