class DimensionMismatchError(ValueError):
    """Operands live in phase spaces of different dimension."""


class EmptyOperatorError(ValueError):
    """Operation needs at least one live term."""


class ResourceLimitError(RuntimeError):
    """Live-term or grid-size cap exceeded."""


class NotContractiveError(ValueError):
    """Neumann-series precondition fails (not contractive / invalid bounds / singular)."""


class ConvergenceError(RuntimeError):
    """Series did not reach the tolerance within the iteration budget.

    The partial result is attached as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class GridError(ValueError):
    """Shift not representable on the grid, or grid too small for the request."""
