"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class ChaseBodyError(Exception):
    """Base class for package errors."""


class DimensionMismatch(ChaseBodyError, ValueError):
    pass


class Infeasible(ChaseBodyError):
    """Dykstra stalled above tolerance: the body is (numerically) empty."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class Unbounded(ChaseBodyError):
    pass


class EmptySlice(ChaseBodyError):
    pass


class EmptyRegion(ChaseBodyError):
    pass


class NotConverged(ChaseBodyError):
    """Iteration cap reached; ``best`` carries the best estimate found."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class InfeasibleRequest(ChaseBodyError):
    def __init__(self, index: int, message: str = ""):
        super().__init__(message or f"request {index} is empty")
        self.index = index


class RequestInfeasible(InfeasibleRequest):
    """Raised by selectors when a request cannot be served."""


class GridTooCoarse(ChaseBodyError):
    pass


class SingularCovariance(ChaseBodyError):
    pass


class UnsupportedDimension(ChaseBodyError):
    pass


class BadParams(ChaseBodyError, ValueError):
    pass
