"""Exception types raised by the solver library."""


class LaplaceAMGError(Exception):
    """Base class for all solver errors."""


class DimensionMismatchError(LaplaceAMGError, ValueError):
    """Operand shapes do not agree."""


class GraphFormatError(LaplaceAMGError):
    """An input graph file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GraphValidationError(LaplaceAMGError, ValueError):
    """A graph or matrix violates a structural requirement."""


class DisconnectedGraphError(GraphValidationError):
    """The graph has more than one connected component."""


class NotIndependentError(LaplaceAMGError, ValueError):
    """An elimination set contains adjacent vertices."""


class SmootherIntervalError(LaplaceAMGError, ValueError):
    """Chebyshev bounds do not satisfy 0 < lo < hi."""
