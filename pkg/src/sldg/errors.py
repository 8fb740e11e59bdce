"""Exception types raised by the solver."""


class SLDGError(Exception):
    """Base class for solver errors."""


class InvalidInputError(SLDGError, ValueError):
    pass


class TraceFailure(SLDGError):
    """A characteristic trace produced a non-finite stage value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class GeometryError(SLDGError):
    """Base class for upstream-cell geometry failures.

    ``cells`` holds the offending Eulerian cell indices when known.
    """

    def __init__(self, message, cells=None, time=None):
        super().__init__(message)
        self.cells = list(cells) if cells is not None else []
        self.time = time


class DegenerateEdgeError(GeometryError):
    pass


class InvertedCellError(GeometryError):
    pass


class GeometryInconsistencyError(GeometryError):
    pass


class SingularGeometryError(GeometryError):
    pass


class ContractViolation(SLDGError):
    """An input broke a documented precondition (e.g. a negative cell average)."""
