"""Exception types shared across the package."""


class PassiveGdError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(PassiveGdError):
    """Dimension mismatch between signals, matrices, or vectors."""


class HorizonError(PassiveGdError):
    """A truncation or inner-product horizon exceeds the stored samples."""


class InvalidParameterError(PassiveGdError):
    """A numeric parameter violates its documented precondition."""


class ContractionError(PassiveGdError):
    """A fixed-point evaluation was requested outside its contraction regime."""


class DegenerateSectorError(PassiveGdError):
    """An operation requires strict sector separation (m < L) but m == L."""


class AlgebraicLoopError(PassiveGdError):
    """A feedback loop has an unresolvable instantaneous dependency."""


class ConvergenceError(PassiveGdError):
    """An iterative solver exhausted its iteration budget."""


class DivergenceError(PassiveGdError):
    """An optimizer produced a non-finite iterate.

    Carries the last finite iterate in ``last_iterate``.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class LineSearchError(PassiveGdError):
    """A backtracking line search failed to find an acceptable step."""
