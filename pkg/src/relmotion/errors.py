"""Exception types raised across the package."""


class RelMotionError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(RelMotionError, ValueError):
    """Particle count, spatial dimension or shape is out of range."""


class IndexPairError(RelMotionError, ValueError):
    """An index pair is malformed, out of range, or cannot be composed."""


class ConsistencyError(RelMotionError, ValueError):
    """A relative family violates difference-consistency beyond tolerance.

    ``step`` is set when the violation was found inside a path.
    """

    def __init__(self, message, max_violation=None, step=None):
        super().__init__(message)
        self.max_violation = max_violation
        self.step = step


class DriftEvaluationError(RelMotionError, ValueError):
    """Drift coefficients evaluated to NaN or had the wrong shape."""


class IncompleteFamilyError(RelMotionError, ValueError):
    """A relative family is missing pairs or has the wrong shape."""
