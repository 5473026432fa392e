"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class LeaderFPError(Exception):
    """Base class for every error raised by leaderfp."""


class ExpressionError(LeaderFPError, ValueError):
    """Malformed expression source.

    ``position`` is the 0-based character offset of the offending token.
    """

    def __init__(self, message: str, position: int | None = None, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = tuple(expected)
        detail = message
        if position is not None:
            detail = f"{message} at position {position}"
        if expected:
            detail += f" (expected one of: {', '.join(expected)})"
        super().__init__(detail)


class ExpressionSyntaxError(ExpressionError):
    pass


class UnknownIdentifierError(ExpressionError):
    pass


class ArityError(ExpressionError):
    pass


class EvaluationError(LeaderFPError, ValueError):
    """An expression produced a value outside its contract (negative, NaN, inf)."""


class DimensionError(LeaderFPError, ValueError):
    pass


class SamplingError(LeaderFPError, ValueError):
    pass


class VacuousSampleError(LeaderFPError):
    """No sampled pair satisfied any guard of a certificate search."""


class OrbitEscapedError(LeaderFPError):
    def __init__(self, index: int, point):
        self.index = index
        self.point = point
        super().__init__(f"orbit escaped domain at iterate {index}: {list(point)}")


class SubcontractivityViolated(LeaderFPError):
    """Raised when the gap t - phi(t) is not positive somewhere on the interval."""

    def __init__(self, message: str, witness_t: float):
        self.witness_t = witness_t
        super().__init__(f"{message} (witness t={witness_t!r})")


class UniformConvergenceNotFound(LeaderFPError):
    pass


class PreconditionError(LeaderFPError, ValueError):
    pass


class ConfigError(LeaderFPError, ValueError):
    pass


class InvarianceNotObserved(LeaderFPError):
    """No index up to the cap keeps every sampled start inside the ball."""
