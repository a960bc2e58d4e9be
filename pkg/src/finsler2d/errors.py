"""Exception types shared across the engine."""


class Finsler2DError(Exception):
    """Base class for all errors raised by this package."""


class ExpressionSyntaxError(Finsler2DError):
    """Source text could not be parsed.

    Attributes:
        offset: byte offset of the first offending character.
        expected: set of token descriptions that would have been accepted.
    """

    def __init__(self, message, offset, expected=()):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.expected = frozenset(expected)


class UnknownIdentifier(Finsler2DError):
    def __init__(self, name, offset=None):
        super().__init__(f"unknown identifier {name!r}")
        self.name = name
        self.offset = offset


class EvalError(Finsler2DError):
    """Expression evaluated outside its real domain (ln of non-positive,
    sqrt of negative, division by zero). Fail fast instead of carrying NaN."""


class SchemaError(Finsler2DError):
    """Manifold document does not follow the expected JSON layout."""


class ValidationError(Finsler2DError):
    """A manifold-spec invariant failed at a sample point."""

    def __init__(self, invariant, x, detail=""):
        msg = f"invariant {invariant!r} violated at x={tuple(x)}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.invariant = invariant
        self.x = tuple(x)


class SingularMetric(Finsler2DError):
    def __init__(self, x):
        super().__init__(f"metric not positive definite at x={tuple(x)}")
        self.x = tuple(x)


class ZeroVector(Finsler2DError):
    """A tangent vector argument was (numerically) zero."""


class DegenerateC(Finsler2DError):
    """Axis norm c >= 1: the radial variable q may vanish off the origin."""


class ParamRange(Finsler2DError):
    """A family parameter is outside its admissible range."""


class QuadratureFailure(Finsler2DError):
    def __init__(self, what, estimate, tolerance):
        super().__init__(
            f"quadrature for {what} did not meet tolerance "
            f"(error estimate {estimate:.3e} > {tolerance:.3e})"
        )
        self.what = what
        self.estimate = estimate
        self.tolerance = tolerance


class UnsupportedVaryingC(Finsler2DError):
    """Closed-form route requires a constant axis norm c."""


class StepUnderflow(Finsler2DError):
    """Finite-difference step collapsed below representable resolution."""


class LeftDomain(Finsler2DError):
    def __init__(self, t, x):
        super().__init__(f"curve left the declared domain at t={t:.6g}, x={tuple(x)}")
        self.t = t
        self.x = tuple(x)


class BlowUp(Finsler2DError):
    def __init__(self, t, detail=""):
        super().__init__(f"transported vector left sane range at t={t:.6g} {detail}")
        self.t = t
