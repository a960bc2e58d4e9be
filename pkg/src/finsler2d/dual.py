"""Forward-mode dual numbers.

Every pointwise quantity in this package is an explicit composition of
field values and tangent-vector components.  Seeding those inputs with
``Dual`` scalars therefore yields machine-precision partial derivatives
of the closed forms (with respect to x, y, or a family parameter)
without any finite-difference truncation.  Finite differences stay in
the test oracles; duals serve the primary evaluation paths.
"""

from __future__ import annotations

import math

from .errors import EvalError


class Dual:
    """Scalar value together with a fixed-length gradient tuple."""

    __slots__ = ("val", "grad")

    def __init__(self, val, grad):
        self.val = float(val)
        self.grad = tuple(float(a) for a in grad)

    @staticmethod
    def seed(values, index=None):
        """Lift ``values`` to duals over len(values) directions.

        With ``index`` given, only that entry is seeded and the rest are
        returned as plain floats (cheaper when one direction is needed).
        """
        n = len(values)
        if index is None:
            return tuple(
                Dual(v, tuple(1.0 if j == i else 0.0 for j in range(n)))
                for i, v in enumerate(values)
            )
        basis = tuple(1.0 if j == index else 0.0 for j in range(n))
        return Dual(values[index], basis)

    # -- helpers ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Dual):
            return other
        return Dual(other, (0.0,) * len(self.grad))

    def __repr__(self):
        return f"Dual({self.val!r}, {self.grad!r})"

    def __float__(self):
        return self.val

    # -- arithmetic ------------------------------------------------------
    def __neg__(self):
        return Dual(-self.val, tuple(-a for a in self.grad))

    def __pos__(self):
        return self

    def __abs__(self):
        s = 1.0 if self.val >= 0.0 else -1.0
        return Dual(abs(self.val), tuple(s * a for a in self.grad))

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val,
                        tuple(a + b for a, b in zip(self.grad, other.grad)))
        return Dual(self.val + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val,
                        tuple(a - b for a, b in zip(self.grad, other.grad)))
        return Dual(self.val - other, self.grad)

    def __rsub__(self, other):
        return Dual(other - self.val, tuple(-a for a in self.grad))

    def __mul__(self, other):
        if isinstance(other, Dual):
            u, v = self.val, other.val
            return Dual(u * v,
                        tuple(a * v + u * b
                              for a, b in zip(self.grad, other.grad)))
        return Dual(self.val * other, tuple(a * other for a in self.grad))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            u, v = self.val, other.val
            if v == 0.0:
                raise EvalError("division by zero")
            inv = 1.0 / v
            return Dual(u * inv,
                        tuple((a - u * inv * b) * inv
                              for a, b in zip(self.grad, other.grad)))
        if other == 0.0:
            raise EvalError("division by zero")
        inv = 1.0 / other
        return Dual(self.val * inv, tuple(a * inv for a in self.grad))

    def __rtruediv__(self, other):
        v = self.val
        if v == 0.0:
            raise EvalError("division by zero")
        val = other / v
        return Dual(val, tuple(-val / v * b for b in self.grad))

    def __pow__(self, k):
        if isinstance(k, Dual):
            # u^v = exp(v ln u); only needed for positive base
            return exp(k * log(self))
        u = self.val
        if k == 0:
            return Dual(1.0, (0.0,) * len(self.grad))
        if u == 0.0 and k < 1:
            raise EvalError("0 raised to negative/fractional power")
        if u < 0.0 and int(k) != k:
            raise EvalError("negative base with fractional exponent")
        val = u ** k
        slope = k * u ** (k - 1)
        return Dual(val, tuple(slope * a for a in self.grad))

    def __rpow__(self, base):
        return exp(self * math.log(base))

    # comparisons act on the primal value
    def __lt__(self, other):
        return self.val < (other.val if isinstance(other, Dual) else other)

    def __le__(self, other):
        return self.val <= (other.val if isinstance(other, Dual) else other)

    def __gt__(self, other):
        return self.val > (other.val if isinstance(other, Dual) else other)

    def __ge__(self, other):
        return self.val >= (other.val if isinstance(other, Dual) else other)


def value(x):
    """Primal part of a float or Dual."""
    return x.val if isinstance(x, Dual) else float(x)


def grad(x, n):
    """Gradient tuple of a float (zero) or Dual."""
    return x.grad if isinstance(x, Dual) else (0.0,) * n


def _lift(x, val, slope):
    return Dual(val, tuple(slope * a for a in x.grad))


# -- math functions usable on float or Dual ------------------------------

def sqrt(x):
    if isinstance(x, Dual):
        if x.val < 0.0:
            raise EvalError(f"sqrt of negative value {x.val!r}")
        r = math.sqrt(x.val)
        if r == 0.0:
            raise EvalError("sqrt derivative at zero")
        return _lift(x, r, 0.5 / r)
    if x < 0.0:
        raise EvalError(f"sqrt of negative value {x!r}")
    return math.sqrt(x)


def exp(x):
    if isinstance(x, Dual):
        v = math.exp(x.val)
        return _lift(x, v, v)
    return math.exp(x)


def log(x):
    if isinstance(x, Dual):
        if x.val <= 0.0:
            raise EvalError(f"ln of non-positive value {x.val!r}")
        return _lift(x, math.log(x.val), 1.0 / x.val)
    if x <= 0.0:
        raise EvalError(f"ln of non-positive value {x!r}")
    return math.log(x)


def sin(x):
    if isinstance(x, Dual):
        return _lift(x, math.sin(x.val), math.cos(x.val))
    return math.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return _lift(x, math.cos(x.val), -math.sin(x.val))
    return math.cos(x)


def tan(x):
    if isinstance(x, Dual):
        c = math.cos(x.val)
        if c == 0.0:
            raise EvalError("tan at odd multiple of pi/2")
        return _lift(x, math.tan(x.val), 1.0 / (c * c))
    return math.tan(x)


def atan(x):
    if isinstance(x, Dual):
        return _lift(x, math.atan(x.val), 1.0 / (1.0 + x.val * x.val))
    return math.atan(x)


def atan2(y, x):
    ydual, xdual = isinstance(y, Dual), isinstance(x, Dual)
    if not (ydual or xdual):
        return math.atan2(y, x)
    n = len(y.grad) if ydual else len(x.grad)
    if not ydual:
        y = Dual(y, (0.0,) * n)
    if not xdual:
        x = Dual(x, (0.0,) * n)
    den = x.val * x.val + y.val * y.val
    if den == 0.0:
        raise EvalError("atan2 at origin")
    return Dual(math.atan2(y.val, x.val),
                tuple((x.val * gy - y.val * gx) / den
                      for gy, gx in zip(y.grad, x.grad)))


def sign(x):
    v = x.val if isinstance(x, Dual) else x
    if isinstance(x, Dual):
        return Dual(math.copysign(1.0, v) if v != 0.0 else 0.0,
                    (0.0,) * len(x.grad))
    return math.copysign(1.0, v) if v != 0.0 else 0.0


def fabs(x):
    if isinstance(x, Dual):
        return abs(x)
    return abs(x)
