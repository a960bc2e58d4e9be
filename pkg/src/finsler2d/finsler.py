"""Finsler metric families behind one interface.

Three families share the pointwise interface: the Finsleroid-regular
metric built from a background Riemannian metric, an axis 1-form of
norm c < 1 and a charge g in (-2, 2); the Randers metric S + b; and the
plain Riemannian norm S.  All closed forms are written generically over
the scalar type, so the same code runs on floats and on dual numbers
(exact x-, y- or parameter-derivatives).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dual import Dual, atan, exp, sqrt, value
from .errors import (
    DegenerateC,
    ParamRange,
    StepUnderflow,
    ZeroVector,
)
from .fieldspec import MetricKind
from .riemann import FrameValues, frame_values

__all__ = [
    "Primitives", "FinsleroidScalars", "MetricJet",
    "primitives", "finsleroid_jet", "randers_jet", "riemannian_jet",
    "metric_jet", "metric_from_F", "metric_value",
]

_GAMMA = ((0.0, 1.0), (-1.0, 0.0))


@dataclass
class Primitives:
    """1-form values and radial variables at (x, y)."""

    b: float       # axis 1-form value  b_i y^i  (b = c btilde)
    n: float       # companion 1-form value
    S: float       # background Riemannian norm
    q: float       # sqrt(S^2 - b^2), computed in cancellation-free form
    w: float       # q / |b|   (inf on the b = 0 line)
    wtilde: float  # n / b     (chart variable; inf on the b = 0 line)


class FinsleroidScalars:
    """Scalar zoo of the Finsleroid-regular family at one (x, y)."""

    __slots__ = ("b", "n", "S", "S2", "q", "h", "G", "B", "B1", "L", "f",
                 "J", "K", "eta", "nu", "Xinv", "X", "T", "I", "Mbar",
                 "U", "C1", "g", "c")

    def __init__(self, fv, y):
        g, c = fv.g, fv.c
        if not (-2.0 < value(g) < 2.0):
            raise ParamRange(f"charge g = {value(g):.6g} outside (-2, 2)")
        if not (0.0 < value(c) < 1.0):
            raise DegenerateC(f"axis norm c = {value(c):.6g} not in (0, 1)")
        b, n, S2, S = _forms(fv, y)
        c2 = c * c
        q = sqrt((1.0 - c2) / c2 * b * b + n * n)
        self.b, self.n, self.S, self.S2, self.q = b, n, S, S2, q
        self.g, self.c = g, c
        self.h = sqrt(1.0 - g * g / 4.0)
        self.G = g / self.h
        self.B = b * b + g * b * q + q * q
        self.B1 = b / c2 + g * q
        self.L = q + 0.5 * g * b
        self.f = _branch_f(self.G, self.L, self.h, b)
        self.J = exp(-0.5 * self.G * self.f)
        self.K = sqrt(self.B) * self.J
        self.eta = 1.0 / (1.0 + g * c * sqrt(1.0 - c2))
        self.nu = q + (1.0 - c2) * g * b
        self.Xinv = 3.0 - c2 * n * n / (q * self.nu)
        self.X = 1.0 / self.Xinv
        self.T = (1.0 / c) * sqrt(self.nu / q) * self.B ** -1 * self.K * self.K
        self.I = -g * c * 0.5 * self.Xinv * n / sqrt(q * self.nu)
        self.Mbar = (-self.f / (self.h * self.h * self.h)
                     + 0.5 * self.G / (self.h * self.B) * q * q
                     + b * q / (self.h * self.h * self.B))
        self.C1 = -1.0 / c
        self.U = self.C1 * (1.0 / c) * sqrt(q / self.nu)


def _branch_f(G, L, h, b):
    """Angle used in the charge exponent; branch picked by sign of b.

    Both branches agree at b = 0 (the arctan tends to +-pi/2 there), so
    the function is smooth across the n-axis; continuity is exercised in
    the tests rather than assumed.
    """
    bv = value(b)
    if bv > 0.0:
        return -atan(0.5 * G) + atan(L / (h * b))
    if bv < 0.0:
        return np.pi - atan(0.5 * G) + atan(L / (h * b))
    return np.pi / 2.0 - atan(0.5 * G) + 0.0 * L


@dataclass
class MetricJet:
    """Pointwise metric data at (x, y) for any family."""

    family: MetricKind
    F: float
    y_low: tuple          # covariant tangent vector, (1/2) d(F^2)/dy
    l_low: tuple
    l_up: tuple
    m_low: tuple
    m_up: tuple
    g_mat: tuple          # metric tensor components g_ij
    g_inv: tuple
    det_ratio: float      # det(g) / det(a)
    I: float              # main scalar
    A_low: tuple          # I m_i
    A_up: tuple
    scalars: object = None  # FinsleroidScalars for that family

    # -- derived views -----------------------------------------------------
    def as_arrays(self):
        return {
            "F": float(value(self.F)),
            "y_low": np.array([value(v) for v in self.y_low]),
            "l_low": np.array([value(v) for v in self.l_low]),
            "l_up": np.array([value(v) for v in self.l_up]),
            "m_low": np.array([value(v) for v in self.m_low]),
            "m_up": np.array([value(v) for v in self.m_up]),
            "g": np.array([[value(v) for v in row] for row in self.g_mat]),
            "g_inv": np.array([[value(v) for v in row] for row in self.g_inv]),
            "det_ratio": float(value(self.det_ratio)),
            "I": float(value(self.I)),
        }

    def h_mat(self):
        """Angular metric h_ij = g_ij - l_i l_j."""
        return tuple(
            tuple(self.g_mat[i][j] - self.l_low[i] * self.l_low[j]
                  for j in range(2))
            for i in range(2))

    def eps(self, fv):
        """Skew tensor eps_ik = sqrt(det g) gamma_ik."""
        sd = sqrt(self.det_ratio) * fv.sqrt_det * 1.0
        return ((0.0, sd), (-sd, 0.0))


# ---------------------------------------------------------------------------
# shared scalar helpers
# ---------------------------------------------------------------------------

def _forms(fv, y):
    y1, y2 = y
    b = fv.c * (fv.bt1 * y1 + fv.bt2 * y2)
    n = fv.nvec[0] * y1 + fv.nvec[1] * y2
    S2 = (fv.a11 * y1 * y1 + 2.0 * fv.a12 * y1 * y2 + fv.a22 * y2 * y2)
    if value(S2) <= 0.0:
        raise ZeroVector("metric data requested at y = 0")
    return b, n, S2, sqrt(S2)


def _u_lower(fv, y):
    y1, y2 = y
    return (fv.a11 * y1 + fv.a12 * y2, fv.a12 * y1 + fv.a22 * y2)


def primitives(spec, x, y) -> Primitives:
    """Radial variables of the axis decomposition at (x, y).

    ``q`` is assembled from the axis-orthogonal split (never from the
    difference S^2 - b^2) so it stays accurate on the indicatrix axis.
    """
    fv = frame_values(spec, x)
    c = fv.c
    if value(c) >= 1.0:
        raise DegenerateC(f"axis norm c = {value(c):.6g} >= 1")
    b, n, S2, S = _forms(fv, y)
    q = sqrt((1.0 - c * c) / (c * c) * b * b + n * n)
    babs = abs(value(b))
    w = value(q) / babs if babs > 0.0 else float("inf")
    wt = value(n) / value(b) if babs > 0.0 else float("inf")
    return Primitives(b=b, n=n, S=S, q=q, w=w, wtilde=wt)


# ---------------------------------------------------------------------------
# family jets
# ---------------------------------------------------------------------------

def finsleroid_core(fv, y):
    """Scalars plus metric jet of the Finsleroid family, generic scalars."""
    sc = FinsleroidScalars(fv, y)
    b, n, q, S2 = sc.b, sc.n, sc.q, sc.S2
    g, c = sc.g, sc.c
    K, B, nu = sc.K, sc.B, sc.nu
    c2 = c * c
    u = _u_lower(fv, y)
    bl = fv.b_lower()
    bu = fv.b_upper()
    nl = fv.nvec
    nu_up = fv.nU
    K2B = K * K / B

    y_low = tuple((u[i] + g * q * bl[i]) * K2B for i in range(2))
    gq2 = g * q * q - b * S2 / q
    coef_bu = S2 / q
    g_mat = tuple(
        tuple((fv.a[i][j] + (g / B) * (gq2 * bl[i] * bl[j]
                                       - (b / q) * u[i] * u[j]
                                       + coef_bu * (bl[i] * u[j] + bl[j] * u[i])))
              * K2B
              for j in range(2))
        for i in range(2))
    B1c2 = b + g * c2 * q
    g_inv = tuple(
        tuple((fv.inv[i][j] + (g / nu) * (b * bu[i] * bu[j]
                                          - bu[i] * y[j] - bu[j] * y[i])
               + (g / (B * nu)) * B1c2 * y[i] * y[j]) / K2B
              for j in range(2))
        for i in range(2))
    det_ratio = (nu / q) * K2B * K2B

    l_low = tuple(y_low[i] / K for i in range(2))
    l_up = (y[0] / K, y[1] / K)
    m_low = tuple((sc.T / K) * (b * nl[i] - n * bl[i]) for i in range(2))
    srqnu = sqrt(q / nu)
    m_up = tuple(c * srqnu * ((b * nu_up[i] - n * bu[i]) / c2
                              + g * q * nu_up[i]) / K
                 for i in range(2))
    I = sc.I
    A_low = tuple(I * m_low[i] for i in range(2))
    A_up = tuple((g * 0.5 * sc.Xinv / (K * nu)) * (B * bu[i] - c2 * sc.B1 * y[i])
                 for i in range(2))

    jet = MetricJet(family=MetricKind.FINSLEROID, F=K, y_low=y_low,
                    l_low=l_low, l_up=l_up, m_low=m_low, m_up=m_up,
                    g_mat=g_mat, g_inv=g_inv, det_ratio=det_ratio,
                    I=I, A_low=A_low, A_up=A_up, scalars=sc)
    return sc, jet


def riemannian_core(fv, y):
    b, n, S2, S = _forms(fv, y)
    bt = fv.bt
    btv = fv.bt1 * y[0] + fv.bt2 * y[1]  # unit-axis 1-form value
    u = _u_lower(fv, y)
    l_low = tuple(u[i] / S for i in range(2))
    l_up = (y[0] / S, y[1] / S)
    m_low = tuple((btv * fv.nvec[i] - n * bt[i]) / S for i in range(2))
    m_up = tuple((btv * fv.nU[i] - n * fv.btU[i]) / S for i in range(2))
    jet = MetricJet(family=MetricKind.RIEMANNIAN, F=S,
                    y_low=u, l_low=l_low, l_up=l_up,
                    m_low=m_low, m_up=m_up,
                    g_mat=fv.a, g_inv=fv.inv, det_ratio=1.0,
                    I=0.0, A_low=(0.0, 0.0), A_up=(0.0, 0.0))
    return jet


def randers_core(fv, y, want_metric=True):
    """Randers jet.  The metric tensor itself comes from the generic
    Hessian route (no closed g_ij is carried for this family); the
    determinant ratio has the closed value (F/S)^3."""
    b, n, S2, S = _forms(fv, y)
    c = fv.c
    if not (0.0 < value(c) < 1.0):
        raise DegenerateC(f"axis norm c = {value(c):.6g} not in (0, 1)")
    F = S + b
    u = _u_lower(fv, y)
    bl = fv.b_lower()
    bu = fv.b_upper()
    FS = F / S
    T = (1.0 / c) * FS * sqrt(FS)
    l_low = tuple(u[i] / S + bl[i] for i in range(2))
    l_up = (y[0] / F, y[1] / F)
    y_low = tuple(F * l_low[i] for i in range(2))
    m_low = tuple((1.0 / (c * S)) * sqrt(FS) * (b * fv.nvec[i] - n * bl[i])
                  for i in range(2))
    SF = S / F
    m_up = tuple((1.0 / (c * F)) * sqrt(SF)
                 * (-n * bu[i] + (b + c * c * S) * fv.nU[i])
                 for i in range(2))
    det_ratio = FS * FS * FS
    I = -1.5 * c * n / sqrt(S * F)
    A_low = tuple(I * m_low[i] for i in range(2))

    if want_metric:
        g_mat = metric_from_F(lambda yy: _randers_F(fv, yy), y,
                              richardson=True)
        det = g_mat[0][0] * g_mat[1][1] - g_mat[0][1] * g_mat[1][0]
        g_inv = ((g_mat[1][1] / det, -g_mat[0][1] / det),
                 (-g_mat[1][0] / det, g_mat[0][0] / det))
        A_up = tuple(sum(g_inv[i][j] * A_low[j] for j in range(2))
                     for i in range(2))
    else:
        g_mat = g_inv = ((None, None), (None, None))
        A_up = (None, None)

    jet = MetricJet(family=MetricKind.RANDERS, F=F, y_low=y_low,
                    l_low=l_low, l_up=l_up, m_low=m_low, m_up=m_up,
                    g_mat=g_mat, g_inv=g_inv, det_ratio=det_ratio,
                    I=I, A_low=A_low, A_up=A_up)
    return jet


def _randers_F(fv, y):
    b, n, S2, S = _forms(fv, y)
    return S + b


def metric_value(fv, y, kind):
    """F(x, y) for the family, generic over the scalar type."""
    if kind == MetricKind.FINSLEROID:
        return FinsleroidScalars(fv, y).K
    if kind == MetricKind.RANDERS:
        return _randers_F(fv, y)
    return _forms(fv, y)[3]


def metric_core(fv, y, kind, want_metric=True):
    if kind == MetricKind.FINSLEROID:
        return finsleroid_core(fv, y)[1]
    if kind == MetricKind.RANDERS:
        return randers_core(fv, y, want_metric=want_metric)
    return riemannian_core(fv, y)


# -- public spec-level wrappers ---------------------------------------------

def finsleroid_jet(spec, x, y):
    fv = frame_values(spec, x)
    return finsleroid_core(fv, y)


def randers_jet(spec, x, y):
    fv = frame_values(spec, x)
    return randers_core(fv, y)


def riemannian_jet(spec, x, y):
    fv = frame_values(spec, x)
    return riemannian_core(fv, y)


def metric_jet(spec, x, y) -> MetricJet:
    """Jet of the family declared by the spec."""
    fv = frame_values(spec, x)
    return metric_core(fv, y, spec.metric_kind)


# ---------------------------------------------------------------------------
# Hessian oracle
# ---------------------------------------------------------------------------

def metric_from_F(F_eval, y, step=1e-4, richardson=False):
    """Metric tensor from the Hessian of (1/2) F^2 by central differences.

    This is the generic route independent of any closed family formula:
    it serves as the oracle for all closed metric tensors and as the
    primary metric for the Randers family.  The cross term uses the
    four-point stencil, so the result is symmetric by construction.
    With ``richardson`` the two-level extrapolation removes the leading
    truncation term (used where the determinant identity is checked at
    tighter than plain-stencil accuracy).
    """
    if richardson:
        coarse = np.asarray(_hessian_half_F2(F_eval, y, 2e-3))
        fine = np.asarray(_hessian_half_F2(F_eval, y, 1e-3))
        out = (4.0 * fine - coarse) / 3.0
        return ((out[0][0], out[0][1]), (out[1][0], out[1][1]))
    return _hessian_half_F2(F_eval, y, step)


def _hessian_half_F2(F_eval, y, step):
    norm = max(abs(value(y[0])), abs(value(y[1])))
    h = step * max(norm, 1e-30)
    if h == 0.0 or norm + h == norm:
        raise StepUnderflow(f"finite-difference step underflow at |y|={norm}")

    def half_F2(yy):
        Fv = F_eval(yy)
        return 0.5 * Fv * Fv

    def shifted(d1, d2):
        return half_F2((y[0] + d1, y[1] + d2))

    f00 = half_F2(y)
    gxx = (shifted(h, 0.0) - 2.0 * f00 + shifted(-h, 0.0)) / (h * h)
    gyy = (shifted(0.0, h) - 2.0 * f00 + shifted(0.0, -h)) / (h * h)
    gxy = (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) \
        / (4.0 * h * h)
    return ((gxx, gxy), (gxy, gyy))
