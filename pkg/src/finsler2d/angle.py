"""The angle function and its machinery.

The angle of y against the axis is obtained by integrating the exact
1-form (m_k / F) dy^k along the arc of the background-unit circle from
the axis direction to y.  That 1-form is smooth off the origin for all
three families, so a single quadrature route covers the whole punctured
tangent plane; the chart-variable formulas stay around as test oracles.
The signed value is reported, increasing toward the n > 0 side, with
the branch cut at the south pole (the opposite-axis direction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad

from .dual import Dual, value
from .errors import QuadratureFailure, UnsupportedVaryingC, ZeroVector
from .fieldspec import MetricKind
from .finsler import FinsleroidScalars, metric_core, metric_value, _forms
from .riemann import FrameValues, frame_values, frame_derivatives, geometry

__all__ = [
    "Chart", "AngleBounds", "chart_of", "theta", "two_vector_angle",
    "theta_bounds", "dtheta_dx", "dtheta_dx_fd", "sector_area",
    "indicatrix_arclength", "indicatrix_sweep", "polar_angle",
    "chart_derivative_wtilde", "chart_derivative_t", "theta_dg", "theta_dc",
]

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-11, limit=200)
_QUAD_TOL = 1e-10


class Chart(Enum):
    """Four half-plane charts of the punctured tangent plane."""

    C1 = "b>0"
    C2 = "n>0"
    C3 = "n<0"
    C4 = "b<0"


@dataclass
class AngleBounds:
    theta_I: float
    theta_II: float

    @property
    def theta_max(self):
        return 2.0 * (self.theta_I + self.theta_II)


def chart_of(spec, x, y) -> Chart:
    """Deterministic chart pick: the axis charts win on their cones."""
    fv = frame_values(spec, x)
    b = fv.c * (fv.bt1 * y[0] + fv.bt2 * y[1])
    n = fv.nvec[0] * y[0] + fv.nvec[1] * y[1]
    if b == 0.0 and n == 0.0:
        raise ZeroVector("chart of the zero vector")
    if b > 0.0 and b >= abs(n):
        return Chart.C1
    if b < 0.0 and -b >= abs(n):
        return Chart.C4
    return Chart.C2 if n > 0.0 else Chart.C3


def polar_angle(fv: FrameValues, y):
    """Background polar angle of y in the axis frame, in (-pi, pi]."""
    btv = fv.bt1 * y[0] + fv.bt2 * y[1]
    nv = fv.nvec[0] * y[0] + fv.nvec[1] * y[1]
    if btv == 0.0 and nv == 0.0:
        raise ZeroVector("angle of the zero vector")
    return math.atan2(nv, btv)


def _arc_point(fv, phi):
    cs, sn = math.cos(phi), math.sin(phi)
    return (cs * fv.btU[0] + sn * fv.nU[0],
            cs * fv.btU[1] + sn * fv.nU[1])


def _arc_velocity(fv, phi):
    cs, sn = math.cos(phi), math.sin(phi)
    return (-sn * fv.btU[0] + cs * fv.nU[0],
            -sn * fv.btU[1] + cs * fv.nU[1])


def _arc_integrand(fv, kind):
    """d theta / d phi along the background-unit circle."""

    def psi(phi):
        e = _arc_point(fv, phi)
        de = _arc_velocity(fv, phi)
        jet = metric_core(fv, e, kind, want_metric=False)
        return (jet.m_low[0] * de[0] + jet.m_low[1] * de[1]) / jet.F

    return psi


def _quad(fn, a, b, what):
    val, err = quad(fn, a, b, **_QUAD_OPTS)
    if err > _QUAD_TOL * max(1.0, abs(val)):
        raise QuadratureFailure(what, err, _QUAD_TOL)
    return val


def theta(spec, x, y):
    """Signed angle of y from the axis direction, zero on the axis."""
    fv = frame_values(spec, x)
    return _theta_from_frame(fv, spec.metric_kind, y)


def _theta_from_frame(fv, kind, y):
    phi = polar_angle(fv, y)
    if phi == 0.0:
        return 0.0
    return _quad(_arc_integrand(fv, kind), 0.0, phi, "theta")


def two_vector_angle(spec, x, y1, y2):
    """theta(y2) - theta(y1) by direct quadrature between the rays.

    Integrating between the two polar angles keeps the two-vector angle
    additive and antisymmetric without touching the branch cut.
    """
    fv = frame_values(spec, x)
    p1 = polar_angle(fv, y1)
    p2 = polar_angle(fv, y2)
    if p1 == p2:
        return 0.0
    return _quad(_arc_integrand(fv, spec.metric_kind), p1, p2,
                 "two-vector angle")


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------

def _finsleroid_quarter(g, c):
    """Quarter-turn measure over the n > 0, b > 0 chart, by w-substitution."""
    c2 = c * c
    off = (1.0 - c2) / c2

    def integrand(u):
        t = math.tan(u)
        sec2 = 1.0 + t * t
        w = math.sqrt(t * t + off)
        root = 1.0 + (1.0 - c2) * g / w
        if root < 0.0:  # excluded by the parameter ranges
            raise QuadratureFailure("theta bound", float("inf"), _QUAD_TOL)
        return math.sqrt(root) / (1.0 + g * w + w * w) * sec2

    return _quad(integrand, 0.0, 0.5 * math.pi, "theta bound") / c


def _randers_quarter(c, south):
    """Quarter measures for the Randers family, derived from the chart
    derivative T b^2 / F^2 written in the w variable."""
    inv_c2 = 1.0 / (c * c)

    def integrand(u):
        t = math.tan(u)
        sec2 = 1.0 + t * t
        one_w2 = inv_c2 + t * t          # 1 + w^2
        root = math.sqrt(one_w2)
        den = (root - 1.0) if south else (root + 1.0)
        return sec2 / (math.sqrt(den) * one_w2 ** 0.75)

    return _quad(integrand, 0.0, 0.5 * math.pi, "theta bound") / c


def theta_bounds(spec, x) -> AngleBounds:
    """Quarter-turn angle measures and the total indicatrix length."""
    fv = frame_values(spec, x)
    kind = spec.metric_kind
    if kind == MetricKind.RIEMANNIAN:
        return AngleBounds(0.5 * math.pi, 0.5 * math.pi)
    if kind == MetricKind.FINSLEROID:
        g, c = fv.g, fv.c
        return AngleBounds(_finsleroid_quarter(g, c),
                           _finsleroid_quarter(-g, c))
    return AngleBounds(_randers_quarter(fv.c, south=False),
                       _randers_quarter(fv.c, south=True))


# ---------------------------------------------------------------------------
# Parameter derivatives of theta (fixed y, fixed frame)
# ---------------------------------------------------------------------------

def _theta_param_derivative(spec, x, y, param):
    """d theta / d(param) at fixed y, by duals under the arc quadrature."""
    fv = frame_values(spec, x)
    if param == "g":
        fv.g = Dual(fv.g, (1.0,))
    else:
        fv.c = Dual(fv.c, (1.0,))
    phi = polar_angle(fv, y)
    if phi == 0.0:
        return 0.0
    psi = _arc_integrand(fv, spec.metric_kind)
    return _quad(lambda t: psi(t).grad[0], 0.0, phi, f"d theta/d{param}")


def theta_dg(spec, x, y):
    """Charge derivative of the angle (zero for non-Finsleroid families)."""
    if spec.metric_kind != MetricKind.FINSLEROID:
        return 0.0
    return _theta_param_derivative(spec, x, y, "g")


def theta_dc(spec, x, y):
    """Axis-norm derivative of the angle at fixed y."""
    if spec.metric_kind == MetricKind.RIEMANNIAN:
        return 0.0
    return _theta_param_derivative(spec, x, y, "c")


# ---------------------------------------------------------------------------
# x-derivatives of theta
# ---------------------------------------------------------------------------

def dtheta_dx(spec, x, y):
    """Closed-form gradient of the angle in the base point.

    The Finsleroid route needs a constant axis norm (the connection
    itself assumes it); varying c stays available through the
    finite-difference oracle.
    """
    kind = spec.metric_kind
    geo = geometry(spec)
    fv = frame_values(spec, x)
    if kind == MetricKind.RIEMANNIAN:
        # theta = atan2(n-form, axis-form); field derivatives are exact
        dbt = geo.compiled(geo.dbt)(*x)
        dn = geo.compiled(_dn_exprs(geo))(*x)
        btv = fv.bt1 * y[0] + fv.bt2 * y[1]
        nv = fv.nvec[0] * y[0] + fv.nvec[1] * y[1]
        S2 = btv * btv + nv * nv
        out = []
        for nn in range(2):
            db = dbt[nn][0] * y[0] + dbt[nn][1] * y[1]
            dnv = dn[nn][0] * y[0] + dn[nn][1] * y[1]
            out.append((btv * dnv - nv * db) / S2)
        return np.asarray(out)

    if kind == MetricKind.FINSLEROID and not spec.c_constant:
        raise UnsupportedVaryingC(
            "closed-form angle gradient for this family needs c = const")

    jet = metric_core(fv, y, kind, want_metric=False)
    fd = frame_derivatives(spec, x)
    chris = np.asarray(geo.compiled(geo.christoffel)(*x))
    if kind == MetricKind.FINSLEROID:
        sc = jet.scalars
        T, F = sc.T, sc.K
        dg = geo.compiled(geo.dg)(*x)
        if any(d != 0.0 for d in dg):
            ddg = theta_dg(spec, x, y)
            extra = [ddg * dg[nn] for nn in range(2)]
        else:
            extra = [0.0, 0.0]
    else:
        T, F = (1.0 / fv.c) * jet.det_ratio ** 0.5, jet.F
        dc = geo.compiled(geo.dc)(*x)
        if any(d != 0.0 for d in dc):
            ddc = theta_dc(spec, x, y)
            extra = [ddc * dc[nn] for nn in range(2)]
        else:
            extra = [0.0, 0.0]
    b, n, S2, S = _forms(fv, y)
    out = []
    for nn in range(2):
        chris_y = chris[:, nn, :] @ np.asarray(y)
        term = float(chris_y @ np.asarray(jet.m_low)) / F
        out.append(extra[nn] - (T / (F * F)) * S2 * fd.p[nn] + term)
    return np.asarray(out)


def _dn_exprs(geo):
    from . import fieldspec as fs
    return [[fs.diff_expression(geo.n[i], nn + 1) for i in range(2)]
            for nn in range(2)]


def dtheta_dx_fd(spec, x, y, step=1e-6):
    """Finite-difference oracle: re-quadrature at displaced base points.

    The displaced angle is measured against the moved axis, which is
    exactly the meaning of the x-derivative of theta.
    """
    out = []
    for nn in range(2):
        xp = list(x)
        xm = list(x)
        xp[nn] += step
        xm[nn] -= step
        out.append((theta(spec, tuple(xp), y) - theta(spec, tuple(xm), y))
                   / (2.0 * step))
    return np.asarray(out)


# ---------------------------------------------------------------------------
# Areas and lengths
# ---------------------------------------------------------------------------

def sector_area(spec, x, y1, y2):
    """Measure-weighted area of the sector between two rays and the
    indicatrix.

    In polar form the radial integral is exact (the metric determinant
    is 0-homogeneous), leaving a 1-D quadrature of sqrt(det g)/F^2 over
    the polar angle; this route shares nothing with the angle
    quadrature, which makes it the area oracle for the half-angle law.
    """
    fv = frame_values(spec, x)
    p1 = polar_angle(fv, y1)
    p2 = polar_angle(fv, y2)
    kind = spec.metric_kind

    def integrand(phi):
        e = _arc_point(fv, phi)
        jet = metric_core(fv, e, kind, want_metric=False)
        sqrt_det_g = math.sqrt(jet.det_ratio) * fv.sqrt_det
        return sqrt_det_g / (jet.F * jet.F)

    if p1 == p2:
        return 0.0
    # frame Jacobian |det(btU, nU)| = 1 / sqrt(det a)
    return 0.5 / fv.sqrt_det * _quad(integrand, p1, p2, "sector area")


def indicatrix_arclength(spec, x):
    """Length of the indicatrix measured by its own metric."""
    fv = frame_values(spec, x)
    kind = spec.metric_kind

    def speed(phi):
        e = _arc_point(fv, phi)
        de = _arc_velocity(fv, phi)
        jet = metric_core(fv, e, kind, want_metric=False)
        F = jet.F
        dF = jet.l_low[0] * de[0] + jet.l_low[1] * de[1]
        # velocity of y(phi) = e(phi)/F(e(phi))
        v = tuple(de[i] / F - e[i] * dF / (F * F) for i in range(2))
        if kind == MetricKind.RANDERS:
            jet_full = metric_core(fv, e, kind, want_metric=True)
            gm = jet_full.g_mat
        else:
            gm = jet.g_mat
        s2 = sum(gm[i][j] * v[i] * v[j] for i in range(2) for j in range(2))
        return math.sqrt(s2)

    return (_quad(speed, -math.pi, 0.0, "arclength")
            + _quad(speed, 0.0, math.pi, "arclength"))


def indicatrix_sweep(spec, x, samples=360):
    """Indicatrix points with their angles: rows (phi, y1, y2, theta, F)."""
    fv = frame_values(spec, x)
    kind = spec.metric_kind
    psi = _arc_integrand(fv, kind)
    rows = []
    prev_phi = 0.0
    acc = 0.0
    phis = np.linspace(-math.pi, math.pi, samples, endpoint=False)
    # accumulate from 0 outward in both directions for stable quadrature
    order = np.argsort(np.abs(phis), kind="stable")
    thetas = {}
    pos_prev, pos_acc = 0.0, 0.0
    neg_prev, neg_acc = 0.0, 0.0
    for idx in order:
        phi = float(phis[idx])
        if phi >= 0.0:
            pos_acc += _quad(psi, pos_prev, phi, "sweep")
            pos_prev = phi
            thetas[idx] = pos_acc
        else:
            neg_acc += _quad(psi, neg_prev, phi, "sweep")
            neg_prev = phi
            thetas[idx] = neg_acc
    for idx, phi in enumerate(phis):
        e = _arc_point(fv, float(phi))
        jet = metric_core(fv, e, kind, want_metric=False)
        F = jet.F
        y = (e[0] / F, e[1] / F)
        rows.append((float(phi), y[0], y[1], thetas[idx], 1.0))
    return rows


# ---------------------------------------------------------------------------
# Chart-variable oracles
# ---------------------------------------------------------------------------

def chart_derivative_wtilde(spec, x, y):
    """Closed chart derivative d theta / d(n/b) on the axis charts."""
    fv = frame_values(spec, x)
    kind = spec.metric_kind
    b, n, S2, S = _forms(fv, y)
    if b == 0.0:
        raise ZeroVector("chart variable undefined on b = 0")
    if kind == MetricKind.FINSLEROID:
        sc = FinsleroidScalars(fv, y)
        return (1.0 / fv.c) * (b * b / sc.B) * math.sqrt(sc.nu / sc.q)
    if kind == MetricKind.RANDERS:
        F = S + b
        T = (1.0 / fv.c) * (F / S) ** 1.5
        return T * b * b / (F * F)
    return b * b / (fv.c * S2)  # background: theta = atan(n-form/axis-form)


def chart_derivative_t(spec, x, y):
    """Closed chart derivative d theta / dt on the transverse charts."""
    fv = frame_values(spec, x)
    b, n, S2, S = _forms(fv, y)
    if n == 0.0:
        raise ZeroVector("chart variable undefined on n = 0")
    if spec.metric_kind == MetricKind.FINSLEROID:
        sc = FinsleroidScalars(fv, y)
        return ((1.0 / fv.c) * (sc.q ** 3 / (abs(n) * sc.B))
                * math.sqrt(sc.nu / sc.q))
    if spec.metric_kind == MetricKind.RANDERS:
        F = S + b
        T = (1.0 / fv.c) * (F / S) ** 1.5
        q2 = S2 - b * b
        return T * q2 * math.sqrt(q2) / (abs(n) * F * F)
    q2 = S2 - b * b
    return q2 * math.sqrt(q2) / (fv.c * abs(n) * S2)
