"""The angle-preserving connection.

Coefficients N^k_n = -l^k dF/dx^n - F m^k (dtheta/dx^n - k_n) together
with their y-derivative hierarchy, the horizontal operator d_n, the
covariant derivative built from D^k_in = -dN^k_i/dy^n, and the
family-specific closed expansion valid for the Finsleroid family at
constant axis norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .angle import dtheta_dx, theta_dg
from .dual import Dual, sqrt, value
from .errors import UnsupportedVaryingC, ZeroVector
from .fieldspec import MetricKind
from .finsler import FinsleroidScalars, metric_core, metric_value, _forms
from .riemann import (
    DEFAULT_K,
    K_B85,
    KChoice,
    frame_values,
    frame_values_dual,
    geometry,
)

__all__ = [
    "ConnectionJet", "connection_coeffs", "derivative_coeffs",
    "dF_dx", "d_scalar", "d_apply", "scalar_partials",
    "cov_deriv_vector_up", "cov_deriv_vector_down", "cov_deriv_tensor02",
    "cov_deriv_tensor11", "s_derivative_tensor11", "cartan_up",
    "finsleroid_connection_b85", "finsleroid_Zn", "AXIS_I_THRESHOLD",
]

# below this |I| the logarithmic rewrite of the third-derivative
# coefficients is meaningless (indicatrix axis); the direct form is used
AXIS_I_THRESHOLD = 1e-12


@dataclass
class ConnectionJet:
    """Connection data at one (x, y)."""

    N: np.ndarray                 # (2,2)  [k][n]
    P_breve: np.ndarray           # (2,)   dtheta/dx^n - k_n
    k: np.ndarray                 # (2,)
    dF: np.ndarray                # (2,)   dF/dx^n
    N_y: Optional[np.ndarray] = None    # (2,2,2)   [k][n][m] = dN^k_n/dy^m
    N_yy: Optional[np.ndarray] = None   # (2,2,2,2) [k][n][m][i]
    D: Optional[np.ndarray] = None      # (2,2,2)   [k][i][n] = -N_y[k][i][n]
    Z: Optional[np.ndarray] = None      # Finsleroid third-derivative scalar
    axis_note: bool = False


def _k_values(spec, x, k_choice):
    geo = geometry(spec)
    return np.asarray(geo.compiled(geo.k_bundle(k_choice)["k"])(*x),
                      dtype=float)


def dF_dx(spec, x, y):
    """Closed-form base-point gradient of the metric value.

    Finsleroid: charge term plus the axis-transport and Christoffel
    contractions; Randers and Riemannian: direct field assembly.  The
    dual-seeded generic route is available as ``dF_dx_ad`` and the two
    agree to rounding.
    """
    geo = geometry(spec)
    fv = frame_values(spec, x)
    chris = np.asarray(geo.compiled(geo.christoffel)(*x))
    pbar = np.asarray(geo.compiled(geo.pbar)(*x))
    dc = geo.compiled(geo.dc)(*x)
    b, n, S2, S = _forms(fv, y)
    u = (fv.a11 * y[0] + fv.a12 * y[1], fv.a12 * y[0] + fv.a22 * y[1])
    kind = spec.metric_kind
    # y^j grad_n b_j for the scaled axis 1-form b = c btilde
    ynabla_b = np.array([dc[nn] * (b / fv.c) + fv.c * pbar[nn] * n
                         for nn in range(2)])
    chris_y = np.einsum("knj,j->kn", chris, np.asarray(y))
    if kind == MetricKind.RIEMANNIAN:
        return np.array([float(np.dot(u, chris_y[:, nn])) / S
                         for nn in range(2)])
    if kind == MetricKind.RANDERS:
        bl = fv.b_lower()
        return np.array([
            float(np.dot(u, chris_y[:, nn])) / S
            + ynabla_b[nn] + float(np.dot(bl, chris_y[:, nn]))
            for nn in range(2)])
    sc = FinsleroidScalars(fv, y)
    dg = geo.compiled(geo.dg)(*x)
    l_low = tuple((u[i] + sc.g * sc.q * fv.b_lower()[i]) * sc.K / sc.B
                  for i in range(2))
    return np.array([
        0.5 * sc.Mbar * sc.K * dg[nn]
        + (sc.K / sc.B) * sc.g * sc.q * ynabla_b[nn]
        + float(np.dot(l_low, chris_y[:, nn]))
        for nn in range(2)])


def dF_dx_ad(spec, x, y):
    """Base-point gradient of F through dual-seeded field values."""
    fvd = frame_values_dual(spec, x)
    F = metric_value(fvd, y, spec.metric_kind)
    return np.asarray(F.grad)


def connection_coeffs(spec, x, y, k_choice=DEFAULT_K) -> ConnectionJet:
    """First-order jet: the coefficients N^k_n and the 1-form they use."""
    fv = frame_values(spec, x)
    jet = metric_core(fv, y, spec.metric_kind, want_metric=False)
    k = _k_values(spec, x, k_choice)
    dth = dtheta_dx(spec, x, y)
    dF = dF_dx(spec, x, y)
    P = dth - k
    l_up = np.array([value(v) for v in jet.l_up])
    m_up = np.array([value(v) for v in jet.m_up])
    F = value(jet.F)
    N = -np.outer(l_up, dF) - F * np.outer(m_up, P)
    return ConnectionJet(N=N, P_breve=P, k=k, dF=dF)


def derivative_coeffs(spec, x, y, k_choice=DEFAULT_K) -> ConnectionJet:
    """Full jet: N, its first and second y-derivatives, and D = -N'.

    The first derivative comes from the closed expansion in the frame
    derivatives; the second from the main-scalar form.  On the
    indicatrix axis the main scalar vanishes and the logarithmic
    rewrite is bypassed (flagged by ``axis_note``).
    """
    cj = connection_coeffs(spec, x, y, k_choice)
    fv = frame_values(spec, x)
    fvd = frame_values_dual(spec, x)
    kind = spec.metric_kind

    jet = metric_core(fv, y, kind, want_metric=False)
    jet_dx = metric_core(fvd, y, kind, want_metric=False)
    yd = (Dual(y[0], (1.0, 0.0)), Dual(y[1], (0.0, 1.0)))
    jet_dy = metric_core(fv, yd, kind, want_metric=False)

    F = value(jet.F)
    I = value(jet.I)
    l_low = [value(v) for v in jet.l_low]
    l_up = [value(v) for v in jet.l_up]
    m_low = [value(v) for v in jet.m_low]
    m_up = [value(v) for v in jet.m_up]
    P = cj.P_breve

    dl_dx = [[jet_dx.l_low[m].grad[nn] for m in range(2)] for nn in range(2)]
    dm_dx = [[jet_dx.m_low[m].grad[nn] for m in range(2)] for nn in range(2)]
    dI_dx = list(jet_dx.I.grad) if isinstance(jet_dx.I, Dual) else [0.0, 0.0]
    dI_dy = list(jet_dy.I.grad) if isinstance(jet_dy.I, Dual) else [0.0, 0.0]

    N_y = np.empty((2, 2, 2))
    for k_ in range(2):
        for nn in range(2):
            for m in range(2):
                N_y[k_][nn][m] = (
                    -l_up[k_] * dl_dx[nn][m]
                    - l_low[m] * m_up[k_] * P[nn]
                    + (I * m_up[k_] + l_up[k_]) * m_low[m] * P[nn]
                    - m_up[k_] * dm_dx[nn][m])

    N_yy = np.empty((2, 2, 2, 2))
    for k_ in range(2):
        for nn in range(2):
            for m in range(2):
                for i in range(2):
                    N_yy[k_][nn][m][i] = (m_up[k_] * m_low[m] / F) * (
                        F * dI_dy[i] * P[nn] - m_low[i] * dI_dx[nn])

    D = -np.transpose(N_y, (0, 1, 2))  # D^k_in = -N^k_{i n} = -dN^k_i/dy^n
    cj.N_y = N_y
    cj.N_yy = N_yy
    cj.D = D
    cj.axis_note = abs(I) < AXIS_I_THRESHOLD
    if kind == MetricKind.FINSLEROID and spec.c_constant:
        cj.Z = finsleroid_Zn(spec, x, y)
    return cj


# ---------------------------------------------------------------------------
# horizontal and covariant derivatives
# ---------------------------------------------------------------------------

def d_scalar(jet: ConnectionJet, dW_dx, dW_dy):
    """d_n W = dW/dx^n + N^k_n dW/dy^k from precomputed partials."""
    return np.asarray(dW_dx) + np.einsum("kn,k->n", jet.N, np.asarray(dW_dy))


def scalar_partials(spec, x, y, fn):
    """(value, dW/dx, dW/dy) of a generic scalar ``fn(frame, y)``.

    Partials are exact: the frame and the fiber point are dual-seeded in
    turn and the closed forms are replayed.
    """
    fv = frame_values(spec, x)
    w = fn(fv, y)
    fvd = frame_values_dual(spec, x)
    wx = fn(fvd, y)
    yd = (Dual(y[0], (1.0, 0.0)), Dual(y[1], (0.0, 1.0)))
    wy = fn(fv, yd)
    gx = wx.grad if isinstance(wx, Dual) else (0.0, 0.0)
    gy = wy.grad if isinstance(wy, Dual) else (0.0, 0.0)
    return value(w), np.asarray(gx), np.asarray(gy)


def d_apply(spec, x, y, jet, fn):
    """Apply the horizontal operator to a generic scalar field."""
    _, dx_, dy_ = scalar_partials(spec, x, y, fn)
    return d_scalar(jet, dx_, dy_)


def cov_deriv_vector_down(jet, w, dw_dx, dw_dy):
    """D_i w_j = d_i w_j - D^h_ij w_h for a covariant field."""
    d = np.asarray(dw_dx) + np.einsum("ki,kj->ij", jet.N, np.asarray(dw_dy))
    return d - np.einsum("hij,h->ij", jet.D, np.asarray(w))


def cov_deriv_vector_up(jet, w, dw_dx, dw_dy):
    """D_i w^j = d_i w^j + D^j_ih w^h."""
    d = np.asarray(dw_dx) + np.einsum("ki,kj->ij", jet.N, np.asarray(dw_dy))
    return d + np.einsum("jih,h->ij", jet.D, np.asarray(w))


def cov_deriv_tensor02(jet, w, dw_dx, dw_dy):
    """D_i w_jn = d_i w_jn - D^h_ij w_hn - D^h_in w_jh."""
    d = np.asarray(dw_dx) + np.einsum("ki,kjn->ijn", jet.N, np.asarray(dw_dy))
    return (d - np.einsum("hij,hn->ijn", jet.D, np.asarray(w))
            - np.einsum("hin,jh->ijn", jet.D, np.asarray(w)))


def cov_deriv_tensor11(jet, w, dw_dx, dw_dy):
    """D_n w^k_m = d_n w^k_m + D^k_nh w^h_m - D^h_nm w^k_h."""
    d = np.asarray(dw_dx) + np.einsum("jn,jkm->nkm", jet.N, np.asarray(dw_dy))
    return (d + np.einsum("knh,hm->nkm", jet.D, np.asarray(w))
            - np.einsum("hnm,kh->nkm", jet.D, np.asarray(w)))


def cartan_up(spec, x, y):
    """C^n_hk = (I/F) m^n m_h m_k."""
    fv = frame_values(spec, x)
    jet = metric_core(fv, y, spec.metric_kind, want_metric=False)
    I, F = value(jet.I), value(jet.F)
    m_up = np.array([value(v) for v in jet.m_up])
    m_low = np.array([value(v) for v in jet.m_low])
    return (I / F) * np.einsum("n,h,k->nhk", m_up, m_low, m_low)


def s_derivative_tensor11(spec, x, y, w, dw_dy):
    """Fiber covariant derivative S_h w^n_k in the tangent space.

    S_h w^n_k = dw^n_k/dy^h + C^n_hm w^m_k - C^m_hk w^n_m, with
    ``dw_dy`` indexed derivative-direction first ([h][n][k]).
    """
    C = cartan_up(spec, x, y)
    d = np.asarray(dw_dy)
    return (d + np.einsum("nhm,mk->hnk", C, np.asarray(w))
            - np.einsum("mhk,nm->hnk", C, np.asarray(w)))


# ---------------------------------------------------------------------------
# Finsleroid closed expansion (constant axis norm)
# ---------------------------------------------------------------------------

def finsleroid_connection_b85(spec, x, y):
    """Closed frame expansion of the connection for the Finsleroid family.

    Valid for constant axis norm; the 1-form it realizes is
    k_n = + n^h grad_n btilde_h (the opposite of the torsionless
    default).  Must agree with the generic route under that choice.
    """
    if spec.metric_kind != MetricKind.FINSLEROID:
        raise ValueError("closed expansion applies to the finsleroid family")
    if not spec.c_constant:
        raise UnsupportedVaryingC("closed expansion needs c = const")
    geo = geometry(spec)
    fv = frame_values(spec, x)
    sc = FinsleroidScalars(fv, y)
    pbar = np.asarray(geo.compiled(geo.pbar)(*x))
    p = fv.c * pbar
    chris = np.asarray(geo.compiled(geo.christoffel)(*x))
    dg = np.asarray(geo.compiled(geo.dg)(*x))

    c, c2 = fv.c, fv.c * fv.c
    b, n, q = sc.b, sc.n, sc.q
    U, B1 = sc.U, sc.B1
    bU = np.asarray(fv.b_upper())
    nU = np.asarray(fv.nU)
    yv = np.asarray(y)
    l_up = yv / sc.K
    u = (fv.a11 * y[0] + fv.a12 * y[1], fv.a12 * y[0] + fv.a22 * y[1])
    l_low = np.array([(u[i] + sc.g * q * fv.b_lower()[i]) * sc.K / sc.B
                      for i in range(2)])
    m_up = np.array([
        c * np.sqrt(q / sc.nu) * ((b * nU[i] - n * bU[i]) / c2
                                  + sc.g * q * nU[i]) / sc.K
        for i in range(2)])

    dstar_K = 0.5 * sc.Mbar * sc.K * dg
    if np.any(dg != 0.0):
        dstar_theta = theta_dg(spec, x, y) * dg
    else:
        dstar_theta = np.zeros(2)

    chris_y = np.einsum("knj,j->kn", chris, yv)
    N = np.empty((2, 2))
    for k_ in range(2):
        for nn in range(2):
            N[k_][nn] = (
                ((b / c2 - U * c2 * B1) * nU[k_]
                 + n * (U - 1.0 / c2) * bU[k_]) * p[nn]
                - l_up[k_] * dstar_K[nn]
                - sc.K * m_up[k_] * dstar_theta[nn]
                - chris_y[k_][nn])
    return N


def finsleroid_Zn(spec, x, y):
    """Scalar Z_n of the closed third-derivative form
    N^k_nmi = (1/K) Z_n m^k m_m m_i, for constant axis norm.

    The transport part multiplies the reduced combination
    C1 p_n + (charge-direction derivative of theta), not the full
    connection 1-form; the remaining term is the explicit
    charge-direction derivative of g / (X sqrt(q nu)).
    """
    if spec.metric_kind != MetricKind.FINSLEROID or not spec.c_constant:
        return None
    geo = geometry(spec)
    fv = frame_values(spec, x)
    sc = FinsleroidScalars(fv, y)
    dg = np.asarray(geo.compiled(geo.dg)(*x))
    pbar = np.asarray(geo.compiled(geo.pbar)(*x))
    if np.any(dg != 0.0):
        dstar_theta = theta_dg(spec, x, y) * dg
    else:
        dstar_theta = np.zeros(2)
    P = sc.C1 * fv.c * pbar + dstar_theta

    g, c = sc.g, sc.c
    b, n, q, nu, B = sc.b, sc.n, sc.q, sc.nu, sc.B
    c2 = c * c
    one_c2 = 1.0 - c2
    lead = (-0.75 * g * one_c2 * one_c2 * B * B
            * (2.0 * b * nu + g * c2 * n * n) / (q ** 3 * nu ** 3))
    # d/dg of W = g Xinv / sqrt(q nu) at fixed (b, n, q)
    u_ = q * nu
    du = q * one_c2 * b
    dXinv = c2 * n * n * du / (u_ * u_)
    W = g * sc.Xinv / np.sqrt(u_)
    dW = (sc.Xinv / np.sqrt(u_) + g * dXinv / np.sqrt(u_)
          - 0.5 * g * sc.Xinv * du / u_ ** 1.5)
    return lead * P + 0.5 * n * c * dW * dg
