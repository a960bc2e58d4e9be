"""Curvature of the angle-preserving connection.

Closed forms: M^n_ij = F m^n M_ij with M_ij the curl of the connection
1-form, E from the frame expansion, and the curvature tensor
rho_k^n_ij = (l^n m_k - l_k m^n) M_ij.  The commutator route with
finite-difference derivatives of the coefficients is kept as the
oracle.  The x-only counterpart tensor is built symbolically from the
frame coefficients, and the pointwise tensor factors through it with
the determinant-ratio factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import connection_coeffs, derivative_coeffs
from .dual import value
from .errors import StepUnderflow
from .fieldspec import MetricKind
from .finsler import FinsleroidScalars, metric_core
from .riemann import DEFAULT_K, frame_values, geometry, riemann_curvature

__all__ = [
    "CurvatureJet", "curvature_closed", "curvature_commutator_oracle",
    "riemann_counterpart", "factorization_report",
    "commutator_action_residual",
]

_GAMMA = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass
class CurvatureJet:
    M: np.ndarray         # (2,2)      curl of the 1-form k
    M_up: np.ndarray      # (2,2,2)    [n][i][j] = F m^n M_ij
    E: np.ndarray         # (2,2,2,2)  [k][n][i][j]
    rho_up: np.ndarray    # (2,2,2,2)  [k][n][i][j]
    rho_low: np.ndarray   # (2,2,2,2)  [k][n][i][j], second slot lowered
    f1: float             # sqrt(det g / det a)
    Lbar: np.ndarray      # (2,2,2,2)  x-only counterpart, upper form
    Lbar_low: np.ndarray  # (2,2,2,2)
    T: np.ndarray         # (2,)       frame drift 1-form


def _field_curvature(spec, x, k_choice):
    """x-only pieces: M_ij, T_n, counterpart coefficients and curvature."""
    geo = geometry(spec)
    bundle = geo.k_bundle(k_choice)
    M = np.asarray(geo.compiled(bundle["M"])(*x), dtype=float)
    T = np.asarray(geo.compiled(bundle["T"])(*x), dtype=float)
    lbar_coeff = np.asarray(geo.compiled(bundle["lbar"])(*x), dtype=float)
    lbar_curv = np.asarray(geo.compiled(bundle["lbar_curv"])(*x), dtype=float)
    return M, T, lbar_coeff, lbar_curv


def curvature_closed(spec, x, y, k_choice=DEFAULT_K) -> CurvatureJet:
    fv = frame_values(spec, x)
    jet = metric_core(fv, y, spec.metric_kind,
                      want_metric=spec.metric_kind == MetricKind.RANDERS)
    M, T, _, lbar_curv = _field_curvature(spec, x, k_choice)

    F = value(jet.F)
    I = value(jet.I)
    l_low = np.array([value(v) for v in jet.l_low])
    l_up = np.array([value(v) for v in jet.l_up])
    m_low = np.array([value(v) for v in jet.m_low])
    m_up = np.array([value(v) for v in jet.m_up])

    M_up = F * np.einsum("n,ij->nij", m_up, M)
    coeff_E = (-np.einsum("k,n->kn", l_low, m_up)
               + np.einsum("n,k->kn", l_up, m_low)
               + I * np.einsum("k,n->kn", m_low, m_up))
    E = np.einsum("kn,ij->knij", coeff_E, M)
    eps_up = (np.einsum("n,k->nk", l_up, m_low)
              - np.einsum("k,n->nk", l_low, m_up))  # eps^n_k
    rho_up = np.einsum("nk,ij->knij", eps_up, M)
    f1 = float(np.sqrt(value(jet.det_ratio)))
    sqrt_det_g = f1 * fv.sqrt_det
    rho_low = np.einsum("nk,ij->knij", sqrt_det_g * _GAMMA, M)
    a = np.array([[fv.a11, fv.a12], [fv.a12, fv.a22]])
    lbar_low = np.einsum("nh,khij->knij", a, lbar_curv)
    return CurvatureJet(M=M, M_up=M_up, E=E, rho_up=rho_up, rho_low=rho_low,
                        f1=f1, Lbar=lbar_curv, Lbar_low=lbar_low, T=T)


# ---------------------------------------------------------------------------
# Commutator oracle
# ---------------------------------------------------------------------------

def curvature_commutator_oracle(spec, x, y, k_choice=DEFAULT_K, step=1e-6):
    """Curvature through the commutator definitions, coefficients
    differentiated by finite differences.

    Returns arrays ``M_up`` (connection-curl route), ``E`` (covariant
    commutator of D), and ``E_from_M`` (the y-derivative of the closed
    M, with a sign).
    """
    if step <= 0.0:
        raise StepUnderflow("finite-difference step must be positive")
    base = derivative_coeffs(spec, x, y, k_choice)

    def N_at(xx, yy):
        return connection_coeffs(spec, tuple(xx), tuple(yy), k_choice).N

    dN_dx = np.empty((2, 2, 2))  # [i][k][n] = dN^k_n/dx^i
    for i in range(2):
        xp = list(x)
        xm = list(x)
        xp[i] += step
        xm[i] -= step
        dN_dx[i] = (N_at(xp, y) - N_at(xm, y)) / (2.0 * step)

    M_up = np.empty((2, 2, 2))
    for n_ in range(2):
        for i in range(2):
            for j in range(2):
                M_up[n_][i][j] = (
                    dN_dx[i][n_][j] - dN_dx[j][n_][i]
                    - float(base.N[:, i] @ base.D[n_, j, :])
                    + float(base.N[:, j] @ base.D[n_, i, :]))

    def D_at(xx, yy):
        return derivative_coeffs(spec, tuple(xx), tuple(yy), k_choice).D

    dD_dx = np.empty((2, 2, 2, 2))  # [i][k][n][m]
    dD_dy = np.empty((2, 2, 2, 2))
    for i in range(2):
        xp = list(x)
        xm = list(x)
        xp[i] += step
        xm[i] -= step
        dD_dx[i] = (D_at(xp, y) - D_at(xm, y)) / (2.0 * step)
        yp = list(y)
        ym = list(y)
        yp[i] += step
        ym[i] -= step
        dD_dy[i] = (D_at(x, yp) - D_at(x, ym)) / (2.0 * step)

    def d_of_D(i, n_, j, kk):
        # d_i D^n_jk = dD/dx^i + N^h_i dD/dy^h
        return dD_dx[i][n_][j][kk] + float(
            base.N[:, i] @ dD_dy[:, n_, j, kk])

    E = np.empty((2, 2, 2, 2))
    for kk in range(2):
        for n_ in range(2):
            for i in range(2):
                for j in range(2):
                    E[kk][n_][i][j] = (
                        d_of_D(i, n_, j, kk) - d_of_D(j, n_, i, kk)
                        + float(base.D[:, j, kk] @ base.D[n_, i, :])
                        - float(base.D[:, i, kk] @ base.D[n_, j, :]))

    def Mup_at(yy):
        return curvature_closed(spec, x, tuple(yy), k_choice).M_up

    E_from_M = np.empty((2, 2, 2, 2))
    for kk in range(2):
        yp = list(y)
        ym = list(y)
        yp[kk] += step
        ym[kk] -= step
        E_from_M[kk] = -(Mup_at(yp) - Mup_at(ym)) / (2.0 * step)

    return {"M_up": M_up, "E": E, "E_from_M": E_from_M}


# ---------------------------------------------------------------------------
# Riemannian counterpart and factorization
# ---------------------------------------------------------------------------

def riemann_counterpart(spec, x, k_choice=DEFAULT_K):
    """x-only counterpart data.

    Returns the coefficient array L^k_nh (torsionful unless the frame
    drift vanishes), the counterpart curvature built from its negative,
    and the background curvature for comparison.
    """
    M, T, lbar_coeff, lbar_curv = _field_curvature(spec, x, k_choice)
    a_curv, R = riemann_curvature(spec, x)
    return {
        "M": M,
        "T": T,
        "L_coeff": -lbar_coeff,     # L^k_nh = -(counterpart coefficients)
        "Lbar_coeff": lbar_coeff,
        "Lbar": lbar_curv,
        "a_curv": a_curv,
        "R": R,
    }


def factorization_report(spec, x, k_choice=DEFAULT_K, ys=(), rng=None,
                         n_y=50):
    """Pointwise-vs-counterpart factorization residuals over a y-sample.

    Residuals are data, not booleans: the maximum of
    |rho_knij - f1 Lbar_knij| relative to max |Lbar| over the sample,
    together with the worst |f1 - c T| for the Finsleroid family.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    ys = list(ys)
    while len(ys) < n_y:
        cand = rng.uniform(-3.0, 3.0, 2)
        if np.linalg.norm(cand) > 0.1:
            ys.append(tuple(cand))

    fv = frame_values(spec, x)
    jet0 = curvature_closed(spec, x, ys[0], k_choice)
    scale = max(np.abs(jet0.Lbar_low).max(), 1e-300)
    worst = 0.0
    worst_f1_cT = 0.0
    for y in ys:
        jet = curvature_closed(spec, x, y, k_choice)
        worst = max(worst, float(
            np.abs(jet.rho_low - jet.f1 * jet.Lbar_low).max()))
        if spec.metric_kind == MetricKind.FINSLEROID:
            sc = FinsleroidScalars(fv, y)
            worst_f1_cT = max(worst_f1_cT,
                              abs(jet.f1 - value(fv.c * sc.T)))
    return {
        "max_abs_residual": worst,
        "lbar_scale": float(scale),
        "max_rel_residual": worst / scale if scale > 0 else worst,
        "max_f1_minus_cT": worst_f1_cT,
    }


# ---------------------------------------------------------------------------
# Commutator action on a test tensor
# ---------------------------------------------------------------------------

def commutator_action_residual(spec, x, y, k_choice=DEFAULT_K, step=1e-4):
    """Residual of the commutator acting on the tensor w^n_k = l^n m_k.

    The left side applies the covariant derivative twice (outer
    derivatives by nested finite differences, the already-differentiated
    slot kept inert, as in the commutator's definition); the right side
    uses the closed curvature with the fiber covariant derivative.
    """
    from .connection import cov_deriv_tensor11, s_derivative_tensor11
    from .dual import Dual
    from .riemann import frame_values_dual

    kind = spec.metric_kind

    def w_field(xx, yy):
        fv = frame_values(spec, tuple(xx))
        jet = metric_core(fv, tuple(yy), kind, want_metric=False)
        return np.array([[value(jet.l_up[n_]) * value(jet.m_low[kk])
                          for kk in range(2)] for n_ in range(2)])

    def w_partials(xx, yy):
        fvd = frame_values_dual(spec, tuple(xx))
        jetx = metric_core(fvd, tuple(yy), kind, want_metric=False)
        wx = np.array([[[_grad(jetx.l_up[n_] * jetx.m_low[kk])[nn]
                         for kk in range(2)] for n_ in range(2)]
                       for nn in range(2)])
        fv = frame_values(spec, tuple(xx))
        yd = (Dual(yy[0], (1.0, 0.0)), Dual(yy[1], (0.0, 1.0)))
        jety = metric_core(fv, yd, kind, want_metric=False)
        wy = np.array([[[_grad(jety.l_up[n_] * jety.m_low[kk])[hh]
                         for kk in range(2)] for n_ in range(2)]
                       for hh in range(2)])
        return wx, wy

    def cov(xx, yy):
        """V[j][n][k] = (D_j w)^n_k at the given point."""
        jet = derivative_coeffs(spec, tuple(xx), tuple(yy), k_choice)
        wx, wy = w_partials(xx, yy)
        return cov_deriv_tensor11(jet, w_field(xx, yy), wx, wy)

    base_jet = derivative_coeffs(spec, x, y, k_choice)
    inner = cov(x, y)

    dcov_dx = np.empty((2, 2, 2, 2))
    dcov_dy = np.empty((2, 2, 2, 2))
    for i in range(2):
        xp, xm = list(x), list(x)
        xp[i] += step
        xm[i] -= step
        dcov_dx[i] = (cov(xp, y) - cov(xm, y)) / (2.0 * step)
        yp, ym = list(y), list(y)
        yp[i] += step
        ym[i] -= step
        dcov_dy[i] = (cov(x, yp) - cov(x, ym)) / (2.0 * step)

    def outer(i, j):
        """(D_i V_j)^n_k with the slot j inert."""
        d = dcov_dx[i][j] + np.einsum(
            "h,hnk->nk", base_jet.N[:, i], dcov_dy[:, j, :, :])
        up = np.einsum("nh,hk->nk", base_jet.D[:, i, :], inner[j])
        down = np.einsum("hk,nh->nk", base_jet.D[:, i, :], inner[j])
        return d + up - down

    lhs = outer(0, 1) - outer(1, 0)

    closed = curvature_closed(spec, x, y, k_choice)
    w0 = w_field(x, y)
    _, wy = w_partials(x, y)
    s_w = s_derivative_tensor11(spec, x, y, w0, wy)
    rhs = (np.einsum("h,hnk->nk", closed.M_up[:, 0, 1], s_w)
           - np.einsum("kh,nh->nk", closed.rho_up[:, :, 0, 1], w0)
           + np.einsum("hn,hk->nk", closed.rho_up[:, :, 0, 1], w0))
    scale = max(1.0, np.abs(rhs).max())
    return float(np.abs(lhs - rhs).max() / scale)


def _grad(v):
    from .dual import Dual
    return v.grad if isinstance(v, Dual) else (0.0, 0.0)
