"""Background Riemannian geometry of the base surface.

Everything that depends on x alone (frame, Christoffel symbols,
curvature, connection 1-forms, their x-derivatives) is built once per
manifold spec as expression trees by symbolic matrix algebra, then
compiled.  That makes every x-derivative in the engine exact; finite
differences are kept for the test oracles only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import fieldspec as fs
from .dual import Dual
from .errors import SingularMetric, ZeroVector

__all__ = [
    "DEFAULT_K_SIGN", "KChoice", "DEFAULT_K", "K_B85", "K_ZERO",
    "FrameValues", "RiemannPointData", "FrameDerivatives", "FieldGeometry",
    "geometry", "frame_values", "frame_values_dual",
    "riemann_at", "frame_derivatives", "riemann_curvature", "riemann_angle",
    "default_k", "angle_representation_residuals",
]

# Sign of the default connection 1-form k_n = sign * n^h (grad_n btilde_h).
# Resolved empirically: this sign makes the Riemannian-limit connection
# reproduce the Christoffel symbols (torsionless limit); the opposite sign
# is what the Finsleroid closed-form route implies and stays selectable.
DEFAULT_K_SIGN = -1

# gamma_{12} = -gamma_{21} = 1, diagonal zero
_GAMMA = ((0.0, 1.0), (-1.0, 0.0))


@dataclass(frozen=True)
class KChoice:
    """Selection of the covariant 1-form k_n(x) entering the connection.

    kind "default" uses sign * n^h grad_n btilde_h; "zero" switches the
    angle drift off entirely; "user" takes two expression sources.
    """

    kind: str = "default"
    sign: int = DEFAULT_K_SIGN
    exprs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("default", "zero", "user"):
            raise ValueError(f"unknown k choice {self.kind!r}")
        if self.kind == "user":
            parsed = tuple(
                e if isinstance(e, fs.Expression) else fs.parse_expression(e)
                for e in self.exprs
            )
            if len(parsed) != 2:
                raise ValueError("user k needs exactly two expressions")
            object.__setattr__(self, "exprs", parsed)


DEFAULT_K = KChoice("default", DEFAULT_K_SIGN)
K_B85 = KChoice("default", +1)   # choice implied by the Finsleroid expansion
K_ZERO = KChoice("zero")


class FrameValues:
    """Field values at a point, generic over float/Dual scalars.

    Only primitive fields are stored; inverse metric, frame vectors and
    their raised versions are derived so that dual-seeded instances stay
    internally consistent.
    """

    __slots__ = ("a11", "a12", "a22", "bt1", "bt2", "g", "c", "orientation",
                 "det", "sqrt_det", "inv", "btU", "nvec", "nU")

    def __init__(self, a11, a12, a22, bt1, bt2, g, c, orientation):
        self.a11, self.a12, self.a22 = a11, a12, a22
        self.bt1, self.bt2 = bt1, bt2
        self.g, self.c = g, c
        self.orientation = orientation

        det = a11 * a22 - a12 * a12
        from .dual import sqrt, value
        if value(det) <= 0.0:
            raise SingularMetric((float("nan"), float("nan")))
        self.det = det
        self.sqrt_det = sqrt(det)
        self.inv = ((a22 / det, -a12 / det), (-a12 / det, a11 / det))
        inv = self.inv
        btU = (inv[0][0] * bt1 + inv[0][1] * bt2,
               inv[1][0] * bt1 + inv[1][1] * bt2)
        self.btU = btU
        s = float(orientation)
        n1 = -s * self.sqrt_det * btU[1]
        n2 = s * self.sqrt_det * btU[0]
        self.nvec = (n1, n2)
        self.nU = (inv[0][0] * n1 + inv[0][1] * n2,
                   inv[1][0] * n1 + inv[1][1] * n2)

    @property
    def a(self):
        return ((self.a11, self.a12), (self.a12, self.a22))

    @property
    def bt(self):
        return (self.bt1, self.bt2)

    def b_lower(self):
        """Covariant components of the scaled axis 1-form b = c btilde."""
        return (self.c * self.bt1, self.c * self.bt2)

    def b_upper(self):
        return (self.c * self.btU[0], self.c * self.btU[1])


@dataclass
class RiemannPointData:
    a: np.ndarray            # (2, 2)
    a_inv: np.ndarray        # (2, 2)
    sqrt_det_a: float
    bt_lower: np.ndarray     # (2,)
    bt_upper: np.ndarray
    n_lower: np.ndarray
    n_upper: np.ndarray
    christoffel: np.ndarray  # (2, 2, 2): [k][n][h]
    eps_riem: np.ndarray     # (2, 2)


@dataclass
class FrameDerivatives:
    nabla_btilde: np.ndarray  # (2, 2): [n][h] = grad_n btilde_h
    pbar: np.ndarray          # n^h grad_n btilde_h
    p: np.ndarray             # c * pbar
    k: np.ndarray
    k_source: str


# ---------------------------------------------------------------------------
# Symbolic field algebra
# ---------------------------------------------------------------------------

def _inv2(m, det):
    return ((m[1][1] / det, -m[0][1] / det),
            (-m[1][0] / det, m[0][0] / det))


def _diff(e, axis):
    return fs.diff_expression(e, axis)


class FieldGeometry:
    """Expression-level geometry of one manifold spec.

    Attributes hold expression trees; ``compiled(name)`` returns cached
    fast evaluators ``f(x1, x2)`` for any of them (nested sequences of
    expressions are compiled element-wise).
    """

    def __init__(self, spec):
        self.spec = spec
        a = spec.a
        self.a = a
        self.det = fs.fold(a[0][0] * a[1][1] - a[0][1] * a[0][1])
        self.sqrt_det = fs.func("sqrt", self.det)
        self.a_inv = _inv2(a, self.det)
        self.bt = spec.btilde
        inv = self.a_inv
        self.btU = tuple(inv[i][0] * self.bt[0] + inv[i][1] * self.bt[1]
                         for i in range(2))
        s = float(spec.orientation)
        self.n = (fs.fold(fs.num(-s) * self.sqrt_det * self.btU[1]),
                  fs.fold(fs.num(s) * self.sqrt_det * self.btU[0]))
        self.nU = tuple(inv[i][0] * self.n[0] + inv[i][1] * self.n[1]
                        for i in range(2))
        self.g = spec.g
        self.c = spec.c

        self.da = [[[_diff(a[i][j], nn + 1) for j in range(2)]
                    for i in range(2)] for nn in range(2)]
        self.dbt = [[_diff(self.bt[i], nn + 1) for i in range(2)]
                    for nn in range(2)]
        self.dg = [_diff(self.g, nn + 1) for nn in range(2)]
        self.dc = [_diff(self.c, nn + 1) for nn in range(2)]

        # Christoffel symbols of the background metric
        half = fs.num(0.5)
        self.christoffel = [[[
            fs.fold(half * sum(
                inv[k][s_] * (self.da[n_][s_][h] + self.da[h][s_][n_]
                              - self.da[s_][n_][h])
                for s_ in range(2)))
            for h in range(2)] for n_ in range(2)] for k in range(2)]

        # covariant derivative of the axis frame
        chr_ = self.christoffel
        self.nabla_bt = [[
            fs.fold(self.dbt[n_][h] - sum(chr_[s_][n_][h] * self.bt[s_]
                                          for s_ in range(2)))
            for h in range(2)] for n_ in range(2)]
        self.pbar = tuple(
            fs.fold(sum(self.nU[h] * self.nabla_bt[n_][h] for h in range(2)))
            for n_ in range(2))
        self.p = tuple(fs.fold(self.c * self.pbar[n_]) for n_ in range(2))

        self._compiled = {}
        self._k_cache = {}
        self._curv = None

    # -- k-dependent pieces ------------------------------------------------
    def k_exprs(self, k_choice):
        if k_choice.kind == "zero":
            return (fs.ZERO, fs.ZERO)
        if k_choice.kind == "user":
            return k_choice.exprs
        sgn = fs.num(float(k_choice.sign))
        return tuple(fs.fold(sgn * self.pbar[n_]) for n_ in range(2))

    def k_bundle(self, k_choice):
        """Exprs for k, T, M, Lbar coefficients and Lbar curvature."""
        bundle = self._k_cache.get(k_choice)
        if bundle is not None:
            return bundle
        k = self.k_exprs(k_choice)
        T = tuple(fs.fold(self.pbar[n_] + k[n_]) for n_ in range(2))
        M = [[fs.fold(_diff(k[j], i + 1) - _diff(k[i], j + 1))
              for j in range(2)] for i in range(2)]
        # Lbar^n_ik = a^{nj} eps_jk T_i + christoffel^n_ik
        eps = [[fs.fold(self.sqrt_det * fs.num(_GAMMA[i][j]))
                for j in range(2)] for i in range(2)]
        inv = self.a_inv
        lbar = [[[fs.fold(
            sum(inv[n_][j] * eps[j][kk] for j in range(2)) * T[i]
            + self.christoffel[n_][i][kk])
            for kk in range(2)] for i in range(2)] for n_ in range(2)]
        lbar_curv = _curvature_exprs(lbar)
        bundle = {"k": k, "T": T, "M": M, "lbar": lbar,
                  "lbar_curv": lbar_curv}
        self._k_cache[k_choice] = bundle
        return bundle

    def curvature_exprs(self):
        if self._curv is None:
            self._curv = _curvature_exprs(self.christoffel)
        return self._curv

    # -- compilation ---------------------------------------------------------
    def compiled(self, obj):
        """Compile an expression or nested sequence of expressions."""
        key = _freeze(obj)
        fn = self._compiled.get(key)
        if fn is None:
            fn = _compile_tree(obj)
            self._compiled[key] = fn
        return fn


def _curvature_exprs(coeff):
    """R_k^n_ij = d_i coeff^n_jk - d_j coeff^n_ik + coeff m-products."""
    out = [[[[None] * 2 for _ in range(2)] for _ in range(2)] for _ in range(2)]
    dcoeff = [[[[_diff(coeff[n_][j][kk], i + 1) for kk in range(2)]
                for j in range(2)] for n_ in range(2)] for i in range(2)]
    for kk in range(2):
        for n_ in range(2):
            for i in range(2):
                for j in range(2):
                    expr = dcoeff[i][n_][j][kk] - dcoeff[j][n_][i][kk]
                    expr = expr + sum(
                        coeff[m][j][kk] * coeff[n_][i][m]
                        - coeff[m][i][kk] * coeff[n_][j][m]
                        for m in range(2))
                    out[kk][n_][i][j] = fs.fold(expr)
    return out


def _freeze(obj):
    if isinstance(obj, fs.Expression):
        return obj
    return tuple(_freeze(o) for o in obj)


def _compile_tree(obj):
    if isinstance(obj, fs.Expression):
        return fs.compile_expression(obj)
    subs = [_compile_tree(o) for o in obj]

    def call(x1, x2):
        return [f(x1, x2) for f in subs]

    return call


_GEOMETRY_CACHE: dict = {}


def geometry(spec) -> FieldGeometry:
    geo = _GEOMETRY_CACHE.get(id(spec))
    if geo is None or geo.spec is not spec:
        geo = FieldGeometry(spec)
        _GEOMETRY_CACHE[id(spec)] = geo
    return geo


# ---------------------------------------------------------------------------
# Numeric frames
# ---------------------------------------------------------------------------

def frame_values(spec, x) -> FrameValues:
    """Plain-float field values at x."""
    geo = geometry(spec)
    f = geo.compiled((geo.a[0][0], geo.a[0][1], geo.a[1][1],
                      geo.bt[0], geo.bt[1], geo.g, geo.c))
    a11, a12, a22, b1, b2, g, c = f(*x)
    try:
        return FrameValues(a11, a12, a22, b1, b2, g, c, spec.orientation)
    except SingularMetric:
        raise SingularMetric(x) from None


def frame_values_dual(spec, x) -> FrameValues:
    """Field values seeded as duals over the two x-directions.

    Running the pointwise pipelines on this frame yields exact
    x-derivatives of any derived quantity at fixed y.
    """
    geo = geometry(spec)
    f = geo.compiled((geo.a[0][0], geo.a[0][1], geo.a[1][1],
                      geo.bt[0], geo.bt[1], geo.g, geo.c))
    vals = f(*x)
    fd = geo.compiled((geo.da[0][0][0], geo.da[0][0][1], geo.da[0][1][1],
                       geo.dbt[0][0], geo.dbt[0][1], geo.dg[0], geo.dc[0],
                       geo.da[1][0][0], geo.da[1][0][1], geo.da[1][1][1],
                       geo.dbt[1][0], geo.dbt[1][1], geo.dg[1], geo.dc[1]))
    d = fd(*x)
    duals = [Dual(vals[i], (d[i], d[7 + i])) for i in range(7)]
    try:
        return FrameValues(*duals, spec.orientation)
    except SingularMetric:
        raise SingularMetric(x) from None


def riemann_at(spec, x) -> RiemannPointData:
    """Pointwise Riemannian data: metric, frame, Christoffel symbols."""
    geo = geometry(spec)
    fv = frame_values(spec, x)
    chris = np.asarray(geo.compiled(geo.christoffel)(*x), dtype=float)
    eps = fv.sqrt_det * np.asarray(_GAMMA)
    return RiemannPointData(
        a=np.asarray(fv.a, dtype=float),
        a_inv=np.asarray(fv.inv, dtype=float),
        sqrt_det_a=fv.sqrt_det,
        bt_lower=np.asarray(fv.bt, dtype=float),
        bt_upper=np.asarray(fv.btU, dtype=float),
        n_lower=np.asarray(fv.nvec, dtype=float),
        n_upper=np.asarray(fv.nU, dtype=float),
        christoffel=chris,
        eps_riem=eps,
    )


def frame_derivatives(spec, x, k_choice=DEFAULT_K) -> FrameDerivatives:
    geo = geometry(spec)
    nabla = np.asarray(geo.compiled(geo.nabla_bt)(*x), dtype=float)
    pbar = np.asarray(geo.compiled(geo.pbar)(*x), dtype=float)
    p = np.asarray(geo.compiled(geo.p)(*x), dtype=float)
    k = np.asarray(geo.compiled(geo.k_bundle(k_choice)["k"])(*x), dtype=float)
    source = k_choice.kind if k_choice.kind != "default" else (
        f"default(sign={k_choice.sign:+d})")
    return FrameDerivatives(nabla_btilde=nabla, pbar=pbar, p=p, k=k,
                            k_source=source)


def riemann_curvature(spec, x):
    """Curvature of the background metric and the sectional scalar.

    Returns ``(curv, R)`` where ``curv[k][n][i][j]`` is the curvature
    built from the Christoffel symbols, and ``2R`` is the full trace of
    its all-lowered form against the inverse metric.
    """
    geo = geometry(spec)
    data = riemann_at(spec, x)
    curv = np.asarray(geo.compiled(geo.curvature_exprs())(*x), dtype=float)
    low = np.einsum("lh,khij->klij", data.a, curv)  # a_{tlij} = a_{lh} a_t^h_ij
    R = 0.5 * np.einsum("ti,lj,tlij->", data.a_inv, data.a_inv, low)
    return curv, float(R)


def angle_representation_residuals(spec, x):
    """Residuals of the factorizations of the background curvature.

    Keys: ``two_form`` (curvature as R times the metric two-form),
    ``frame_factorization`` (the same through the axis frame), and
    ``frame_contraction`` (double contraction reproducing the lowered
    tensor with a sign).
    """
    data = riemann_at(spec, x)
    curv, R = riemann_curvature(spec, x)
    low = np.einsum("lh,khij->klij", data.a, curv)
    a = data.a
    two_form = -R * (np.einsum("tj,li->tlij", a, a)
                     - np.einsum("ti,lj->tlij", a, a))
    bt, n = data.bt_lower, data.n_lower
    pair = np.einsum("t,l->tl", n, bt) - np.einsum("l,t->tl", n, bt)
    frame = -R * np.einsum("tl,ji->tlij", pair,
                           np.einsum("j,i->ji", n, bt)
                           - np.einsum("i,j->ji", n, bt))
    contracted = np.einsum("t,l,tlij->ij", data.n_upper, data.bt_upper, low)
    kn = np.einsum("k,n->kn", bt, n) - np.einsum("n,k->kn", bt, n)
    resid_a4 = np.einsum("ij,kn->knij", contracted, kn) + low
    scale = max(1.0, float(np.max(np.abs(low))))
    return {
        "two_form": float(np.max(np.abs(low - two_form))) / scale,
        "frame_factorization": float(np.max(np.abs(low - frame))) / scale,
        "frame_contraction": float(np.max(np.abs(resid_a4))) / scale,
    }


def riemann_angle(spec, x, y):
    """Angle of y against the axis frame measured by the background metric."""
    ny = float(np.dot(riemann_at(spec, x).n_lower, y))
    by = float(np.dot(riemann_at(spec, x).bt_lower, y))
    if ny == 0.0 and by == 0.0:
        raise ZeroVector("angle of the zero vector")
    return float(np.arctan2(ny, by))


def default_k(spec, x, sign=DEFAULT_K_SIGN):
    """The resolved default connection 1-form sign * n^h grad_n btilde_h."""
    return frame_derivatives(spec, x, KChoice("default", sign)).k
