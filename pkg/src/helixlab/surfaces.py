"""Metric and curvature analysis of parametric surfaces.

Sign convention: the shape operator is S(X) = D_X Z with Z the unit normal
phi_u x phi_v / |phi_u x phi_v|. This is the opposite of the classical
Weingarten map -dZ, so the mean curvature H = tr(S)/2 reported here is the
negative of the classical value. K = det(S) does not depend on the choice.

The second form coefficients L, M, N are the normal components of the
second partials (L = <phi_uu, Z>, ...). In this convention the matrix of S
in the basis (phi_u, phi_v) is -I^{-1} II, hence

    H = (2FM - EN - GL) / (2(EG - F^2)),   K = (LN - M^2) / (EG - F^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex
from .curves import TOL_CONST, ConstancyReport, generalized_cross
from .errors import DomainEscape, EmptyGrid, NotSupported, SingularPoint, UmbilicPoint

TOL_SING = 1e-9
TOL_UMB = 1e-8


@dataclass(frozen=True, eq=False)
class SurfacePatch:
    """Two-parameter map (u, v) -> R^n given by expressions."""

    components: tuple
    params: tuple = ("u", "v")
    domain: tuple = ((0.0, 1.0), (0.0, 1.0))
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(ex.as_expr(c) for c in self.components))
        object.__setattr__(self, "params", tuple(self.params))
        dom = tuple((float(lo), float(hi)) for lo, hi in self.domain)
        object.__setattr__(self, "domain", dom)
        if len(self.params) != 2 or self.params[0] == self.params[1]:
            raise ValueError("a surface patch needs two distinct parameters")
        for c in self.components:
            extra = ex.free_params(c) - set(self.params)
            if extra:
                raise ex.UnknownParameter(sorted(extra)[0])

    @classmethod
    def from_strings(cls, components: Sequence[str], params=("u", "v"), domain=((0, 1), (0, 1))):
        return cls(tuple(ex.parse(c, params) for c in components), params, domain)

    @property
    def dim(self) -> int:
        return len(self.components)

    def partial_exprs(self) -> dict:
        """Symbolic partials keyed by '', 'u', 'v', 'uu', 'uv', 'vv'."""
        if "partials" not in self._cache:
            u, v = self.params
            d_u = tuple(ex.differentiate(c, u) for c in self.components)
            d_v = tuple(ex.differentiate(c, v) for c in self.components)
            self._cache["partials"] = {
                "": self.components,
                "u": d_u,
                "v": d_v,
                "uu": tuple(ex.differentiate(c, u) for c in d_u),
                "uv": tuple(ex.differentiate(c, v) for c in d_u),
                "vv": tuple(ex.differentiate(c, v) for c in d_v),
            }
        return self._cache["partials"]

    def jet_function(self, vectorized=False):
        """Compiled (u, v) -> array (6, n): phi, phi_u, phi_v, phi_uu, phi_uv, phi_vv."""
        key = ("jet", vectorized)
        if key not in self._cache:
            parts = self.partial_exprs()
            exprs = [c for k in ("", "u", "v", "uu", "uv", "vv") for c in parts[k]]
            raw = ex.compile_exprs(exprs, self.params, vectorized=vectorized)
            n = self.dim

            def jet(u, v):
                out = np.asarray(raw(u, v), dtype=float)
                return out.reshape((6, n) + out.shape[1:])

            self._cache[key] = jet
        return self._cache[key]

    def point(self, u, v):
        return self.jet_function()(float(u), float(v))[0]

    def grid(self, nu: int, nv: int):
        (u0, u1), (v0, v1) = self.domain
        return np.linspace(u0, u1, nu), np.linspace(v0, v1, nv)

    def grid_jet(self, nu: int, nv: int):
        """Jet on the full grid, shape (6, n, nu, nv), plus the 1-D axes."""
        us, vs = self.grid(nu, nv)
        U, V = np.meshgrid(us, vs, indexing="ij")
        return self.jet_function(vectorized=True)(U, V), us, vs

    def contains(self, u, v, slack=1e-9) -> bool:
        (u0, u1), (v0, v1) = self.domain
        return u0 - slack <= u <= u1 + slack and v0 - slack <= v <= v1 + slack


@dataclass
class FundamentalForms:
    E: float
    F: float
    G: float
    L: float
    M: float
    N: float
    K: float
    H: float
    normal: np.ndarray


@dataclass
class ShapeOperator2:
    matrix: np.ndarray  # columns: S(phi_u), S(phi_v) in the basis (phi_u, phi_v)
    eigenvalues: np.ndarray  # ascending
    coefficients: np.ndarray | None  # columns: principal directions in (u, v) coordinates
    directions: np.ndarray | None  # rows: unit principal directions in R^n
    umbilic: bool


# ---------------------------------------------------------------------------
# pointwise quantities (array-friendly: trailing axes are grid axes)

def _dot(a, b):
    return np.sum(a * b, axis=0)


def _cross3(a, b):
    return np.stack([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def _forms_from_jet(jet):
    _, pu, pv, puu, puv, pvv = jet
    E, F, G = _dot(pu, pu), _dot(pu, pv), _dot(pv, pv)
    cr = _cross3(pu, pv)
    area = np.sqrt(_dot(cr, cr))
    with np.errstate(divide="ignore", invalid="ignore"):
        Z = cr / area
        L, M, N = _dot(puu, Z), _dot(puv, Z), _dot(pvv, Z)
        W = E * G - F * F
        K = (L * N - M * M) / W
        H = (2 * F * M - E * N - G * L) / (2 * W)
    return dict(E=E, F=F, G=G, L=L, M=M, N=N, K=K, H=H, Z=Z, area=area)


def first_form(p: SurfacePatch, u, v):
    """(E, F, G) at (u, v); valid in any ambient dimension."""
    _, pu, pv = p.jet_function()(float(u), float(v))[:3]
    return float(pu @ pu), float(pu @ pv), float(pv @ pv)


def _require_3d(p):
    if p.dim != 3:
        raise NotSupported(f"second fundamental form needs ambient dimension 3, got {p.dim}")


def fundamental_forms(p: SurfacePatch, u, v, tol_sing=TOL_SING) -> FundamentalForms:
    _require_3d(p)
    f = _forms_from_jet(p.jet_function()(float(u), float(v)))
    if not f["area"] > tol_sing:
        raise SingularPoint(u, v)
    return FundamentalForms(
        **{k: float(f[k]) for k in "EFGLMNKH"}, normal=np.asarray(f["Z"], dtype=float)
    )


def forms_grid(p: SurfacePatch, nu: int, nv: int, tol_sing=TOL_SING):
    """Forms on the full grid; entries at singular points are NaN.

    Returns (forms dict of (nu, nv) arrays, us, vs, regular mask).
    """
    _require_3d(p)
    jet, us, vs = p.grid_jet(nu, nv)
    f = _forms_from_jet(jet)
    mask = f["area"] > tol_sing
    for k in "EFGLMNKHZ":
        if k in "EFG":
            continue
        f[k] = np.where(mask, f[k], np.nan)
    f["points"] = jet[0]
    return f, us, vs, mask


def unit_normal(p: SurfacePatch, u, v, tol_sing=TOL_SING) -> np.ndarray:
    _require_3d(p)
    _, pu, pv = p.jet_function()(float(u), float(v))[:3]
    cr = _cross3(pu, pv)
    a = float(np.linalg.norm(cr))
    if a <= tol_sing:
        raise SingularPoint(u, v)
    return cr / a


def helix_surface_test(p: SurfacePatch, d, grid=(40, 40), tol=TOL_CONST, tol_sing=TOL_SING,
                       region=None) -> ConstancyReport:
    """Constancy of <Z, d> over the grid; singular points are excluded and counted.

    ``region(U, V)``, when given, returns a boolean array of admitted grid
    points; the rest are excluded as well.
    """
    _require_3d(p)
    d = np.asarray(d, dtype=float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9:
        raise ValueError("direction d must be a unit vector")
    jet, us, vs = p.grid_jet(*grid)
    cr = _cross3(jet[1], jet[2])
    area = np.sqrt(_dot(cr, cr))
    mask = area > tol_sing
    if region is not None:
        mask &= np.asarray(region(*np.meshgrid(us, vs, indexing="ij")), dtype=bool)
    if not mask.any():
        raise EmptyGrid("every grid point is singular")
    vals = _dot(cr, d.reshape(3, 1, 1))[mask] / area[mask]
    return ConstancyReport.from_values(vals, tol, excluded=int((~mask).sum()))


def ruled_developability_det(directrix, ruling: Sequence, t):
    """det(T, X, X') for the ruled surface directrix(t) + s X(t) in E^3.

    ``ruling`` holds three expressions in the directrix parameter; ``t`` may
    be a scalar or an array.
    """
    from .curves import CurveN

    if directrix.dim != 3:
        raise NotSupported("the determinant test is for surfaces in E^3")
    X = CurveN(tuple(ruling), directrix.param, directrix.domain)
    tt = np.asarray(t, dtype=float)
    d1 = directrix.jet_function(1, vectorized=True)(tt)[1]
    xj = X.jet_function(1, vectorized=True)(tt)
    speed = np.sqrt(_dot(d1, d1))
    if np.any(speed <= 1e-9):
        from .errors import NonRegularCurve

        bad = np.argmin(speed)
        raise NonRegularCurve(float(np.ravel(tt)[bad] if tt.ndim else tt), float(np.min(speed)))
    T = d1 / speed
    det = _dot(T, _cross3(xj[0], xj[1]))
    return float(det) if tt.ndim == 0 else det


def shape_operator(p: SurfacePatch, u, v, tol_sing=TOL_SING, tol_umb=TOL_UMB) -> ShapeOperator2:
    _require_3d(p)
    jet = p.jet_function()(float(u), float(v))
    return _shape_from_jet(jet, u, v, tol_sing, tol_umb)


def _principal_pairs(S, I):
    """Eigenpairs of the 2x2 shape operator, ascending, vectors I-orthonormal.

    Eigenvalues are H +- sqrt(H^2 - K) with 2H = tr S and K = det S; each
    eigenvector is read off the larger row of the rank-one S - lambda.
    """
    half = 0.5 * (S[0, 0] + S[1, 1])
    det = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
    root = math.sqrt(max(half * half - det, 0.0))
    lam = np.array([half - root, half + root])
    vecs = np.empty((2, 2))
    for k in (0, 1):
        A = S - lam[k] * np.eye(2)
        r = A[0] if abs(A[0, 0]) + abs(A[0, 1]) >= abs(A[1, 0]) + abs(A[1, 1]) else A[1]
        c = np.array([-r[1], r[0]])
        if not c.any():
            c = np.eye(2)[k]
        vecs[:, k] = c / math.sqrt(c @ I @ c)
    return lam, vecs


def _shape_from_jet(jet, u, v, tol_sing, tol_umb):
    f = _forms_from_jet(jet)
    if not f["area"] > tol_sing:
        raise SingularPoint(u, v)
    I = np.array([[f["E"], f["F"]], [f["F"], f["G"]]], dtype=float)
    II = np.array([[f["L"], f["M"]], [f["M"], f["N"]]], dtype=float)
    S = -np.linalg.solve(I, II)
    lam, vecs = _principal_pairs(S, I)
    umbilic = abs(lam[1] - lam[0]) <= tol_umb * max(1.0, abs(lam[0]) + abs(lam[1]))
    if umbilic:
        return ShapeOperator2(S, lam, None, None, True)
    dirs = (jet[1][:, None] * vecs[0] + jet[2][:, None] * vecs[1]).T
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return ShapeOperator2(S, lam, vecs, dirs, False)


def christoffel(p: SurfacePatch, u, v, tol_sing=TOL_SING) -> np.ndarray:
    """Gamma[k, i, j] = sum_l g^{kl} <phi_ij, phi_l> (second kind)."""
    return _christoffel_from_jet(p.jet_function()(float(u), float(v)), u, v, tol_sing)


def _christoffel_from_jet(jet, u, v, tol_sing):
    _, pu, pv, puu, puv, pvv = jet
    g = np.array([[pu @ pu, pu @ pv], [pu @ pv, pv @ pv]])
    det = g[0, 0] * g[1, 1] - g[0, 1] ** 2
    if not det > tol_sing**2:
        raise SingularPoint(u, v)
    ginv = np.array([[g[1, 1], -g[0, 1]], [-g[0, 1], g[0, 0]]]) / det
    second = {(0, 0): puu, (0, 1): puv, (1, 0): puv, (1, 1): pvv}
    lower = np.empty((2, 2, 2))  # lower[l, i, j] = <phi_ij, phi_l>
    for (i, j), vec in second.items():
        lower[0, i, j] = vec @ pu
        lower[1, i, j] = vec @ pv
    return np.einsum("kl,lij->kij", ginv, lower)


# ---------------------------------------------------------------------------
# traces

@dataclass
class SurfaceTrace:
    s: np.ndarray
    uv: np.ndarray
    points: np.ndarray
    tangents: np.ndarray  # ambient unit tangents
    normals: np.ndarray
    eigenvalues: np.ndarray | None = None
    truncated: bool = False
    max_speed_error: float = 0.0
    max_tangential_accel: float = 0.0


def _steps(length, step):
    if length <= 0:
        raise ValueError("length must be positive")
    step = 1e-3 * length if step is None else step
    n = max(1, int(math.ceil(length / step - 1e-9)))
    return n, length / n


def _uv_direction(p, u, v, direction):
    """Unit-speed (du, dv) for a direction given in (u, v) or ambient coordinates."""
    jet = p.jet_function()(float(u), float(v))
    pu, pv = jet[1], jet[2]
    direction = np.asarray(direction, dtype=float)
    if direction.size == 2:
        ab = direction
    else:
        A = np.stack([pu, pv], axis=1)
        ab, *_ = np.linalg.lstsq(A, direction, rcond=None)
        resid = np.linalg.norm(A @ ab - direction)
        if resid > 1e-8 * max(1.0, np.linalg.norm(direction)):
            raise ValueError("direction is not tangent to the surface")
    amb = ab[0] * pu + ab[1] * pv
    nrm = np.linalg.norm(amb)
    if nrm == 0:
        raise ValueError("zero direction")
    return ab / nrm


def geodesic(p: SurfacePatch, start, direction, length: float, step: float | None = None,
             tol_sing=TOL_SING) -> SurfaceTrace:
    """Unit-speed geodesic by fixed-step RK4 on the Christoffel equations.

    ``direction`` is either (du, dv) or an ambient tangent vector; it is
    rescaled to unit ambient speed.
    """
    _require_3d(p)
    nsteps, h = _steps(length, step)
    jet_fn = p.jet_function()
    u0, v0 = map(float, start)
    if not p.contains(u0, v0):
        raise DomainEscape(u0, v0)
    y = np.concatenate([[u0, v0], _uv_direction(p, u0, v0, direction)])

    def rhs(y):
        u, v = y[0], y[1]
        if not p.contains(u, v):
            raise DomainEscape(u, v)
        gam = _christoffel_from_jet(jet_fn(u, v), u, v, tol_sing)
        w = y[2:]
        acc = -np.einsum("kij,i,j->k", gam, w, w)
        return np.concatenate([w, acc])

    states = [y]
    for i in range(nsteps):
        try:
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * h * k1)
            k3 = rhs(y + 0.5 * h * k2)
            k4 = rhs(y + h * k3)
        except DomainEscape as err:
            err.trace = _assemble(p, np.arange(len(states)) * h, np.array(states))
            raise
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not p.contains(y[0], y[1]):
            raise DomainEscape(y[0], y[1], _assemble(p, np.arange(len(states)) * h, np.array(states)))
        states.append(y)
    states = np.array(states)
    trace = _assemble(p, np.arange(nsteps + 1) * h, states)
    speeds = np.linalg.norm(_ambient_velocity(p, states), axis=1)
    trace.max_speed_error = float(np.max(np.abs(speeds - 1.0)))
    if len(states) >= 3:
        P = trace.points
        acc = (P[2:] - 2 * P[1:-1] + P[:-2]) / h**2
        Zs = trace.normals[1:-1]
        tang = acc - np.sum(acc * Zs, axis=1, keepdims=True) * Zs
        trace.max_tangential_accel = float(np.max(np.linalg.norm(tang, axis=1)))
    return trace


def _ambient_velocity(p, states):
    vel = []
    jet_fn = p.jet_function()
    for u, v, du, dv in states:
        jet = jet_fn(u, v)
        vel.append(du * jet[1] + dv * jet[2])
    return np.array(vel)


def _assemble(p, s, states, eigenvalues=None, truncated=False):
    jet_fn = p.jet_function()
    pts, tans, nrms = [], [], []
    for row in states:
        jet = jet_fn(row[0], row[1])
        pts.append(jet[0])
        t = row[2] * jet[1] + row[3] * jet[2]
        tans.append(t / np.linalg.norm(t))
        cr = _cross3(jet[1], jet[2])
        nrms.append(cr / np.linalg.norm(cr))
    return SurfaceTrace(
        s=np.asarray(s), uv=states[:, :2].copy(), points=np.array(pts), tangents=np.array(tans),
        normals=np.array(nrms), eigenvalues=eigenvalues, truncated=truncated,
    )


def _select_branch(which, lam):
    if which in ("max", 1):
        return 1
    if which in ("min", 0):
        return 0
    raise ValueError(f"unknown eigen-branch selector {which!r}")


def line_of_curvature(p: SurfacePatch, start, which="max", length: float = 1.0, step: float | None = None,
                      hint=None, tol_sing=TOL_SING, tol_umb=TOL_UMB) -> SurfaceTrace:
    """Integrate a principal direction field with fixed-step RK4.

    ``which`` picks the branch at the start ("min"/"max" eigenvalue, or 0/1);
    afterwards the branch is followed by continuity. The initial sign makes
    the dominant (u, v) component positive unless a (du, dv) ``hint`` is given.
    """
    _require_3d(p)
    nsteps, h = _steps(length, step)
    jet_fn = p.jet_function()
    u0, v0 = map(float, start)
    if not p.contains(u0, v0):
        raise DomainEscape(u0, v0)

    first = _shape_from_jet(jet_fn(u0, v0), u0, v0, tol_sing, tol_umb)
    if first.umbilic:
        raise UmbilicPoint(u0, v0, trace=None)
    b = _select_branch(which, first.eigenvalues)
    c0 = first.coefficients[:, b]
    ref = np.asarray(hint, dtype=float) if hint is not None else (
        np.eye(2)[int(np.argmax(np.abs(c0)))]
    )
    if c0 @ ref < 0:
        c0 = -c0

    def field(u, v, prev):
        if not p.contains(u, v):
            raise DomainEscape(u, v)
        jet = jet_fn(u, v)
        so = _shape_from_jet(jet, u, v, tol_sing, tol_umb)
        if so.umbilic:
            raise UmbilicPoint(u, v)
        g = np.array([[jet[1] @ jet[1], jet[1] @ jet[2]], [jet[1] @ jet[2], jet[2] @ jet[2]]])
        align = [abs(so.coefficients[:, k] @ g @ prev) for k in (0, 1)]
        k = int(np.argmax(align))
        c = so.coefficients[:, k]
        if c @ g @ prev < 0:
            c = -c
        return c, so.eigenvalues[k]

    uv = np.array([u0, v0])
    prev = c0
    states = [np.concatenate([uv, c0])]
    lams = [first.eigenvalues[b]]
    for i in range(nsteps):
        try:
            k1, _ = field(*uv, prev)
            k2, _ = field(*(uv + 0.5 * h * k1), k1)
            k3, _ = field(*(uv + 0.5 * h * k2), k2)
            k4, _ = field(*(uv + h * k3), k3)
            uv = uv + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            c, lam = field(*uv, k4)
        except (UmbilicPoint, DomainEscape) as err:
            err.trace = _assemble(p, np.arange(len(states)) * h, np.array(states),
                                  np.array(lams), truncated=True)
            raise
        prev = c
        states.append(np.concatenate([uv, c]))
        lams.append(lam)
    return _assemble(p, np.arange(nsteps + 1) * h, np.array(states), np.array(lams))


# ---------------------------------------------------------------------------
# hypersurfaces (n - 1 parameters in R^n)

@dataclass(frozen=True, eq=False)
class HyperPatch:
    """Parametric hypersurface with n - 1 parameters in R^n."""

    components: tuple
    params: tuple
    domain: tuple
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(ex.as_expr(c) for c in self.components))
        if len(self.params) != len(self.components) - 1:
            raise ValueError("a hypersurface in R^n needs n - 1 parameters")

    @property
    def dim(self):
        return len(self.components)

    def jet_function(self, vectorized=False):
        key = ("jet", vectorized)
        if key not in self._cache:
            exprs = list(self.components)
            for q in self.params:
                exprs += [ex.differentiate(c, q) for c in self.components]
            raw = ex.compile_exprs(exprs, self.params, vectorized=vectorized)
            n = self.dim
            k = len(self.params)

            def jet(*args):
                out = np.asarray(raw(*args), dtype=float)
                return out.reshape((k + 1, n) + out.shape[1:])

            self._cache[key] = jet
        return self._cache[key]

    def normal(self, *args, tol_sing=TOL_SING):
        jet = self.jet_function()(*map(float, args))
        w = generalized_cross(jet[1:])
        nrm = np.linalg.norm(w)
        if nrm <= tol_sing:
            raise SingularPoint(*args[:2])
        return w / nrm


def hypersurface_helix_test(hp: HyperPatch, d, samples=8, tol=TOL_CONST, tol_sing=TOL_SING) -> ConstancyReport:
    """Constancy of <xi, d> with xi the generalized-cross normal, on a tensor grid."""
    d = np.asarray(d, dtype=float)
    axes = [np.linspace(lo, hi, samples) for lo, hi in hp.domain]
    mesh = np.meshgrid(*axes, indexing="ij")
    vals, excluded = [], 0
    for pt in zip(*(m.ravel() for m in mesh)):
        try:
            vals.append(float(hp.normal(*pt, tol_sing=tol_sing) @ d))
        except SingularPoint:
            excluded += 1
    if not vals:
        raise EmptyGrid("every grid point is singular")
    return ConstancyReport.from_values(vals, tol, excluded=excluded)
