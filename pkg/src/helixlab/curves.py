"""Frenet apparatus for regular curves in n-dimensional Euclidean space."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from . import expr as ex
from .errors import FrameDegenerate, NonRegularCurve

TOL_REG = 1e-9
TOL_RANK = 1e-10
TOL_CONST = 1e-6


@dataclass(frozen=True, eq=False)
class CurveN:
    """Curve t -> (x_1(t), ..., x_n(t)) given by expressions in one parameter."""

    components: tuple
    param: str = "t"
    domain: tuple = (0.0, 1.0)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(ex.as_expr(c) for c in self.components))
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))
        if len(self.components) < 2:
            raise ValueError("a curve needs at least two components")
        for c in self.components:
            extra = ex.free_params(c) - {self.param}
            if extra:
                raise ex.UnknownParameter(sorted(extra)[0])

    @classmethod
    def from_strings(cls, components: Sequence[str], param="t", domain=(0.0, 1.0)):
        return cls(tuple(ex.parse(c, [param]) for c in components), param, domain)

    @property
    def dim(self) -> int:
        return len(self.components)

    def derivative_exprs(self, order: int) -> tuple:
        """Component expressions of the ``order``-th derivative (0 = position)."""
        ders = self._cache.setdefault("ders", [self.components])
        while len(ders) <= order:
            ders.append(tuple(ex.differentiate(c, self.param) for c in ders[-1]))
        return ders[order]

    def jet_function(self, order: int, vectorized=False):
        """Compiled function t -> array (order+1, n) of alpha, alpha', ..."""
        key = ("jet", order, vectorized)
        if key not in self._cache:
            exprs = [c for k in range(order + 1) for c in self.derivative_exprs(k)]
            raw = ex.compile_exprs(exprs, [self.param], vectorized=vectorized)
            n = self.dim

            def jet(t):
                out = np.asarray(raw(t), dtype=float)
                return out.reshape((order + 1, n) + out.shape[1:])

            self._cache[key] = jet
        return self._cache[key]

    def point(self, t):
        return self.jet_function(0)(t)[0]

    def points(self, ts):
        """Positions at an array of parameters, shape (len(ts), n)."""
        return self.jet_function(0, vectorized=True)(np.asarray(ts, dtype=float))[0].T

    def grid(self, samples: int) -> np.ndarray:
        return np.linspace(self.domain[0], self.domain[1], samples)


@dataclass
class FrenetData:
    t: float
    order: int
    frame: np.ndarray  # rows V_1..V_order
    curvatures: np.ndarray  # k_1..k_{order-1}
    speed: float

    def V(self, i: int) -> np.ndarray:
        """The i-th frame vector, 1-based as in V_1 = unit tangent."""
        return self.frame[i - 1]

    def k(self, i: int) -> float:
        return float(self.curvatures[i - 1])


@dataclass
class ConstancyReport:
    """Evidence that a sampled scalar field is constant."""

    values: np.ndarray
    mean: float
    max_deviation: float
    tol: float
    constant: bool
    excluded: int = 0
    perpendicular: bool = False

    @property
    def count(self) -> int:
        return int(self.values.size)

    @classmethod
    def from_values(cls, values, tol, excluded=0):
        values = np.asarray(values, dtype=float).ravel()
        mean = float(values.mean())
        dev = float(np.max(np.abs(values - mean)))
        return cls(
            values=values,
            mean=mean,
            max_deviation=dev,
            tol=tol,
            constant=dev <= tol,
            excluded=excluded,
            # an angle of pi/2 with the axis; flagged, not judged
            perpendicular=abs(mean) <= tol,
        )


def generalized_cross(vs: Sequence) -> np.ndarray:
    """Vector w in R^n with <w, u> = det(u, v_1, ..., v_{n-1}) for every u."""
    A = np.asarray(vs, dtype=float)
    if A.ndim != 2 or A.shape[1] != A.shape[0] + 1:
        raise ValueError("need n-1 vectors in R^n")
    n = A.shape[1]
    if n == 2:
        return np.array([A[0, 1], -A[0, 0]])
    w = np.empty(n)
    for j in range(n):
        minor = np.delete(A, j, axis=1)
        w[j] = (-1) ** j * np.linalg.det(minor)
    return w


def derivatives(c: CurveN, t: float, order: int) -> list:
    """alpha'(t), ..., alpha^(order)(t) from the symbolic derivatives."""
    if order < 1:
        raise ValueError("order must be at least 1")
    jet = c.jet_function(order)(float(t))
    return [jet[k] for k in range(1, order + 1)]


def frame_from_derivatives(ders, t=0.0, tol_reg=TOL_REG, tol_rank=TOL_RANK) -> FrenetData:
    """Frenet frame from the first n derivative vectors at one point.

    V_1..V_{n-1} come from Gram-Schmidt on alpha', ..., alpha^(n-1); V_n is
    the generalized cross product oriented so det(V_1, ..., V_n) = +1.
    With e_i the Gram-Schmidt residuals, k_i = |e_{i+1}| / (|e_1| |e_i|);
    the last curvature carries the sign of <alpha^(n), V_n>.
    """
    ders = [np.asarray(d, dtype=float) for d in ders]
    n = ders[0].size
    speed = float(np.linalg.norm(ders[0]))
    if speed <= tol_reg:
        raise NonRegularCurve(t, speed)
    scale = max(float(np.linalg.norm(d)) for d in ders[: n - 1])
    frame = []
    norms = []
    for i in range(n - 1):
        w = ders[i].copy()
        for _ in range(2):  # re-orthogonalize once for stability
            for v in frame:
                w -= np.dot(w, v) * v
        r = float(np.linalg.norm(w))
        if r < tol_rank * scale:
            ks = [norms[j + 1] / (norms[0] * norms[j]) for j in range(len(norms) - 1)]
            raise FrameDegenerate(i + 1, t, np.array(frame), np.array(ks))
        frame.append(w / r)
        norms.append(r)
    last = (-1) ** (n - 1) * generalized_cross(frame)
    last /= np.linalg.norm(last)
    frame.append(last)
    ks = [norms[j + 1] / (norms[0] * norms[j]) for j in range(n - 2)]
    ks.append(float(np.dot(ders[n - 1], last)) / (norms[0] * norms[n - 2]))
    return FrenetData(t=t, order=n, frame=np.array(frame), curvatures=np.array(ks), speed=speed)


def frenet(c: CurveN, t: float, tol_reg=TOL_REG, tol_rank=TOL_RANK) -> FrenetData:
    return frame_from_derivatives(derivatives(c, t, c.dim), t, tol_reg, tol_rank)


def frame_vectors(c: CurveN, t: float, upto: int) -> np.ndarray:
    """V_1..V_upto at t, accepting a partial frame when it reaches that far."""
    try:
        return frenet(c, t).frame[:upto]
    except FrameDegenerate as err:
        if len(err.partial) >= upto:
            return err.partial[:upto]
        raise


def slant_helix_test(c: CurveN, index: int, X, samples: int = 100, tol: float = TOL_CONST) -> ConstancyReport:
    """Constancy of <V_index, X> over an evenly spaced parameter grid."""
    if not 1 <= index <= c.dim:
        raise ValueError(f"frame index must be in 1..{c.dim}")
    X = np.asarray(X, dtype=float)
    if abs(np.linalg.norm(X) - 1.0) > 1e-9:
        raise ValueError("direction X must be a unit vector")
    vals = [float(np.dot(frame_vectors(c, t, index)[index - 1], X)) for t in c.grid(samples)]
    return ConstancyReport.from_values(vals, tol)


class ArcLengthCurve:
    """Numeric arc-length reparametrization s -> alpha(t(s)), s in [0, L]."""

    def __init__(self, c: CurveN, quad_tol=1e-10, nodes=64):
        self.curve = c
        self._jet = c.jet_function(2)
        self._speed_fn = ex.compile_exprs(
            [ex.sqrt(sum((d * d for d in c.derivative_exprs(1)), ex.ZERO))], [c.param]
        )
        a, b = c.domain
        self.t_nodes = np.linspace(a, b, nodes + 1)
        for t in self.t_nodes:
            self._check_regular(t)
        pieces = [
            quad(self.speed, lo, hi, epsabs=quad_tol / nodes, epsrel=1e-13, limit=200)[0]
            for lo, hi in zip(self.t_nodes[:-1], self.t_nodes[1:])
        ]
        self.s_nodes = np.concatenate([[0.0], np.cumsum(pieces)])
        self.length = float(self.s_nodes[-1])

    def speed(self, t):
        return self._speed_fn(t)[0]

    def _check_regular(self, t):
        sp = self.speed(t)
        if sp <= TOL_REG:
            raise NonRegularCurve(float(t), sp)

    def parameter(self, s: float, tol=1e-12) -> float:
        """t with arc length s from the start: safeguarded Newton, bisection fallback."""
        if s <= 0.0:
            return self.curve.domain[0]
        if s >= self.length:
            return self.curve.domain[1]
        k = int(np.searchsorted(self.s_nodes, s, side="right")) - 1
        k = min(max(k, 0), len(self.t_nodes) - 2)
        base = float(self.t_nodes[k])
        lo, hi = base, float(self.t_nodes[k + 1])
        s0 = float(self.s_nodes[k])
        t = lo + (hi - lo) * (s - s0) / max(self.s_nodes[k + 1] - s0, 1e-300)
        for _ in range(100):
            f = s0 + quad(self.speed, base, t, epsabs=1e-14, epsrel=1e-14, limit=200)[0] - s
            if f > 0:
                hi = t
            else:
                lo = t
            t_new = t - f / self.speed(t)
            if not lo < t_new < hi:
                t_new = 0.5 * (lo + hi)
            if abs(t_new - t) <= tol or hi - lo <= tol:
                return t_new
            t = t_new
        return t

    def __call__(self, s: float) -> np.ndarray:
        return self._jet(self.parameter(s))[0]

    def derivatives(self, s: float):
        """(gamma, gamma', gamma'') with respect to arc length."""
        jet = self._jet(self.parameter(s))
        d1, d2 = jet[1], jet[2]
        sp2 = float(np.dot(d1, d1))
        g1 = d1 / math.sqrt(sp2)
        g2 = d2 / sp2 - (np.dot(d1, d2) / sp2**2) * d1
        return jet[0], g1, g2


def arc_length_reparametrize(c: CurveN, quad_tol=1e-10) -> ArcLengthCurve:
    return ArcLengthCurve(c, quad_tol=quad_tol)
