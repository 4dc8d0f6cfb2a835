"""Constant-angle surface families built from curves and hypersurfaces.

All constructions use the axis d = e_n (the last coordinate direction of
the ambient space) and a constant angle theta in [0, pi/2]:

* ``extrude_helix``: x + s (sin(theta) N(x) + cos(theta) d) over a generator
  hypersurface with unit normal N;
* ``ruled_from_curve``: the same map restricted to a curve beta on the
  generator, giving a ruled surface with rulings sin(theta) N(beta) + cos(theta) d;
* ``plane_curve_surface``: alpha(u) + v (sin(theta) V_2(u) + cos(theta) B)
  for a plane curve alpha in E^3 with principal normal V_2 and constant
  binormal B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr as ex
from .curves import CurveN, frenet
from .errors import InvalidNormal, NotPlanar, SingularPoint
from .surfaces import HyperPatch, SurfacePatch

TOL_SING = 1e-9


def check_theta(theta: float) -> float:
    theta = float(theta)
    if not -1e-12 <= theta <= math.pi / 2 + 1e-12:
        raise ValueError(f"theta must lie in [0, pi/2], got {theta!r}")
    return theta


def _dot(a, b):
    return sum((x * y for x, y in zip(a, b)), ex.ZERO)


def unit_tangent_exprs(c: CurveN) -> tuple:
    d1 = c.derivative_exprs(1)
    speed = ex.sqrt(_dot(d1, d1))
    return tuple(x / speed for x in d1)


def principal_normal_exprs(c: CurveN) -> tuple:
    """V_2 as expressions: normalized component of alpha'' orthogonal to alpha'."""
    d1, d2 = c.derivative_exprs(1), c.derivative_exprs(2)
    coef = _dot(d2, d1) / _dot(d1, d1)
    w = tuple(b - coef * a for a, b in zip(d1, d2))
    nrm = ex.sqrt(_dot(w, w))
    return tuple(x / nrm for x in w)


# ---------------------------------------------------------------------------
# extrusion over a hypersurface

@dataclass(frozen=True)
class ExtrusionSpec:
    """Generator hypersurface (a plane curve or a surface in R^3) and angle."""

    generator: object  # CurveN in R^2 or SurfacePatch in R^3
    theta: float
    s_domain: tuple = (0.0, 1.0)
    s_param: str = "s"


def curve_normal_exprs(c: CurveN) -> tuple:
    """Unit normal of a plane curve: the tangent rotated by -90 degrees."""
    if c.dim != 2:
        raise ValueError("curve normals are defined here for plane curves in R^2")
    t0, t1 = unit_tangent_exprs(c)
    return (t1, -t0)


def patch_normal_exprs(p: SurfacePatch) -> tuple:
    if p.dim != 3:
        raise ValueError("surface normals are defined here for surfaces in R^3")
    parts = p.partial_exprs()
    a, b = parts["u"], parts["v"]
    cr = (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])
    nrm = ex.sqrt(_dot(cr, cr))
    return tuple(x / nrm for x in cr)


def _extrude(point_exprs, normal_exprs, theta, s):
    st, ct = math.sin(theta), math.cos(theta)
    comps = [x + s * (st * nx) for x, nx in zip(point_exprs, normal_exprs)]
    comps.append(ct * s)
    return tuple(comps)


def extrude_helix(spec: ExtrusionSpec):
    """Extrusion along sin(theta) N + cos(theta) d.

    A plane-curve generator yields a SurfacePatch in R^3; a surface generator
    yields a HyperPatch in R^4.
    """
    theta = check_theta(spec.theta)
    g = spec.generator
    s = ex.Param(spec.s_param)
    if isinstance(g, CurveN):
        if spec.s_param == g.param:
            raise ValueError("extrusion parameter clashes with the curve parameter")
        comps = _extrude(g.components, curve_normal_exprs(g), theta, s)
        return SurfacePatch(comps, (g.param, spec.s_param), (g.domain, spec.s_domain))
    if isinstance(g, SurfacePatch):
        if spec.s_param in g.params:
            raise ValueError("extrusion parameter clashes with the surface parameters")
        comps = _extrude(g.components, patch_normal_exprs(g), theta, s)
        return HyperPatch(comps, g.params + (spec.s_param,), g.domain + (spec.s_domain,))
    raise TypeError("generator must be a CurveN in R^2 or a SurfacePatch in R^3")


# ---------------------------------------------------------------------------
# ruled surface over a curve on the generator

@dataclass(frozen=True)
class RuledSpec:
    """Directrix beta in R^{n-1} with the generator's unit normal along it."""

    directrix: CurveN
    normal: tuple  # expressions N(beta(t)) in the directrix parameter
    theta: float
    s_domain: tuple = (-1.0, 1.0)
    s_param: str = "s"

    @property
    def dim(self) -> int:
        return self.directrix.dim + 1


def sphere_normal_exprs(beta: CurveN, radius: float = 1.0) -> tuple:
    """Outward unit normal of the sphere of given radius along beta: beta / r."""
    return tuple(c / radius if radius != 1.0 else c for c in beta.components)


def ellipsoid_normal_exprs(beta: CurveN, axes: Sequence[float]) -> tuple:
    """Unit normal of sum (x_i / a_i)^2 = 1 along beta (normalized gradient)."""
    grad = tuple(c / (a * a) for c, a in zip(beta.components, axes))
    nrm = ex.sqrt(_dot(grad, grad))
    return tuple(g / nrm for g in grad)


def sphere_ruled_spec(beta: CurveN, theta: float, s_domain=(-1.0, 1.0), literal_tangent=False) -> RuledSpec:
    """Ruled surface over a curve on the unit sphere.

    The ruling uses the sphere normal beta(t). With ``literal_tangent`` the
    ruling uses beta'(t) in its place, which is not a normal of the sphere;
    that variant exists only for comparison and skips normal validation
    in ``ruled_from_curve(..., validate=False)``.
    """
    normal = beta.derivative_exprs(1) if literal_tangent else sphere_normal_exprs(beta)
    return RuledSpec(beta, tuple(normal), theta, s_domain)


def validate_normal(spec: RuledSpec, samples: int = 64, tol: float = 1e-8):
    beta = spec.directrix
    N = CurveN(spec.normal, beta.param, beta.domain)
    ts = beta.grid(samples)
    Nv = N.jet_function(0, vectorized=True)(ts)[0]
    d1 = beta.jet_function(1, vectorized=True)(ts)[1]
    unit_err = np.abs(np.sqrt(np.sum(Nv * Nv, axis=0)) - 1.0)
    speed = np.sqrt(np.sum(d1 * d1, axis=0))
    orth_err = np.abs(np.sum(Nv * d1, axis=0)) / speed
    if unit_err.max() > tol:
        k = int(np.argmax(unit_err))
        raise InvalidNormal(f"normal is not unit at t={ts[k]!r} (error {unit_err[k]:.3e})")
    if orth_err.max() > tol:
        k = int(np.argmax(orth_err))
        raise InvalidNormal(f"normal is not orthogonal to beta' at t={ts[k]!r} (error {orth_err[k]:.3e})")


def ruled_from_curve(spec: RuledSpec, validate: bool = True, samples: int = 64) -> SurfacePatch:
    theta = check_theta(spec.theta)
    beta = spec.directrix
    if len(spec.normal) != beta.dim:
        raise ValueError("normal and directrix dimensions differ")
    if spec.s_param == beta.param:
        raise ValueError("ruling parameter clashes with the directrix parameter")
    if validate:
        validate_normal(spec, samples)
    comps = _extrude(beta.components, tuple(ex.as_expr(c) for c in spec.normal),
                     theta, ex.Param(spec.s_param))
    return SurfacePatch(comps, (beta.param, spec.s_param), (beta.domain, spec.s_domain))


def ruling_exprs(spec: RuledSpec) -> tuple:
    """X(t) = sin(theta) N(beta(t)) + cos(theta) d, embedded in R^n."""
    theta = check_theta(spec.theta)
    st = math.sin(theta)
    return tuple(st * ex.as_expr(c) for c in spec.normal) + (ex.Num(math.cos(theta)),)


# ---------------------------------------------------------------------------
# surfaces generated by a plane curve in E^3

@dataclass
class PlaneCurveSurface:
    patch: SurfacePatch
    curve: CurveN
    theta: float
    principal_normal: tuple  # V_2 expressions
    binormal: np.ndarray  # constant B
    ruling: tuple  # sin(theta) V_2 + cos(theta) B expressions

    def curvature(self, u: float) -> float:
        return frenet(self.curve, u).k(1)

    def singular_factor(self, u, v):
        """1 - k_1(u) v sin(theta); the patch is singular where it vanishes.

        Accepts scalars or equally shaped arrays.
        """
        u = np.asarray(u, dtype=float)
        k1 = np.vectorize(self.curvature, otypes=[float])(u)
        out = 1.0 - k1 * np.asarray(v, dtype=float) * math.sin(self.theta)
        return float(out) if out.ndim == 0 else out

    def regular_region(self, tol_sing: float = TOL_SING):
        """Predicate for the part of the domain where 1 - k_1 v sin(theta) > tol_sing."""
        cache = {}

        def region(U, V):
            us = np.unique(U)
            for u in us:
                if u not in cache:
                    cache[u] = self.curvature(u)
            k1 = np.vectorize(cache.__getitem__, otypes=[float])(U)
            return 1.0 - k1 * V * math.sin(self.theta) > tol_sing

        return region


def plane_curve_surface(alpha: CurveN, theta: float, v_domain=(0.0, math.pi), samples: int = 64,
                        tol_planar: float = 1e-8, v_param: str = "v") -> PlaneCurveSurface:
    """phi(u, v) = alpha(u) + v (sin(theta) V_2(u) + cos(theta) B)."""
    theta = check_theta(theta)
    if alpha.dim != 3:
        raise ValueError("the plane-curve surface is built in E^3")
    if v_param == alpha.param:
        raise ValueError("ruling parameter clashes with the curve parameter")
    frames = [frenet(alpha, t) for t in alpha.grid(samples)]
    B = frames[0].V(3)
    drift = max(float(np.linalg.norm(f.V(3) - B)) for f in frames)
    if drift > tol_planar:
        raise NotPlanar(f"binormal drifts by {drift:.3e} along the curve")

    V2 = principal_normal_exprs(alpha)
    st, ct = math.sin(theta), math.cos(theta)
    ruling = tuple(st * n + ct * float(b) for n, b in zip(V2, B))
    v = ex.Param(v_param)
    comps = tuple(a + v * x for a, x in zip(alpha.components, ruling))
    patch = SurfacePatch(comps, (alpha.param, v_param), (alpha.domain, v_domain))
    return PlaneCurveSurface(patch, alpha, theta, V2, B, ruling)


def closed_form_H(k1: float, theta: float, v: float, tol_sing: float = TOL_SING) -> float:
    """Mean curvature k1 cos(theta) / (2 (1 - k1 v sin(theta)))."""
    denom = 1.0 - k1 * v * math.sin(theta)
    if denom <= tol_sing:
        raise SingularPoint(None, v, "mean-curvature formula is singular")
    return 0.5 * k1 * math.cos(theta) / denom
