"""Executable checks of the constant-angle surface results.

Each ``verify_*`` function returns a :class:`VerificationReport` whose
verdict is one of

* ``pass`` / ``fail``: every limited measurement is (not) within its limit;
* ``premise-not-satisfied``: the hypothesis of the statement does not hold
  for the given input, so nothing is claimed;
* ``vacuous``: the statement holds trivially (e.g. a straight geodesic has
  no principal normal);
* ``branch-degenerate``: the selected principal branch has a vanishing
  eigenvalue, where the orthogonality conclusion does not follow.

Only ``fail`` counts as a failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .constructions import (
    ExtrusionSpec,
    RuledSpec,
    check_theta,
    closed_form_H,
    extrude_helix,
    plane_curve_surface,
)
from .curves import ConstancyReport, CurveN, arc_length_reparametrize, frenet
from .surfaces import (
    SurfacePatch,
    _cross3,
    _dot,
    forms_grid,
    fundamental_forms,
    geodesic,
    helix_surface_test,
    line_of_curvature,
    ruled_developability_det,
)

PASS = "pass"
FAIL = "fail"
PREMISE = "premise-not-satisfied"
VACUOUS = "vacuous"
BRANCH = "branch-degenerate"


@dataclass
class Measurement:
    name: str
    value: float
    limit: float | None = None
    sense: str = "max"  # "max": value <= limit, "min": value >= limit

    @property
    def ok(self) -> bool:
        if self.limit is None:
            return True
        if self.sense == "max":
            return self.value <= self.limit
        return self.value >= self.limit


@dataclass
class VerificationReport:
    check: str
    scenario: str
    measurements: list = field(default_factory=list)
    excluded: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    subchecks: list = field(default_factory=list)
    verdict: str | None = None
    data: dict = field(default_factory=dict, repr=False)  # raw artifacts, not serialized

    def measure(self, name, value, limit=None, sense="max"):
        self.measurements.append(Measurement(name, float(value), limit, sense))
        return self

    def value(self, name) -> float:
        for m in self.measurements:
            if m.name == name:
                return m.value
        raise KeyError(name)

    def finish(self, verdict=None):
        """Fix the verdict: explicit, or derived from limits and subchecks."""
        if verdict is None:
            ok = all(m.ok for m in self.measurements) and all(
                s.verdict != FAIL for s in self.subchecks
            )
            verdict = PASS if ok else FAIL
        self.verdict = verdict
        return self

    @property
    def failed(self) -> bool:
        return self.verdict == FAIL

    def to_text(self, indent="") -> str:
        out = [f"{indent}check: {self.check}"]
        pad = indent + "  "
        out.append(f"{pad}scenario: {self.scenario}")
        out.append(f"{pad}verdict: {self.verdict}")
        if self.measurements:
            out.append(f"{pad}measured:")
            for m in self.measurements:
                line = f"{pad}  {m.name}: {m.value:.17g}"
                if m.limit is not None:
                    op = "<=" if m.sense == "max" else ">="
                    line += f"  # {op} {m.limit:.3g} {'ok' if m.ok else 'VIOLATED'}"
                out.append(line)
        if self.excluded:
            out.append(f"{pad}excluded:")
            for k in sorted(self.excluded):
                out.append(f"{pad}  {k}: {self.excluded[k]}")
        for note in self.notes:
            out.append(f"{pad}note: {note}")
        for sub in self.subchecks:
            out.append(sub.to_text(pad))
        return "\n".join(out)


def _unit(d):
    d = np.asarray(d, dtype=float)
    n = np.linalg.norm(d)
    if abs(n - 1.0) > 1e-9:
        raise ValueError("direction d must be a unit vector")
    return d


def _five_point(P, h):
    """First and second derivatives at interior samples P[2:-2]."""
    d1 = (-P[4:] + 8 * P[3:-1] - 8 * P[1:-3] + P[:-4]) / (12 * h)
    d2 = (-P[4:] + 16 * P[3:-1] - 30 * P[2:-2] + 16 * P[1:-3] - P[:-4]) / (12 * h * h)
    return d1, d2


# ---------------------------------------------------------------------------

def verify_helix_extrusion(generator: CurveN, thetas: Sequence[float], grid=(40, 40),
                           tol: float = 1e-9, s_domain=(0.0, 1.0)) -> VerificationReport:
    """Extrusion over a plane curve is a helix surface about d = e_3."""
    rep = VerificationReport("extrusion-helix", f"extrusion of a plane curve, grid {grid[0]}x{grid[1]}")
    d = np.array([0.0, 0.0, 1.0])
    for theta in thetas:
        patch = extrude_helix(ExtrusionSpec(generator, theta, s_domain))
        r = helix_surface_test(patch, d, grid, tol=tol)
        sub = VerificationReport("extrusion-helix", f"theta = {theta:.17g}")
        sub.measure("normal_axis_mean", r.mean)
        sub.measure("normal_axis_deviation", r.max_deviation, tol)
        sub.measure("abs_mean_minus_sin_theta", abs(abs(r.mean) - math.sin(theta)), tol)
        if r.excluded:
            sub.excluded["singular"] = r.excluded
        rep.subchecks.append(sub.finish())
    return rep.finish()


def verify_geodesic_slant(surface: SurfacePatch, d, start, direction, length: float,
                          step: float = 1e-3, tol: float = 1e-4, tol_k: float = 1e-6,
                          helix_grid=(30, 30), helix_tol: float = 1e-6, region=None) -> VerificationReport:
    """A geodesic of a helix surface keeps <V_2, d> constant.

    V_2 along the integrated trace comes from five-point differences of the
    sampled positions. Samples with curvature below ``tol_k`` are excluded;
    if every sample is excluded the geodesic is straight and the check is
    vacuous.
    """
    d = _unit(d)
    rep = VerificationReport(
        "geodesic-slant", f"geodesic from {tuple(map(float, start))} of length {length:g}, step {step:g}"
    )
    premise = helix_surface_test(surface, d, helix_grid, tol=helix_tol, region=region)
    rep.measure("helix_premise_deviation", premise.max_deviation)
    if not premise.constant:
        rep.notes.append("surface is not a helix surface about d on the sampled grid")
        return rep.finish(PREMISE)

    tr = geodesic(surface, start, direction, length, step)
    rep.data["trace"] = tr
    h = tr.s[1] - tr.s[0]
    rep.measure("speed_error", tr.max_speed_error, 1e-6)
    rep.measure("tangential_acceleration", tr.max_tangential_accel, 1e-5)
    if len(tr.s) < 5:
        rep.notes.append("trace too short for five-point differences")
        return rep.finish(VACUOUS)
    d1, d2 = _five_point(tr.points, h)
    sp = np.linalg.norm(d1, axis=1)
    T = d1 / sp[:, None]
    nrm_part = d2 - np.sum(d2 * T, axis=1, keepdims=True) * T
    k1 = np.linalg.norm(nrm_part, axis=1) / sp**2
    keep = k1 > tol_k
    rep.measure("min_curvature", float(k1.min()))
    rep.measure("max_curvature", float(k1.max()))
    if not keep.any():
        rep.notes.append("geodesic is a straight line (k1 = 0); V_2 undefined")
        return rep.finish(VACUOUS)
    V2 = nrm_part[keep] / np.linalg.norm(nrm_part[keep], axis=1, keepdims=True)
    r = ConstancyReport.from_values(V2 @ d, tol)
    rep.measure("principal_normal_axis_mean", r.mean)
    rep.measure("principal_normal_axis_deviation", r.max_deviation, tol)
    if (~keep).any():
        rep.excluded["straight_samples"] = int((~keep).sum())
    return rep.finish()


def project_to_surface(surface: SurfacePatch, point, seeds=(30, 30), starts: int = 6):
    """Closest parameter pair: the nearest grid seeds refined by least squares."""
    jet, us, vs = surface.grid_jet(*seeds)
    P = jet[0]
    dist = np.sum((P - np.asarray(point).reshape(-1, 1, 1)) ** 2, axis=0).ravel()
    (u0, u1), (v0, v1) = surface.domain
    jf = surface.jet_function()

    def fun(x):
        return jf(x[0], x[1])[0] - point

    def jac(x):
        return jf(x[0], x[1])[1:3].T

    opts = dict(jac=jac, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    best = None
    for k in np.argsort(dist, kind="stable")[:starts]:
        i, j = np.unravel_index(int(k), (len(us), len(vs)))
        x0 = [us[i], vs[j]]
        # unbounded first: minima on the domain boundary converge slowly under bounds
        res = least_squares(fun, x0, method="lm", **opts)
        if not surface.contains(*res.x):
            res = least_squares(fun, x0, bounds=([u0, v0], [u1, v1]), **opts)
        r = float(np.linalg.norm(res.fun))
        if best is None or r < best[1]:
            best = (res.x, r)
        if r <= 1e-14:
            break
    return best


def verify_vn_normal_slant(surface: SurfacePatch, d, curve: CurveN, samples: int = 50,
                           tol_premise: float = 1e-4, tol: float = 1e-4, tol_distance: float = 1e-8,
                           helix_grid=(30, 30), region=None) -> VerificationReport:
    """If the last Frenet vector of a surface curve is +-the surface normal,
    it keeps a constant angle with d."""
    d = _unit(d)
    n = curve.dim
    rep = VerificationReport("normal-frame-slant", f"curve with {samples} samples, frame vector V_{n}")
    helix = helix_surface_test(surface, d, helix_grid, region=region)
    rep.measure("helix_premise_deviation", helix.max_deviation)
    if not helix.constant:
        rep.notes.append("surface is not a helix surface about d on the sampled grid")
        return rep.finish(PREMISE)

    dists, gaps, vals = [], [], []
    for t in curve.grid(samples):
        pt = curve.point(t)
        (u, v), dist = project_to_surface(surface, pt)
        xi = fundamental_forms(surface, u, v).normal
        Vn = frenet(curve, t).V(n)
        dists.append(dist)
        gaps.append(min(np.linalg.norm(Vn - xi), np.linalg.norm(Vn + xi)))
        vals.append(float(Vn @ d))
    rep.measure("max_distance_to_surface", max(dists))
    rep.measure("max_frame_normal_gap", max(gaps))
    if max(dists) > tol_distance:
        rep.notes.append("curve does not lie on the surface")
        return rep.finish(PREMISE)
    if max(gaps) > tol_premise:
        rep.notes.append(f"V_{n} is not +-the surface normal along the curve")
        return rep.finish(PREMISE)
    r = ConstancyReport.from_values(vals, tol)
    rep.measure("frame_axis_mean", r.mean)
    rep.measure("frame_axis_deviation", r.max_deviation, tol)
    return rep.finish()


def verify_line_of_curvature_orthogonality(surface: SurfacePatch, d, start, branch="max", length: float = 1.0,
                                           step: float | None = None, tol: float = 1e-5,
                                           tol_lambda: float = 1e-6, helix_grid=(30, 30), region=None,
                                           hint=None) -> VerificationReport:
    """A line of curvature of a helix surface is orthogonal to d.

    The conclusion needs a nonzero principal curvature along the trace; a
    branch with |lambda| <= tol_lambda is reported as branch-degenerate,
    together with the measured |<T, d>|.
    """
    d = _unit(d)
    rep = VerificationReport(
        "curvature-line-orthogonality", f"branch {branch!r} from {tuple(map(float, start))}, length {length:g}"
    )
    helix = helix_surface_test(surface, d, helix_grid, region=region)
    rep.measure("helix_premise_deviation", helix.max_deviation)
    if not helix.constant:
        rep.notes.append("surface is not a helix surface about d on the sampled grid")
        return rep.finish(PREMISE)
    tr = line_of_curvature(surface, start, branch, length, step, hint=hint)
    rep.data["trace"] = tr
    dots = np.abs(tr.tangents @ d)
    lam = np.abs(tr.eigenvalues)
    rep.measure("min_abs_principal_curvature", float(lam.min()))
    rep.measure("max_abs_tangent_axis", float(dots.max()))
    if lam.min() <= tol_lambda:
        rep.notes.append("principal curvature vanishes on this branch; orthogonality is not implied")
        return rep.finish(BRANCH)
    rep.measurements[-1].limit = tol
    return rep.finish()


def verify_developability_equivalence(spec: RuledSpec, samples: int = 64, s_samples: int = 9,
                                      tol_premise: float = 1e-8, tol_dev: float = 1e-8) -> VerificationReport:
    """Developable ruled surface over beta <=> beta is a line of curvature.

    Premise residual: |(N o beta)' - lambda beta'| / |beta'| with the
    least-squares lambda at each sample. Developability residual: in R^3
    |det(T, X, X')|; in higher dimension the component of Phi_t orthogonal
    to T over a grid of ruling parameters. Passes when both sides agree.
    """
    theta = check_theta(spec.theta)
    beta = spec.directrix
    n = spec.dim
    rep = VerificationReport("developability-equivalence", f"ruled surface in R^{n}, theta = {theta:.17g}")
    N = CurveN(tuple(spec.normal), beta.param, beta.domain)
    ts = beta.grid(samples)
    b1 = beta.jet_function(1, vectorized=True)(ts)[1]
    nj = N.jet_function(1, vectorized=True)(ts)
    n1 = nj[1]
    bb = np.sum(b1 * b1, axis=0)
    lam = np.sum(n1 * b1, axis=0) / bb
    premise_res = np.linalg.norm(n1 - lam * b1, axis=0) / np.sqrt(bb)
    premise = float(premise_res.max())

    if n == 3:
        pad = np.zeros((1, samples))
        T = np.vstack([b1 / np.sqrt(bb), pad])
        st, ct = math.sin(theta), math.cos(theta)
        X = np.vstack([st * nj[0], np.full((1, samples), ct)])
        Xp = np.vstack([st * n1, pad])
        dev = float(np.max(np.abs(_dot(T, _cross3(X, Xp)))))
        dev_name = "det_T_X_Xprime"
    else:
        s_lo, s_hi = spec.s_domain
        T = b1 / np.sqrt(bb)
        worst = 0.0
        for s in np.linspace(s_lo, s_hi, s_samples):
            phi_t = b1 + s * math.sin(theta) * n1
            perp = phi_t - np.sum(phi_t * T, axis=0) * T
            worst = max(worst, float(np.max(np.linalg.norm(perp, axis=0))))
        dev = worst
        dev_name = "tangent_collinearity_residual"

    premise_holds = premise <= tol_premise
    developable = dev <= tol_dev
    rep.measure("line_of_curvature_residual", premise)
    rep.measure(dev_name, dev)
    rep.notes.append(f"line of curvature: {premise_holds}; developable: {developable}")
    return rep.finish(PASS if premise_holds == developable else FAIL)


def verify_plane_curve_surface(alpha: CurveN, theta: float, grid=(60, 20), v_domain=(0.0, math.pi),
                               tol_angle: float = 1e-8, tol_K: float = 1e-8, tol_det: float = 1e-10,
                               tol_H: float = 1e-8, tol_minimal: float = 1e-10, det_samples: int = 100,
                               control_min_H: float = 1e-2, tol_sing: float = 1e-9) -> VerificationReport:
    """Four checks on alpha(u) + v (sin(theta) V_2 + cos(theta) B).

    Grid points with 1 - k_1 v sin(theta) <= tol_sing are excluded.
    """
    theta = check_theta(theta)
    rep = VerificationReport(
        "plane-curve-surface", f"theta = {theta:.17g}, grid {grid[0]}x{grid[1]}, v in {tuple(v_domain)}"
    )
    pcs = plane_curve_surface(alpha, theta, v_domain)
    f, us, vs, mask = forms_grid(pcs.patch, *grid, tol_sing=tol_sing)
    U, V = np.meshgrid(us, vs, indexing="ij")
    region = mask & pcs.regular_region(tol_sing)(U, V)
    rep.excluded["singular"] = int((~region).sum())
    if not region.any():
        rep.notes.append("no regular grid points")
        return rep.finish(FAIL)
    B = pcs.binormal
    st = math.sin(theta)

    zb = np.einsum("i,i...->...", B, f["Z"])[region]
    angle = VerificationReport("constant-angle", "|<Z, B>| equals sin(theta) on the regular grid")
    angle.measure("normal_binormal_mean", float(zb.mean()))
    angle.measure("abs_normal_binormal_deviation", float(np.max(np.abs(np.abs(zb) - st))), tol_angle)
    rep.subchecks.append(angle.finish())

    flat = VerificationReport("gauss-flat", "Gauss curvature vanishes on the regular grid")
    flat.measure("max_abs_K", float(np.max(np.abs(f["K"][region]))), tol_K)
    rep.subchecks.append(flat.finish())

    ts = alpha.grid(det_samples)
    dets = ruled_developability_det(alpha, pcs.ruling, ts)
    ruled = VerificationReport("ruling-det", f"det(T, X, X') at {det_samples} rulings")
    ruled.measure("max_abs_det", float(np.max(np.abs(dets))), tol_det)
    rep.subchecks.append(ruled.finish())

    rep.subchecks.append(_mean_curvature_check(alpha, pcs, f, us, vs, region, tol_H))
    rep.subchecks.append(_minimality_check(alpha, theta, grid, v_domain, tol_minimal, control_min_H, tol_sing))
    return rep.finish()


def _mean_curvature_check(alpha, pcs, f, us, vs, region, tol_H):
    theta = pcs.theta
    sub = VerificationReport("mean-curvature", "numeric H against k1 cos(theta) / (2 (1 - k1 v sin(theta)))")
    d1 = alpha.jet_function(1, vectorized=True)(us)[1]
    speed = np.sqrt(np.sum(d1 * d1, axis=0))
    if np.max(np.abs(speed - 1.0)) <= 1e-12:
        k1 = np.array([pcs.curvature(u) for u in us])
        K1 = np.broadcast_to(k1[:, None], region.shape)
        V = np.broadcast_to(vs[None, :], region.shape)
        Hc = 0.5 * K1 * math.cos(theta) / (1.0 - K1 * V * math.sin(theta))
        err = np.abs(f["H"] - Hc)[region]
        sub.measure("max_abs_H_error", float(err.max()), tol_H)
        return sub.finish()
    # the closed form assumes unit speed: sample at equal arc length
    arc = arc_length_reparametrize(alpha)
    sub.notes.append(f"curve is not unit speed; compared at equal arc length (L = {arc.length:.17g})")
    worst = 0.0
    unit_err = 0.0
    for s in np.linspace(0.0, arc.length, len(us)):
        t = arc.parameter(s)
        unit_err = max(unit_err, abs(float(np.linalg.norm(arc.derivatives(s)[1])) - 1.0))
        k1 = pcs.curvature(t)
        for v in vs:
            if 1.0 - k1 * v * math.sin(theta) <= 1e-9:
                continue
            H = fundamental_forms(pcs.patch, t, v).H
            worst = max(worst, abs(H - closed_form_H(k1, theta, v)))
    sub.measure("arc_length_speed_error", unit_err, 1e-8)
    sub.measure("max_abs_H_error", worst, tol_H)
    return sub.finish()


def _minimality_check(alpha, theta, grid, v_domain, tol_minimal, control_min_H, tol_sing):
    sub = VerificationReport("minimal-iff-normal-rulings", "H vanishes at theta = pi/2 and not otherwise")
    flat = plane_curve_surface(alpha, math.pi / 2, v_domain)
    f, us, vs, mask = forms_grid(flat.patch, *grid, tol_sing=tol_sing)
    U, V = np.meshgrid(us, vs, indexing="ij")
    region = mask & flat.regular_region(tol_sing)(U, V)
    sub.measure("max_abs_H_at_right_angle", float(np.max(np.abs(f["H"][region]))), tol_minimal)
    origin = alpha.point(alpha.domain[0])
    offsets = np.einsum("i,i...->...", flat.binormal, f["points"] - origin.reshape(3, 1, 1))
    sub.measure("max_plane_distance", float(np.max(np.abs(offsets))), tol_minimal)
    control = theta if abs(theta - math.pi / 2) > 1e-12 else math.pi / 4
    ctrl = plane_curve_surface(alpha, control, v_domain)
    fc, us, vs, mask = forms_grid(ctrl.patch, *grid, tol_sing=tol_sing)
    region = mask & ctrl.regular_region(tol_sing)(*np.meshgrid(us, vs, indexing="ij"))
    sub.measure("control_theta", control)
    sub.measure("min_abs_H_at_control_theta", float(np.min(np.abs(fc["H"][region]))), control_min_H, "min")
    return sub.finish()
