"""End-to-end acceptance criteria, each with its tolerance and time budget.

Run ``pytest tests/test_acceptance.py`` to get one pass/fail line per
criterion in the terminal summary.
"""

import math

import numpy as np
from conftest import criterion
from test_curves import HELIX, fd_frenet_oracle
from test_expr import fd_check_corpus

from helixlab import expr as ex
from helixlab.cli import main
from helixlab.constructions import (
    ExtrusionSpec,
    RuledSpec,
    ellipsoid_normal_exprs,
    extrude_helix,
    plane_curve_surface,
    sphere_ruled_spec,
)
from helixlab.curves import CurveN, frenet
from helixlab.presets import example_curve, example_printed_coordinates
from helixlab.surfaces import (
    SurfacePatch,
    forms_grid,
    fundamental_forms,
    helix_surface_test,
    ruled_developability_det,
    shape_operator,
)
from helixlab.verification import (
    BRANCH,
    PASS,
    verify_developability_equivalence,
    verify_geodesic_slant,
    verify_helix_extrusion,
    verify_line_of_curvature_orthogonality,
)

THETA = math.pi / 6
GRID = (60, 20)


def example_surface(theta=THETA):
    return plane_curve_surface(example_curve(), theta, (0.0, math.pi))


@criterion("1", "printed coordinates reproduced", 1.0)
def test_example_coordinates():
    pcs = example_surface()
    jet, us, vs = pcs.patch.grid_jet(*GRID)
    U, V = np.meshgrid(us, vs, indexing="ij")
    err = float(np.max(np.abs(jet[0] - example_printed_coordinates(U, V))))
    assert err <= 1e-12
    return f"max error {err:.1e}"


@criterion("2", "|<Z, B>| = sin(pi/6)", 1.0)
def test_normal_binormal_angle():
    pcs = example_surface()
    r = helix_surface_test(pcs.patch, pcs.binormal, GRID, tol=1e-9, region=pcs.regular_region())
    assert r.excluded > 0
    assert r.constant and r.max_deviation <= 1e-9
    assert abs(abs(r.mean) - 0.5) <= 1e-9
    return f"mean {r.mean:.15f}, deviation {r.max_deviation:.1e}, excluded {r.excluded}"


def fd_mean_curvature(point, u, v, h=1e-4):
    """H from central differences of positions, same sign convention as the library."""
    pu = (point(u + h, v) - point(u - h, v)) / (2 * h)
    pv = (point(u, v + h) - point(u, v - h)) / (2 * h)
    puu = (point(u + h, v) - 2 * point(u, v) + point(u - h, v)) / h**2
    pvv = (point(u, v + h) - 2 * point(u, v) + point(u, v - h)) / h**2
    puv = (point(u + h, v + h) - point(u + h, v - h) - point(u - h, v + h) + point(u - h, v - h)) / (4 * h * h)
    Z = np.cross(pu, pv)
    Z /= np.linalg.norm(Z)
    E, F, G = pu @ pu, pu @ pv, pv @ pv
    L, M, N = puu @ Z, puv @ Z, pvv @ Z
    return (2 * F * M - E * N - G * L) / (2 * (E * G - F * F))


@criterion("3", "flat, mean curvature closed form", 2.0)
def test_gauss_and_mean_curvature():
    pcs = example_surface()
    f, us, vs, mask = forms_grid(pcs.patch, *GRID)
    U, V = np.meshgrid(us, vs, indexing="ij")
    region = mask & pcs.regular_region()(U, V)
    maxK = float(np.max(np.abs(f["K"][region])))
    assert maxK <= 1e-8
    worst = 0.0
    for v in (0.0, 0.3, 0.9, 1.5):
        for u in (0.4, 2.0, 7.5, 13.0):
            H = fundamental_forms(pcs.patch, u, v).H
            closed = math.cos(THETA) / (2 * (1 - v * math.sin(THETA)))
            worst = max(worst, abs(H - closed))
    assert worst <= 1e-8
    H0 = fundamental_forms(pcs.patch, math.pi / 2, 0.0).H
    assert abs(H0 - math.sqrt(3) / 4) <= 1e-8

    def printed(u, v):
        return example_printed_coordinates(u, v)

    oracle = fd_mean_curvature(printed, math.pi / 2, 0.0)
    assert abs(oracle - math.sqrt(3) / 4) <= 1e-6
    return f"max |K| {maxK:.1e}, max H error {worst:.1e}, H(v=0) {H0:.15f}"


@criterion("4", "developability determinant", 1.0)
def test_ruling_determinant():
    pcs = example_surface()
    alpha = pcs.curve
    dets = ruled_developability_det(alpha, pcs.ruling, alpha.grid(100))
    worst = float(np.max(np.abs(dets)))
    assert worst <= 1e-10
    axis = CurveN.from_strings(["0", "0", "t"], "t", (0.0, 5.0))
    ruling = CurveN.from_strings(["cos(t)", "sin(t)", "0"], "t").components
    helicoid = ruled_developability_det(axis, ruling, axis.grid(100))
    assert np.max(np.abs(helicoid - 1.0)) <= 1e-12
    return f"max |det| {worst:.1e}, helicoid det 1"


@criterion("5", "minimal iff normal rulings", 1.0)
def test_minimality():
    flat = example_surface(math.pi / 2)
    f, us, vs, mask = forms_grid(flat.patch, *GRID)
    assert mask.all()
    maxH = float(np.max(np.abs(f["H"])))
    assert maxH <= 1e-10
    origin = flat.curve.point(0.0)
    dist = float(np.max(np.abs(np.einsum("i,i...->...", flat.binormal, f["points"] - origin[:, None, None]))))
    assert dist <= 1e-10
    ctrl = example_surface()
    fc, us, vs, mask = forms_grid(ctrl.patch, *GRID)
    region = mask & ctrl.regular_region()(*np.meshgrid(us, vs, indexing="ij"))
    minH = float(np.min(np.abs(fc["H"][region])))
    assert minH >= 0.1
    return f"max |H| {maxH:.1e}, plane distance {dist:.1e}, control min |H| {minH:.3f}"


@criterion("6", "circle extrusion is a helix surface", 2.0)
def test_circle_extrusion():
    circle = CurveN.from_strings(["cos(t)", "sin(t)"], "t", (0.0, 2 * math.pi))
    thetas = [0.0, math.pi / 6, math.pi / 4, math.pi / 3, math.pi / 2]
    rep = verify_helix_extrusion(circle, thetas, grid=(40, 40), tol=1e-9, s_domain=(0.0, 0.5))
    assert rep.verdict == PASS
    for theta, sub in zip(thetas, rep.subchecks):
        assert sub.value("normal_axis_deviation") <= 1e-9
        assert abs(abs(sub.value("normal_axis_mean")) - math.sin(theta)) <= 1e-9
    # hand-computed cone normal (cos(theta) cos t, cos(theta) sin t, -sin(theta))
    theta = math.pi / 3
    patch = extrude_helix(ExtrusionSpec(circle, theta, (0.0, 0.5)))
    Z = fundamental_forms(patch, 1.2, 0.3).normal
    cone = [math.cos(theta) * math.cos(1.2), math.cos(theta) * math.sin(1.2), -math.sin(theta)]
    assert np.allclose(Z, cone, atol=1e-12)
    return "5 angles"


@criterion("7", "geodesics keep <V_2, d> constant", 10.0)
def test_geodesic_slant():
    cyl = SurfacePatch.from_strings(["cos(u)", "sin(u)", "v"], ("u", "v"), ((-20, 20), (-20, 20)))
    a, b = 0.6, 0.8
    rep = verify_geodesic_slant(cyl, [0, 0, 1], (0.0, 0.0), (a, b), 10.0, step=1e-3, tol=1e-5)
    assert rep.verdict == PASS
    cyl_dev = rep.value("principal_normal_axis_deviation")
    assert cyl_dev <= 1e-5
    tr = rep.data["trace"]
    closed = np.column_stack([np.cos(a * tr.s), np.sin(a * tr.s), b * tr.s])
    trace_err = float(np.max(np.abs(tr.points - closed)))
    assert trace_err <= 1e-6

    pcs = example_surface()
    rep = verify_geodesic_slant(pcs.patch, pcs.binormal, (math.pi / 4, 0.2), (1.0, 0.5), 1.0,
                                step=1e-3, tol=1e-4, region=pcs.regular_region())
    assert rep.verdict == PASS
    ex_dev = rep.value("principal_normal_axis_deviation")
    assert ex_dev <= 1e-4
    return f"cylinder deviation {cyl_dev:.1e}, trace error {trace_err:.1e}, example deviation {ex_dev:.1e}"


@criterion("8", "lines of curvature orthogonal to the axis", 5.0)
def test_lines_of_curvature():
    pcs = example_surface()
    region = pcs.regular_region()
    start = (math.pi / 4, 0.0)
    # off the generating curve, inside the regular region v < 2
    rep = verify_line_of_curvature_orthogonality(pcs.patch, pcs.binormal, (math.pi / 4, 0.5), "max", 1.0, 1e-3,
                                                 tol=1e-5, region=region)
    assert rep.verdict == PASS
    worst = rep.value("max_abs_tangent_axis")
    assert worst <= 1e-5
    rep = verify_line_of_curvature_orthogonality(pcs.patch, pcs.binormal, start, "min", 1.0, 1e-3, region=region)
    assert rep.verdict == BRANCH
    ruling_dot = rep.value("max_abs_tangent_axis")
    # X = sin(theta) V_2 + cos(theta) B with V_2 orthogonal to B
    assert abs(ruling_dot - math.cos(THETA)) <= 1e-10
    return f"max |<T, B>| {worst:.1e}, ruling branch |<X, B>| {ruling_dot:.12f}"


def ellipsoid_residual_oracle(axes, lat, ts):
    """|a b (k1 - k2)| from the ellipsoid's own principal frame, where beta' = a e1 + b e2."""
    A, Bx, C = axes
    patch = SurfacePatch.from_strings(
        [f"{A!r}*cos(v)*cos(u)", f"{Bx!r}*cos(v)*sin(u)", f"{C!r}*sin(v)"], ("u", "v"), ((-10, 10), (-2, 2))
    )
    out = []
    for t in ts:
        so = shape_operator(patch, t, lat)
        tangent = patch.jet_function()(t, lat)[1]
        tangent = tangent / np.linalg.norm(tangent)
        a, b = so.directions @ tangent
        out.append(abs(a * b * (so.eigenvalues[1] - so.eigenvalues[0])))
    return np.array(out)


@criterion("9", "developable iff line of curvature", 5.0)
def test_developability_equivalence():
    circle = CurveN.from_strings(["cos(t)", "sin(t)"], "t", (0.0, 2 * math.pi))
    lat = 0.7
    small = CurveN.from_strings([f"cos({lat})*cos(t)", f"cos({lat})*sin(t)", f"sin({lat})"], "t", (0.0, 2 * math.pi))
    details = []
    for beta in (circle, small):
        rep = verify_developability_equivalence(sphere_ruled_spec(beta, math.pi / 4), tol_premise=1e-10, tol_dev=1e-10)
        assert rep.verdict == PASS
        res = [m.value for m in rep.measurements]
        assert max(res) <= 1e-10
        details.append(f"n={beta.dim + 1} {max(res):.1e}")
    axes, lat = (2.0, 1.5, 1.0), 0.5
    beta = CurveN.from_strings(
        [f"{axes[0]}*cos({lat})*cos(t)", f"{axes[1]}*cos({lat})*sin(t)", f"{axes[2]}*sin({lat})"],
        "t", (0.0, 2 * math.pi),
    )
    spec = RuledSpec(beta, ellipsoid_normal_exprs(beta, axes), math.pi / 4)
    rep = verify_developability_equivalence(spec)
    assert rep.verdict == PASS
    premise, dev = (m.value for m in rep.measurements)
    assert premise >= 1e-3 and dev >= 1e-3
    oracle = ellipsoid_residual_oracle(axes, lat, beta.grid(64))
    assert abs(oracle.max() - premise) <= 1e-8
    details.append(f"ellipsoid {premise:.3f}/{dev:.3f}")
    return ", ".join(details)


@criterion("10", "Frenet frame properties", 2.0)
def test_frenet_suite():
    circle = CurveN.from_strings(["2*cos(t)", "2*sin(t)"], "t", (0.0, 2 * math.pi))
    w = ex.Param("w")
    worst_orth = worst_ode = worst_inv = 0.0
    h = 1e-5
    for curve in (example_curve(), circle, HELIX):
        n = curve.dim
        other = CurveN([ex.substitute(c, {curve.param: 2 * w + w * w}) for c in curve.components], "w", (0.1, 1.0))
        for t in np.linspace(curve.domain[0] + 0.1, curve.domain[1] - 0.1, 7):
            fr = frenet(curve, t)
            worst_orth = max(worst_orth, float(np.max(np.abs(fr.frame @ fr.frame.T - np.eye(n)))))
            dF = (frenet(curve, t + h).frame - frenet(curve, t - h).frame) / (2 * h)
            k = np.concatenate([[0.0], fr.curvatures, [0.0]])
            for i in range(n):
                rhs = np.zeros(n)
                if i > 0:
                    rhs -= k[i] * fr.frame[i - 1]
                if i < n - 1:
                    rhs += k[i + 1] * fr.frame[i + 1]
                worst_ode = max(worst_ode, float(np.max(np.abs(dF[i] - fr.speed * rhs))))
        for x in np.linspace(0.1, 1.0, 5):
            t = 2 * x + x * x
            worst_inv = max(worst_inv, float(np.max(np.abs(frenet(curve, t).curvatures - frenet(other, x).curvatures))))
    assert worst_orth <= 1e-10 and worst_ode <= 1e-5 and worst_inv <= 1e-8
    for t in (0.5, 2.0, 4.0):
        fr = frenet(HELIX, t)
        assert abs(fr.k(1) - 0.5) <= 1e-9 and abs(fr.k(2) - 0.5) <= 1e-9
        _, _, _, k1, tau = fd_frenet_oracle(lambda s: np.array([math.cos(s), math.sin(s), s]), t)
        assert abs(k1 - 0.5) <= 1e-6 and abs(tau - 0.5) <= 1e-3
    return f"orthonormality {worst_orth:.1e}, ODE {worst_ode:.1e}, invariance {worst_inv:.1e}"


@criterion("11", "expression parser and differentiation", 2.0)
def test_parser_suite():
    corpus = fd_check_corpus(200)
    worst = max(abs(sym - fd) / max(1.0, abs(sym)) for *_, sym, fd in corpus)
    assert len(corpus) == 200 and worst <= 1e-5
    for text, *_ in corpus:
        e = ex.parse(text, ("x", "y"))
        s = ex.to_string(e)
        assert ex.to_string(ex.parse(s, ("x", "y"))) == s
    assert ex.evaluate(ex.parse("pi/6")) == math.pi / 6
    return f"worst relative error {worst:.1e}"


@criterion("mesh", "OBJ of the example at 60x20", 5.0)
def test_example_mesh(tmp_path):
    assert main(["mesh", "--config", "builtin:example-5.1", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "mesh.obj").read_text().splitlines()
    verts = [l for l in lines if l.startswith("v ")]
    faces = [l for l in lines if l.startswith("f ")]
    assert len(verts) == 1200 and 0 < len(faces) <= 59 * 19
    assert all(len(l.split()) == 4 for l in verts) and all(len(l.split()) == 5 for l in faces)
    return f"{len(verts)} vertices, {len(faces)} faces"
