import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helixlab import expr as ex
from helixlab.curves import (
    CurveN,
    arc_length_reparametrize,
    frame_vectors,
    frenet,
    generalized_cross,
    slant_helix_test,
)
from helixlab.errors import FrameDegenerate, NonRegularCurve
from helixlab.presets import example_curve

HELIX = CurveN.from_strings(["cos(t)", "sin(t)", "t"], "t", (0.0, 2 * math.pi))
CIRCLE = CurveN.from_strings(["2*cos(t)", "2*sin(t)"], "t", (0.0, 2 * math.pi))
CURVE4 = CurveN.from_strings(["cos(t)", "sin(t)", "cos(2*t)/2", "sin(2*t)/2"], "t", (0.1, 3.0))


def fd_frenet_oracle(point, t, h=1e-3):
    """Frame and curvatures in R^3 from five-point differences of positions alone."""
    P = np.array([point(t + k * h) for k in (-2, -1, 0, 1, 2)])
    d1 = (P[0] - 8 * P[1] + 8 * P[3] - P[4]) / (12 * h)
    d2 = (-P[0] + 16 * P[1] - 30 * P[2] + 16 * P[3] - P[4]) / (12 * h * h)
    d3 = (-P[0] + 2 * P[1] - 2 * P[3] + P[4]) / (2 * h**3)
    cr = np.cross(d1, d2)
    k1 = np.linalg.norm(cr) / np.linalg.norm(d1) ** 3
    tau = np.dot(cr, d3) / np.dot(cr, cr)
    T = d1 / np.linalg.norm(d1)
    B = cr / np.linalg.norm(cr)
    return T, np.cross(B, T), B, k1, tau


def test_helix_curvatures_match_finite_difference_oracle():
    def point(t):
        return np.array([math.cos(t), math.sin(t), t])

    for t in np.linspace(0.1, 6.0, 9):
        fr = frenet(HELIX, t)
        T, N, B, k1, tau = fd_frenet_oracle(point, t)
        assert k1 == pytest.approx(0.5, abs=1e-6)
        assert tau == pytest.approx(0.5, abs=1e-3)
        assert fr.k(1) == pytest.approx(0.5, abs=1e-9)
        assert fr.k(2) == pytest.approx(0.5, abs=1e-9)
        assert np.allclose(fr.frame, [T, N, B], atol=1e-6)


def test_example_frame_matches_printed_values():
    c = example_curve()
    for u in (0.0, math.pi / 2, 2.0, 11.0):
        fr = frenet(c, u)
        V2 = np.array([-3 / 5 * math.sin(u), -math.cos(u), -4 / 5 * math.sin(u)])
        assert np.allclose(fr.V(2), V2, atol=1e-14)
        assert np.allclose(fr.V(3), [4 / 5, 0.0, -3 / 5], atol=1e-14)
        assert fr.k(1) == pytest.approx(1.0, abs=1e-12)
        assert abs(fr.k(2)) <= 1e-12


def test_circle_curvature():
    for t in CIRCLE.grid(7):
        assert frenet(CIRCLE, t).k(1) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("curve", [HELIX, CIRCLE, CURVE4, example_curve()], ids=["helix", "circle", "r4", "example"])
def test_frame_is_orthonormal_and_positively_oriented(curve):
    for t in curve.grid(13):
        F = frenet(curve, t).frame
        assert np.max(np.abs(F @ F.T - np.eye(curve.dim))) <= 1e-10
        assert np.linalg.det(F) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("curve", [HELIX, CIRCLE, CURVE4, example_curve()], ids=["helix", "circle", "r4", "example"])
def test_frenet_equations(curve):
    """V_i' = |alpha'| (-k_{i-1} V_{i-1} + k_i V_{i+1}), derivative by central differences."""
    h = 1e-5
    n = curve.dim
    for t in np.linspace(*curve.domain, 9)[1:-1]:
        fr = frenet(curve, t)
        dF = (frenet(curve, t + h).frame - frenet(curve, t - h).frame) / (2 * h)
        k = np.concatenate([[0.0], fr.curvatures, [0.0]])
        for i in range(n):
            rhs = -k[i] * (fr.frame[i - 1] if i > 0 else 0) + k[i + 1] * (fr.frame[i + 1] if i < n - 1 else 0)
            assert np.max(np.abs(dF[i] - fr.speed * rhs)) <= 1e-5


@pytest.mark.parametrize("curve", [HELIX, CURVE4, example_curve()], ids=["helix", "r4", "example"])
def test_curvatures_are_parametrization_invariant(curve):
    w = ex.Param("w")
    for new, back in [(2 * w, lambda x: x / 2), (w + w * w * w / 10, None)]:
        comps = [ex.substitute(c, {curve.param: new}) for c in curve.components]
        other = CurveN(comps, "w", (0.2, 0.9))
        for x in np.linspace(0.2, 0.9, 5):
            t = ex.evaluate(new, {"w": x})
            a, b = frenet(curve, t).curvatures, frenet(other, x).curvatures
            assert np.max(np.abs(a - b)) <= 1e-8


def test_generalized_cross_against_cofactor_oracle():
    rng = np.random.default_rng(0)
    vs = rng.normal(size=(3, 4))
    w = generalized_cross(vs)
    for _ in range(5):
        u = rng.normal(size=4)
        assert np.dot(w, u) == pytest.approx(np.linalg.det(np.vstack([u, vs])), rel=1e-12)
    assert np.allclose(vs @ w, 0.0, atol=1e-12)
    e = np.eye(4)
    assert np.array_equal(generalized_cross(e[:3]), -e[3])
    assert np.array_equal(generalized_cross(np.array([[1.0, 2.0]])), np.array([2.0, -1.0]))


def test_straight_line_degenerates_with_partial_frame():
    line = CurveN.from_strings(["t", "2*t", "3*t"], "t")
    with pytest.raises(FrameDegenerate) as info:
        frenet(line, 0.5)
    assert info.value.index == 2
    assert np.allclose(info.value.partial[0], np.array([1, 2, 3]) / math.sqrt(14))
    assert np.allclose(frame_vectors(line, 0.5, 1)[0], np.array([1, 2, 3]) / math.sqrt(14))


def test_non_regular_point():
    cusp = CurveN.from_strings(["t^2", "t^3"], "t", (-1.0, 1.0))
    with pytest.raises(NonRegularCurve):
        frenet(cusp, 0.0)


def test_slant_helix():
    r = slant_helix_test(HELIX, 1, [0, 0, 1])
    assert r.constant and r.mean == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    r = slant_helix_test(HELIX, 2, [0, 0, 1])
    assert r.constant and r.perpendicular
    r = slant_helix_test(HELIX, 1, [1, 0, 0])
    assert not r.constant


def test_arc_length_circle():
    arc = arc_length_reparametrize(CIRCLE)
    assert arc.length == pytest.approx(4 * math.pi, abs=1e-10)
    for s in np.linspace(0, arc.length, 9):
        t = arc.parameter(s)
        assert t == pytest.approx(s / 2, abs=1e-10)
        _, g1, g2 = arc.derivatives(s)
        assert np.linalg.norm(g1) == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(g2) == pytest.approx(0.5, abs=1e-12)


def test_arc_length_nonuniform_speed():
    c = CurveN.from_strings(["t^2", "t^3"], "t", (0.5, 2.0))
    arc = arc_length_reparametrize(c)

    def speed(t):
        return math.hypot(2 * t, 3 * t * t)

    from scipy.integrate import quad

    for s in np.linspace(0, arc.length, 7):
        t = arc.parameter(s)
        assert quad(speed, 0.5, t, epsabs=1e-13)[0] == pytest.approx(s, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.2, max_value=3.0), st.floats(min_value=-2.0, max_value=2.0).filter(lambda b: abs(b) > 0.05),
       st.floats(min_value=0.0, max_value=6.0))
def test_circular_helix_curvatures(a, b, t):
    c = CurveN.from_strings([f"{a!r}*cos(t)", f"{a!r}*sin(t)", f"{b!r}*t"], "t")
    fr = frenet(c, t)
    assert fr.k(1) == pytest.approx(a / (a * a + b * b), rel=1e-9)
    assert fr.k(2) == pytest.approx(b / (a * a + b * b), rel=1e-9)
