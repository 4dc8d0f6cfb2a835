import math

import pytest

from helixlab.constructions import plane_curve_surface, sphere_ruled_spec
from helixlab.curves import CurveN
from helixlab.presets import example_curve
from helixlab.surfaces import SurfacePatch
from helixlab.verification import (
    BRANCH,
    FAIL,
    PASS,
    PREMISE,
    VACUOUS,
    VerificationReport,
    project_to_surface,
    verify_developability_equivalence,
    verify_geodesic_slant,
    verify_plane_curve_surface,
    verify_vn_normal_slant,
)

SPHERE = SurfacePatch.from_strings(
    ["sin(v)*cos(u)", "sin(v)*sin(u)", "cos(v)"], ("u", "v"), ((0.0, 6.0), (0.3, 2.8))
)
PLANE = SurfacePatch.from_strings(["u", "v", "0"], ("u", "v"), ((-2, 2), (-2, 2)))


def test_report_text_and_verdicts():
    rep = VerificationReport("demo", "scenario")
    rep.measure("a", 1.0, 2.0).measure("b", 3.0, 2.0, "min")
    assert rep.finish().verdict == PASS
    rep.measure("c", 5.0, 1.0)
    assert rep.finish().failed
    sub = VerificationReport("inner", "x").finish(BRANCH)
    outer = VerificationReport("outer", "y", subchecks=[sub]).finish()
    assert outer.verdict == PASS
    text = outer.to_text()
    assert text.startswith("check: outer") and "  check: inner" in text and "verdict: branch-degenerate" in text


def test_geodesic_check_on_non_helix_surface_reports_premise():
    rep = verify_geodesic_slant(SPHERE, [0, 0, 1], (1.0, 1.0), (1.0, 1.0), 0.5)
    assert rep.verdict == PREMISE


def test_straight_geodesic_is_vacuous():
    rep = verify_geodesic_slant(PLANE, [0, 0, 1], (0.0, 0.0), (1.0, 0.5), 1.0)
    assert rep.verdict == VACUOUS


def test_projection_onto_surface():
    (u, v), dist = project_to_surface(SPHERE, SPHERE.point(2.0, 1.2))
    assert dist <= 1e-14
    assert (u, v) == pytest.approx((2.0, 1.2), abs=1e-12)


def test_normal_frame_premise_on_surface_curve():
    # the generating curve lies on the surface but its binormal is not the surface normal
    pcs = plane_curve_surface(example_curve(), math.pi / 6)
    rep = verify_vn_normal_slant(pcs.patch, pcs.binormal, pcs.curve, samples=8, region=pcs.regular_region())
    assert rep.verdict == PREMISE
    assert rep.value("max_distance_to_surface") <= 1e-12


def test_normal_frame_slant_passes_at_right_angle():
    # theta = pi/2: the surface is alpha's plane and B is its normal
    pcs = plane_curve_surface(example_curve(), math.pi / 2, (0.0, 0.5))
    rep = verify_vn_normal_slant(pcs.patch, pcs.binormal, pcs.curve, samples=8)
    assert rep.verdict == PASS
    assert abs(rep.value("frame_axis_mean")) == pytest.approx(1.0, abs=1e-12)


def test_literal_tangent_variant_agrees_on_failure():
    beta = CurveN.from_strings(["cos(t)", "sin(t)", "0"], "t", (0.0, 6.0))
    rep = verify_developability_equivalence(sphere_ruled_spec(beta, math.pi / 4, literal_tangent=True))
    assert rep.verdict == PASS
    assert rep.value("line_of_curvature_residual") == pytest.approx(1.0, abs=1e-12)


def test_plane_curve_surface_for_a_non_unit_speed_ellipse():
    ellipse = CurveN.from_strings(["2*cos(t)", "sin(t)", "0"], "t", (0.0, 2 * math.pi))
    rep = verify_plane_curve_surface(ellipse, math.pi / 4, grid=(24, 8), v_domain=(0.0, 0.3))
    assert rep.verdict == PASS
    names = [s.check for s in rep.subchecks]
    assert names == ["constant-angle", "gauss-flat", "ruling-det", "mean-curvature", "minimal-iff-normal-rulings"]


def test_plane_curve_surface_fails_when_tolerance_is_impossible():
    rep = verify_plane_curve_surface(example_curve(), math.pi / 6, grid=(10, 5), tol_angle=-1.0)
    assert rep.verdict == FAIL
    assert rep.subchecks[0].verdict == FAIL
