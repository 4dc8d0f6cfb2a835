import math

import numpy as np
import pytest

from helixlab.constructions import (
    ExtrusionSpec,
    check_theta,
    closed_form_H,
    extrude_helix,
    plane_curve_surface,
    ruled_from_curve,
    sphere_ruled_spec,
)
from helixlab.curves import CurveN
from helixlab.errors import InvalidNormal, NotPlanar, SingularPoint
from helixlab.presets import example_curve, example_printed_coordinates
from helixlab.surfaces import HyperPatch, SurfacePatch, forms_grid, fundamental_forms, hypersurface_helix_test

CIRCLE2 = CurveN.from_strings(["cos(t)", "sin(t)"], "t", (0.0, 2 * math.pi))
THETAS = [0.0, math.pi / 6, math.pi / 4, math.pi / 3, math.pi / 2]


@pytest.mark.parametrize("theta", THETAS)
def test_circle_extrusion_normal_is_the_cone_normal(theta):
    patch = extrude_helix(ExtrusionSpec(CIRCLE2, theta, (0.0, 0.5)))
    f, us, vs, mask = forms_grid(patch, 12, 6)
    assert mask.all()
    T = us[:, None] * np.ones_like(vs)[None, :]
    cone = np.stack([math.cos(theta) * np.cos(T), math.cos(theta) * np.sin(T), -math.sin(theta) * np.ones_like(T)])
    assert np.max(np.abs(f["Z"] - cone)) <= 1e-12


def test_extrusion_over_surface_is_a_helix_hypersurface():
    sphere = SurfacePatch.from_strings(
        ["sin(v)*cos(u)", "sin(v)*sin(u)", "cos(v)"], ("u", "v"), ((0.0, 6.0), (0.3, 2.8))
    )
    hp = extrude_helix(ExtrusionSpec(sphere, math.pi / 6, (0.0, 0.5)))
    assert isinstance(hp, HyperPatch) and hp.dim == 4
    r = hypersurface_helix_test(hp, [0, 0, 0, 1], samples=5)
    assert r.constant and abs(r.mean) == pytest.approx(0.5, abs=1e-12)


def test_example_surface_matches_printed_coordinates():
    pcs = plane_curve_surface(example_curve(), math.pi / 6)
    jet, us, vs = pcs.patch.grid_jet(60, 20)
    U, V = np.meshgrid(us, vs, indexing="ij")
    assert np.max(np.abs(jet[0] - example_printed_coordinates(U, V))) <= 1e-12
    assert np.allclose(pcs.binormal, [0.8, 0.0, -0.6], atol=1e-15)


def test_example_singular_curve():
    pcs = plane_curve_surface(example_curve(), math.pi / 6)
    assert pcs.singular_factor(1.0, 2.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(SingularPoint):
        fundamental_forms(pcs.patch, 1.0, 2.0)
    region = pcs.regular_region()
    U, V = np.meshgrid([0.5, 1.0], [1.0, 2.0, 3.0], indexing="ij")
    assert region(U, V).tolist() == [[True, False, False], [True, False, False]]


def test_closed_form_mean_curvature():
    assert closed_form_H(1.0, math.pi / 6, 0.0) == pytest.approx(math.sqrt(3) / 4, abs=1e-15)
    with pytest.raises(SingularPoint):
        closed_form_H(1.0, math.pi / 6, 2.0)


def test_space_curve_is_rejected():
    helix = CurveN.from_strings(["cos(t)", "sin(t)", "t"], "t", (0.0, 3.0))
    with pytest.raises(NotPlanar):
        plane_curve_surface(helix, 0.3)


@pytest.mark.parametrize("theta", [-0.1, 2.0])
def test_theta_range(theta):
    with pytest.raises(ValueError):
        check_theta(theta)


def test_sphere_ruled_surface_and_invalid_normal():
    beta = CurveN.from_strings(["cos(t)", "sin(t)"], "t", (0.0, 6.0))
    patch = ruled_from_curve(sphere_ruled_spec(beta, math.pi / 4))
    # directrix on the unit circle, rulings sin(theta) beta + cos(theta) e_3
    s = math.sqrt(0.5)
    assert np.allclose(patch.point(0.0, 1.0), [1 + s, 0.0, s], atol=1e-15)
    literal = sphere_ruled_spec(beta, math.pi / 4, literal_tangent=True)
    with pytest.raises(InvalidNormal):
        ruled_from_curve(literal)
    assert ruled_from_curve(literal, validate=False).dim == 3
