import math

import numpy as np
import pytest

from wirebill import CurveConstructionError, CurveSpec, SpecError, build_curve


def test_circle_length_and_curvature(circle):
    assert circle.length == pytest.approx(2 * math.pi, abs=1e-14)
    k = circle.curvature(np.linspace(0, 6, 13))
    assert np.allclose(k, 1.0, atol=1e-13)


def test_ellipse_length_matches_quadrature(ellipse):
    from scipy.special import ellipe

    # perimeter 4 a E(1 - b^2/a^2)
    assert ellipse.length == pytest.approx(4 * 2.0 * ellipe(1 - 0.25), rel=1e-13)


def test_arc_length_parameterization_has_unit_speed(ellipse, coil, flat):
    for c in (ellipse, coil, flat):
        x = np.linspace(0, c.length, 101)
        J = c.jets(x, 1)
        assert np.abs(np.linalg.norm(J[1], axis=-1) - 1).max() < 1e-12


def test_frenet_identities(ellipse, coil):
    # gamma' . gamma'' = 0 and |gamma''| = k for unit speed
    for c in (ellipse, coil):
        x = np.linspace(0, c.length, 57)
        J = c.jets(x, 2)
        assert np.abs(np.einsum("...i,...i", J[1], J[2])).max() < 1e-12
        assert np.abs(np.linalg.norm(J[2], axis=-1) - c.curvature(x)).max() < 1e-11


def test_jets_match_finite_differences(coil):
    x = np.array([0.3, 1.7, 4.0])
    h = 1e-3
    J = coil.jets(x, 3)
    fd2 = (coil.position(x + h) - 2 * coil.position(x) + coil.position(x - h)) / h**2
    assert np.abs(fd2 - J[2]).max() < 1e-5
    fd3 = (coil.jets(x + h, 2)[2] - coil.jets(x - h, 2)[2]) / (2 * h)
    assert np.abs(fd3 - J[3]).max() < 1e-5


def test_periodicity(coil):
    x = np.array([0.1, 2.2])
    assert np.allclose(coil.position(x), coil.position(x + coil.length), atol=1e-12)


def test_coil_is_4d_constant_speed(coil):
    assert coil.dimension == 4
    assert coil.constant_speed == pytest.approx(math.sqrt(1 + (0.05 * 2) ** 2), rel=1e-14)
    assert coil.length == pytest.approx(2 * math.pi * coil.constant_speed, rel=1e-14)


def test_flat_point_has_zero_curvature(flat):
    assert flat.curvature(np.array([0.0]))[0] < 1e-12
    assert flat.curvature(np.array([flat.length / 2]))[0] > 0.1


def test_fourier_convex_and_raw_samples_agree_with_circle():
    c = build_curve(CurveSpec.fourier_convex(1.0, cos=[0.0], sin=[0.0]))
    assert c.length == pytest.approx(2 * math.pi, rel=1e-12)
    t = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    raw = build_curve(CurveSpec.raw_samples(np.column_stack([np.cos(t), np.sin(t)]).tolist()))
    assert raw.length == pytest.approx(2 * math.pi, rel=1e-10)
    assert np.abs(raw.curvature(np.linspace(0, raw.length, 20)) - 1).max() < 1e-8


def test_subgroup_orbit_constant_curvature():
    A = np.zeros((4, 4))
    A[0, 1], A[1, 0] = -1, 1
    A[2, 3], A[3, 2] = -2, 2
    c = build_curve(CurveSpec.subgroup_orbit(A.tolist(), [1, 0, 0.3, 0]))
    k = c.curvature(np.linspace(0, c.length, 50))
    assert c.length > 0
    assert np.all(k > 0)


def test_spec_round_trip():
    spec = CurveSpec.coil(0.05, 2)
    assert CurveSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize(
    "data, field",
    [
        ({"kind": "nope"}, "curve.kind"),
        ({"kind": "planar-ellipse", "a": -1, "b": 1}, "curve.a"),
        ({"kind": "coil", "eps": 0.05}, "curve.m"),
        ({}, "curve.kind"),
    ],
)
def test_invalid_specs_name_the_field(data, field):
    with pytest.raises(SpecError) as err:
        CurveSpec.from_dict(data)
    assert err.value.field == field


def test_resolution_validated():
    with pytest.raises(SpecError) as err:
        build_curve(CurveSpec.circle(), resolution=-5)
    assert err.value.field == "resolution"


def test_nonconvex_support_function_rejected():
    with pytest.raises(CurveConstructionError):
        build_curve(CurveSpec.fourier_convex(1.0, cos=[0.0, 0.5]))


def test_degenerate_samples_rejected():
    with pytest.raises(SpecError):
        build_curve(CurveSpec.raw_samples([[0, 0], [0, 0], [0, 0], [0, 0]]))


def test_jets_order_out_of_range(circle):
    with pytest.raises(ValueError):
        circle.jets(np.array([0.0]), 5)
