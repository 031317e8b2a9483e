import math

import numpy as np
import pytest

from wirebill import NumericalError, SpecError
from wirebill import ellipsoid as ell


@pytest.fixture(scope="module")
def fam():
    return ell.ConfocalFamily([2.0, 1.5, 1.0])


def test_family_validation():
    with pytest.raises(SpecError):
        ell.ConfocalFamily([1.0, 1.0])
    with pytest.raises(SpecError):
        ell.ConfocalFamily([2.0, -1.0])
    with pytest.raises(SpecError):
        ell.ConfocalFamily([2.0, 1.0]).diag(-2.0)


def test_geodesic_flow_keeps_constraints_and_integrals(fam):
    rng = np.random.default_rng(0)
    s = ell.random_geodesic_state(fam, 0.0, rng)
    lam0 = ell.tangency_parameters(fam, ell.tangent_line(s))
    assert np.min(np.abs(lam0)) < 1e-9
    for mode in ("arc-length", "xi"):
        out, path = ell.geodesic_flow(fam, 0.0, s, 50, mode=mode, record=True)
        assert max(abs(fam.level(0.0, p.x)) for p in path) < 1e-8
        assert max(abs(np.linalg.norm(p.v) - 1) for p in path) < 1e-8
        lam = ell.tangency_parameters(fam, ell.tangent_line(out))
        assert np.abs(lam - lam0).max() < 1e-8


def test_curvature_formula_against_integrated_path(fam):
    # second difference of the integrated geodesic vs k N
    rng = np.random.default_rng(1)
    s = ell.random_geodesic_state(fam, 0.0, rng)
    h = 1e-3
    xp = ell.geodesic_flow(fam, 0.0, s, h).x
    xm = ell.geodesic_flow(fam, 0.0, s, -h).x
    acc = (xp - 2 * s.x + xm) / h**2
    assert np.linalg.norm(acc) == pytest.approx(ell.curvature(fam, 0.0, s.x, s.v), abs=1e-5)


def test_near_sphere_limit():
    R = 1.5
    fam = ell.ConfocalFamily(R * (1 + 1e-6 * np.array([3.0, 2.0, 1.0])))
    rng = np.random.default_rng(2)
    s = ell.random_geodesic_state(fam, 0.0, rng)
    assert ell.curvature(fam, 0.0, s.x, s.v) == pytest.approx(1 / R, rel=1e-5)
    out = ell.geodesic_flow(fam, 0.0, s, math.pi * R)
    # half a great circle lands near the antipode
    assert np.linalg.norm(out.x + s.x) < 1e-4
    rep = ell.commute_report(fam, 0.3, s, 0.5)
    assert rep.gap_xi < 1e-6 and rep.gap_arc_length < 1e-6


def test_focal_property():
    fam = ell.ConfocalFamily([2.0, 1.0])
    c = math.sqrt(3.0)
    for ang in (0.3, 1.0, 2.2):
        out = ell.reflect_line(fam, 0.0, ell.LineState(np.array([-c, 0.0]), np.array([math.cos(ang), math.sin(ang)])))
        p, q = out.p, out.q
        assert abs((p[0] - c) * q[1] - p[1] * q[0]) < 1e-10


def test_tangency_parameter_near_circle():
    fam = ell.ConfocalFamily([1.0, 1.0 - 1e-6])
    rho = 0.4
    lam = ell.tangency_parameters(fam, ell.LineState(np.array([0.0, rho]), np.array([1.0, 0.0])))
    assert lam.size == 1 and lam[0] == pytest.approx(rho**2 - 1, abs=1e-5)


def test_billiard_integrals_and_symplecticity(fam):
    rng = np.random.default_rng(3)
    line = ell.random_interior_line(fam, 0.4, rng)
    lam0 = ell.tangency_parameters(fam, line)
    for _ in range(100):
        line = ell.reflect_line(fam, 0.4, line)
    assert np.abs(ell.tangency_parameters(fam, line) - lam0).max() < 1e-8
    dets = [ell.symplectic_det(fam, 0.3, ell.random_interior_line(fam, 0.3, rng)) for _ in range(100)]
    assert max(abs(d - 1) for d in dets) < 1e-6


def test_reflections_in_confocal_members_commute(fam):
    rng = np.random.default_rng(4)
    for _ in range(10):
        line = ell.random_interior_line(fam, 0.1, rng)
        a = ell.reflect_line(fam, 0.1, ell.reflect_line(fam, 0.6, line))
        b = ell.reflect_line(fam, 0.6, ell.reflect_line(fam, 0.1, line))
        assert ell.line_gap(a, b) < 1e-8


def test_sphere_reflection_preserves_angle_with_radius():
    fam = ell.ConfocalFamily([1.0 + 2e-9, 1.0 + 1e-9, 1.0])
    line = ell.LineState(np.array([0.1, 0.2, -0.3]), np.array([0.6, 0.0, 0.8]))
    out = ell.reflect_line(fam, 0.0, line)
    x = out.p / np.linalg.norm(out.p)
    assert abs(np.dot(line.q, x)) == pytest.approx(abs(np.dot(out.q, x)), abs=1e-8)


def test_commutation_xi_vs_arc_length(fam):
    rng = np.random.default_rng(5)
    rep = ell.commute_report(fam, 0.3, ell.random_geodesic_state(fam, 0.0, rng), 0.5)
    assert rep.gap_xi < 1e-6
    assert rep.gap_arc_length > 1e-2
    assert np.abs(rep.tangency_after - rep.tangency_before).max() < 1e-8


def test_missing_intersection_reported(fam):
    with pytest.raises(NumericalError):
        ell.reflect_line(fam, 0.0, ell.LineState(np.array([10.0, 10.0, 10.0]), np.array([1.0, 0.0, 0.0])))
