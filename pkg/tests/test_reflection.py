import math

import numpy as np
import pytest

from wirebill import CurveSpec, NicenessError, build_curve, chord_frame, check_nice, iterate_orbit, reflect
from wirebill.reflection import billiard_map, jacobian_check, require_nice, solve_alpha, start_from_angle


def test_reflection_law_holds(ellipse):
    x, y = 0.4, 3.1
    z = float(reflect(ellipse, x, y)[0])
    a = chord_frame(ellipse, x, y)
    b = chord_frame(ellipse, y, z)
    assert float(a.beta) == pytest.approx(float(b.alpha), abs=1e-13)


def test_circle_orbit_is_rotation(circle):
    orb = iterate_orbit(circle, 0.0, 1.0, 50)
    assert np.allclose(np.diff(orb.vertices), 1.0, atol=1e-12)
    assert np.abs(orb.alpha - 0.5).max() < 1e-13


def test_solve_alpha_inverts_the_angle(coil):
    y = np.array([0.0, 1.0, 4.0])
    target = np.array([0.1, 1.0, 2.5])
    d = solve_alpha(coil, y, target)
    f = chord_frame(coil, y, y + d)
    assert np.abs(f.alpha - target).max() < 1e-12


def test_all_roots_mode_agrees_on_nice_curve(ellipse):
    x, y = 0.2, 2.0
    nice = float(reflect(ellipse, x, y)[0])
    roots = reflect(ellipse, x, y, mode="all-roots")
    assert roots.size == 1 and roots[0] == pytest.approx(nice, abs=1e-10)


def test_check_nice_reports(coil, ellipse, flat):
    assert check_nice(coil).passed
    assert check_nice(ellipse).passed
    rep = check_nice(flat)
    assert not rep.passed and not rep.condition2
    with pytest.raises(NicenessError):
        require_nice(flat)


def test_nice_mode_refuses_flat_curve(flat):
    with pytest.raises(NicenessError):
        iterate_orbit(flat, 0.0, 1.0, 5)


def test_niceness_is_open_under_perturbation():
    # a small smooth bump keeps a nice curve nice
    c = build_curve(CurveSpec.fourier_convex(1.0, cos=[0.0, 0.01], sin=[0.0, 0.0, 0.005]))
    assert check_nice(c).passed


def test_jacobian_is_area_preserving(coil):
    det, flagged = jacobian_check(coil, 0.3, 2.0)
    assert abs(det - 1) < 1e-6 and not flagged


def test_billiard_map_in_x_cos_alpha(ellipse):
    x1, c1 = billiard_map(ellipse, 0.5, math.cos(0.7))
    y = start_from_angle(ellipse, 0.5, 0.7)
    assert float(x1) == pytest.approx(y, abs=1e-12)
    b = chord_frame(ellipse, 0.5, y)
    assert float(c1) == pytest.approx(float(b.cos_beta), abs=1e-12)


def test_orbit_residuals_small(ellipse):
    orb = iterate_orbit(ellipse, 0.0, 1.5, 500)
    assert orb.residual.max() < 1e-12
    assert orb.steps == 500
