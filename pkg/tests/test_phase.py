import math

import numpy as np
import pytest

from wirebill import NicenessError, iterate_orbit
from wirebill.phase import (
    band_confinement,
    deficit_limit,
    lazutkin_chart,
    longest_inscribed_polygon,
    periodic_orbit_search,
    rotation_number,
)
from wirebill.phase.polygons import _neville


def test_lazutkin_chart_round_trip(ellipse15):
    ch = lazutkin_chart(ellipse15)
    x = np.linspace(0, ellipse15.length, 17)
    assert np.abs(ch.x_of_u(ch.u(x)) - x).max() < 1e-10
    a = np.array([0.01, 0.1, 0.5])
    assert np.abs(ch.alpha_of_v(1.0, ch.v(1.0, a)) - a).max() < 1e-12


def test_lazutkin_chart_needs_positive_curvature(flat):
    with pytest.raises(NicenessError):
        lazutkin_chart(flat)


def test_lazutkin_total_on_circle(circle):
    # u advances by int k^(2/3) dx = 2 pi on the unit circle
    assert lazutkin_chart(circle).U == pytest.approx(2 * math.pi, rel=1e-12)


def test_rotation_number_rational_on_circle(circle):
    orb = iterate_orbit(circle, 0.0, 2 * math.pi / 5, 200)
    rn = rotation_number(orb)
    assert rn.rational == (1, 5)


def test_rotation_number_needs_long_orbit(circle):
    with pytest.raises(ValueError):
        rotation_number(iterate_orbit(circle, 0.0, 1.0, 10))


def test_band_confinement_shrinks_with_v0(ellipse15):
    res = band_confinement(ellipse15, v0_values=(0.1, 0.05), steps=300)
    assert np.all(res.deviation < res.v0)


def test_newton_and_ascent_agree(ellipse):
    a = longest_inscribed_polygon(ellipse, 0.0, 2.0, 8)
    b = longest_inscribed_polygon(ellipse, 0.0, 2.0, 8, method="ascent")
    assert np.abs(a.vertices - b.vertices).max() < 1e-9
    assert a.residuals.max() < 1e-12


def test_chain_is_a_billiard_trajectory(ellipse):
    from wirebill import chord_frame

    p = longest_inscribed_polygon(ellipse, 0.0, 3.0, 12)
    f = chord_frame(ellipse, p.vertices[:-1], p.vertices[1:])
    assert np.abs(f.beta[:-1] - f.alpha[1:]).max() < 1e-10


def test_neville_recovers_polynomial_limit():
    h = np.array([1.0, 0.5, 0.25, 0.125])
    vals = 3.0 + 2 * h - 5 * h**2
    lim, _ = _neville(h, vals)
    assert lim == pytest.approx(3.0, abs=1e-12)


def test_deficit_reports_both_constants(circle):
    res = deficit_limit(circle, 0.0, 1.0, n_list=(16, 32, 64))
    assert res.reference_cubed == pytest.approx(1 / 24, rel=1e-10)
    assert res.reference_printed == pytest.approx(1 / 24, rel=1e-10)
    assert res.limit == pytest.approx(1 / 24, abs=1e-8)


def test_periodic_orbits(circle, coil):
    tri = periodic_orbit_search(circle, 1, 3)
    assert tri.total_length == pytest.approx(3 * math.sqrt(3), rel=1e-12)
    star = periodic_orbit_search(circle, 2, 5)
    assert star.total_length == pytest.approx(10 * math.sin(2 * math.pi / 5), rel=1e-12)
    pent = periodic_orbit_search(coil, 1, 5)
    assert np.allclose(np.diff(pent.vertices), coil.length / 5, atol=1e-9)


def test_periodic_orbit_on_ellipse_has_two_symmetric_diameters(ellipse):
    two = periodic_orbit_search(ellipse, 1, 2)
    assert two.total_length == pytest.approx(8.0, rel=1e-12)


def test_glancing_escape_and_control(flat, ellipse):
    from wirebill.phase import glancing_escape

    g = glancing_escape(flat, 0.05, 300, x0=math.pi, stop_factor=10)
    assert g.escape_step is not None and g.excursion > 10
    c = glancing_escape(ellipse, 0.05, 300, mode="nice")
    assert c.excursion <= 2


def test_flat_point_identity(flat):
    from wirebill.phase import flat_point_identity

    vals, pred = flat_point_identity(flat, 0.0, samples=50)
    assert np.all(vals > 0)
    assert np.allclose(vals, pred, rtol=1e-8, atol=1e-12)
