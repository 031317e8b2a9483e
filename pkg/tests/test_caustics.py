import math

import numpy as np
import pytest

from wirebill import CurveSpec, SpecError, build_curve, iterate_orbit
from wirebill.caustics import ChordFamily, gutkin_roots, striction_point, striction_profile, string_invariant


def test_gutkin_roots():
    r4 = gutkin_roots(4)
    assert np.allclose(r4, [2 * math.atan(math.sqrt(5)), 2 * math.pi - 2 * math.atan(math.sqrt(5))], atol=1e-12)
    assert gutkin_roots(2).size == 0
    assert gutkin_roots(3).size == 0
    for m in (5, 6, 7):
        for d in gutkin_roots(m):
            assert abs(math.tan(m * d / 2) - m * math.tan(d / 2)) < 1e-8 * (1 + abs(math.tan(m * d / 2)))
    with pytest.raises(SpecError):
        gutkin_roots(1)


def test_circle_striction_is_midpoint_on_caustic(circle):
    d = 1.2
    fam = ChordFamily.shift(circle, d)
    prof = striction_profile(fam, samples=16)
    assert np.abs(prof.fraction - 0.5).max() < 1e-12
    # midpoint of a chord of angle d lies at radius cos(d/2)
    assert np.abs(np.linalg.norm(prof.point, axis=-1) - math.cos(d / 2)).max() < 1e-12
    assert np.nanmax(prof.deviation) < 1e-8


def test_confocal_family_is_invariant(ellipse):
    from wirebill import reflect

    fam = ChordFamily.confocal(ellipse, 0.5)
    t = np.array([0.3, 2.0, 5.0])
    f = fam.partner(t)
    for a, b in zip(t, f):
        z = float(reflect(ellipse, a, b)[0])
        assert z == pytest.approx(float(fam.partner(np.array([b]))[0]), abs=1e-9)


def test_confocal_striction_lies_on_caustic(ellipse):
    lam = 0.5
    fam = ChordFamily.confocal(ellipse, lam)
    prof = striction_profile(fam, samples=24)
    pts = prof.point
    level = pts[:, 0] ** 2 / (4 - lam) + pts[:, 1] ** 2 / (1 - lam)
    assert np.abs(level - 1).max() < 1e-8
    assert np.all((prof.fraction > 0) & (prof.fraction < 1))


def test_family_from_orbit_reproduces_confocal_map(ellipse):
    fam = ChordFamily.confocal(ellipse, 0.5)
    t0 = 0.0
    orb = iterate_orbit(ellipse, t0, float(fam.partner(np.array([t0]))[0]), 400)
    approx = ChordFamily.from_orbit(ellipse, orb)
    t = np.linspace(0, ellipse.length, 11)[:-1]
    assert np.abs(approx.partner(t) - fam.partner(t)).max() < 1e-4


def test_noncylindricity_positive_on_coil(coil):
    prof = striction_profile(ChordFamily.shift(coil, 2.0), samples=16)
    assert np.all(prof.noncylindricity > 1e-10) and not prof.cylindrical.any()


def test_string_identity_on_coil(coil):
    assert string_invariant(ChordFamily.shift(coil, 2.5)) < 1e-6


def test_striction_point_dimension_agnostic():
    c = build_curve(CurveSpec.coil(0.05, 3))
    s, pt = striction_point(ChordFamily.shift(c, 1.0), np.array([0.0, 1.0]))
    assert pt.shape == (2, 4)
    assert np.allclose(s, 0.5, atol=1e-12)


def test_invalid_families(ellipse, circle):
    with pytest.raises(SpecError):
        ChordFamily.confocal(ellipse, 1.5)
    with pytest.raises(SpecError):
        ChordFamily.confocal(circle, 0.1)
    with pytest.raises(SpecError):
        ChordFamily.shift(circle, 7.0)
