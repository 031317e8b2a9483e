"""Ruled surfaces swept by invariant chord families: striction curves and caustics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import SpecError

CYLINDRICAL_TOL = 1e-10


def _d1(F, t, h):
    """Fourth-order central difference of F at t (F vectorized, values may be vectors)."""
    return (8 * (F(t + h) - F(t - h)) - (F(t + 2 * h) - F(t - 2 * h))) / (12 * h)


@dataclass
class ChordFamily:
    """Chords [gamma(t), gamma(f(t))] for t in arc length; f is lifted so f(t) > t."""

    curve: object
    partner: Callable
    dpartner: Callable
    label: str = ""

    @classmethod
    def shift(cls, curve, d, raw=True):
        """f(t) = t + d.  With ``raw`` the shift is in the curve's raw parameter
        (the angle for circles and coils), otherwise in arc length."""
        if raw:
            if curve.constant_speed is None:
                raise ValueError("raw shifts need a constant-speed curve")
            d = d * curve.constant_speed
        if not 0 < d < curve.length:
            raise SpecError("family.d", "shift must lie strictly between 0 and the period")
        return cls(curve, lambda t: np.asarray(t, float) + d, lambda t: np.ones(np.shape(t)), f"shift {d:.12g}")

    @classmethod
    def confocal(cls, curve, lam):
        """Chords of a planar ellipse tangent to the confocal ellipse with parameter lam.

        The caustic is x^2/(a^2 - lam) + y^2/(b^2 - lam) = 1, 0 < lam < b^2;
        chords run counterclockwise with the caustic on their left.
        """
        if curve.kind != "planar-ellipse":
            raise SpecError("curve.kind", "confocal families need a planar ellipse")
        a, b = float(curve.spec.params["a"]), float(curve.spec.params["b"])
        if not 0 < lam < min(a, b) ** 2:
            raise SpecError("family.lambda", f"must lie in (0, {min(a, b) ** 2:g})")
        Ac = np.array([1 / (a * a - lam), 1 / (b * b - lam)])
        Ao = np.array([1 / (a * a), 1 / (b * b)])
        P = curve.length

        def partner(t):
            t = np.atleast_1d(np.asarray(t, float))
            p = curve.position(t)[..., :2]
            Ap = Ac * p
            c = np.einsum("...i,...i", Ap, p) - 1.0
            M = Ap[..., :, None] * Ap[..., None, :] - c[..., None, None] * np.diag(Ac)
            mu, V = np.linalg.eigh(M)
            # q^T M q = 0: q = sqrt(-mu_0) e_1 +- sqrt(mu_1) e_0
            w0 = np.sqrt(np.maximum(mu[..., 1], 0.0))[..., None] * V[..., :, 0]
            w1 = np.sqrt(np.maximum(-mu[..., 0], 0.0))[..., None] * V[..., :, 1]
            # orient both tangent directions into the ellipse, keep the one with the origin on its left
            inward = lambda q: q * -np.sign(np.einsum("...i,...i", Ao * p, q))[..., None]
            qa, qb = inward(w1 + w0), inward(w1 - w0)
            cross = p[..., 0] * qa[..., 1] - p[..., 1] * qa[..., 0]
            q = np.where((cross > 0)[..., None], qa, qb)
            q = q / np.linalg.norm(q, axis=-1)[..., None]
            s = -2 * np.einsum("...i,...i", Ao * p, q) / np.einsum("...i,...i", Ao * q, q)
            Q = p + s[..., None] * q
            theta = np.arctan2(Q[..., 1] / b, Q[..., 0] / a)
            x = curve.arc(np.mod(theta, 2 * math.pi))
            return t + np.mod(x - t, P)

        h = 1e-4 * P
        return cls(curve, partner, lambda t: _d1(partner, np.asarray(t, float), h), f"confocal {lam:.12g}")

    @classmethod
    def from_orbit(cls, curve, orbit):
        """Circle map reconstructed from one long orbit on an invariant curve (periodic PCHIP)."""
        P = curve.length
        x = np.mod(orbit.vertices[:-1], P)
        g = np.diff(orbit.vertices)
        order = np.argsort(x)
        x, g = x[order], g[order]
        keep = np.concatenate([[True], np.diff(x) > 1e-12 * P])
        x, g = x[keep], g[keep]
        xs = np.concatenate([x[-3:] - P, x, x[:3] + P])
        gs = np.concatenate([g[-3:], g, g[:3]])
        spline = PchipInterpolator(xs, gs)
        dspline = spline.derivative()

        def partner(t):
            t = np.asarray(t, float)
            return t + spline(np.mod(t, P))

        return cls(curve, partner, lambda t: 1.0 + dspline(np.mod(np.asarray(t, float), P)), "orbit")


@dataclass
class StrictionProfile:
    """Per-sample striction data.  ``fraction`` is s*/L, the striction point's
    position along the chord; ``deviation`` is the angle (radians) between the
    ruling and the tangent of the striction curve."""

    t: np.ndarray
    point: np.ndarray
    fraction: np.ndarray
    deviation: np.ndarray
    noncylindricity: np.ndarray
    cylindrical: np.ndarray


def _striction(family, t):
    curve = family.curve
    t = np.asarray(t, float)
    f = family.partner(t)
    fp = family.dpartner(t)
    J0 = curve.jets(t, 1)
    J1 = curve.jets(f, 1)
    R = J1[0] - J0[0]
    Rd = J1[1] * fp[..., None] - J0[1]
    RR = np.einsum("...i,...i", R, R)
    RdRd = np.einsum("...i,...i", Rd, Rd)
    RRd = np.einsum("...i,...i", R, Rd)
    gram = RR * RdRd - RRd**2
    num = np.einsum("...i,...i", R, J0[1]) * RRd - RR * np.einsum("...i,...i", Rd, J0[1])
    with np.errstate(invalid="ignore", divide="ignore"):
        s = num / gram
    return s, J0[0] + s[..., None] * R, R, np.sqrt(np.maximum(gram, 0.0))


def striction_point(family, t):
    """(s*/L, striction point) at parameters t."""
    s, pt, _, _ = _striction(family, t)
    return s, pt


def _deviation(family, t, h):
    def delta(z):
        return _striction(family, z)[1]

    dd = _d1(delta, t, h)
    _, _, R, _ = _striction(family, t)
    u = R / np.linalg.norm(R, axis=-1)[..., None]
    along = np.einsum("...i,...i", u, dd)
    # perpendicular part taken directly; the Gram form would lose half the digits
    perp = np.linalg.norm(dd - along[..., None] * u, axis=-1)
    return np.arctan2(perp, np.abs(along))


def striction_profile(family, t=None, samples=64, h0=None, max_refine=8):
    """Striction fraction, non-cylindricity and developability deviation at samples.

    The deviation uses a fourth-order difference of the striction curve; the
    step is halved until the deviation changes by less than 1% (or by less
    than 1e-12 absolutely).
    """
    curve = family.curve
    if t is None:
        t = np.arange(samples) * (curve.length / samples)
    t = np.asarray(t, float)
    s, pt, R, nc = _striction(family, t)
    h = h0 or 1e-2 * curve.length
    dev = _deviation(family, t, h)
    for _ in range(max_refine):
        h /= 2
        new = _deviation(family, t, h)
        change = np.abs(new - dev)
        dev = new
        if np.all((change <= 0.01 * np.abs(new)) | (change < 1e-12)):
            break
    cyl = nc < CYLINDRICAL_TOL
    return StrictionProfile(t, pt, s, np.where(cyl, np.nan, dev), nc, cyl)


def gutkin_roots(m, samples_per_branch=2000):
    """Roots of tan(m d/2) = m tan(d/2) in (0, 2 pi), excluding pole crossings.

    Each continuity branch between consecutive poles of either tangent is
    scanned for sign changes, each polished by Brent's method.
    """
    if not isinstance(m, (int, np.integer)) or m < 2:
        raise SpecError("m", "must be an integer >= 2")
    poles = sorted({(2 * j + 1) * math.pi / m for j in range(m)} | {math.pi})
    edges = [0.0] + poles + [2 * math.pi]
    g = lambda d: np.tan(m * d / 2) - m * np.tan(d / 2)
    roots = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        pad = 1e-9 * (hi - lo)
        d = np.linspace(lo + pad, hi - pad, samples_per_branch)
        v = g(d)
        for i in np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)[0]:
            r = brentq(g, d[i], d[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            if abs(g(r)) < 1e-8 * (1 + abs(np.tan(m * r / 2))):
                roots.append(r)
    return np.array(sorted(roots))


def string_invariant(family, t=None, samples=64, h=None):
    """Max residual of (a1 + a2)' = delta2' . v2 - delta1' . v1 along the family.

    With the chord starting at t and the reflection at gamma(f(t)): delta1 is
    the striction point of chord t, v1 its unit direction (into the reflection
    point), a1 the distance from delta1 to gamma(f(t)); delta2, v2, a2 are the
    same for the outgoing chord f(t).  Derivatives are fourth-order central
    differences in t.  Near-cylindrical samples are dropped.
    """
    curve = family.curve
    if t is None:
        t = np.arange(samples) * (curve.length / samples)
    t = np.asarray(t, float)
    h = h or 1e-4 * curve.length

    def pieces(z):
        s1, d1, R1, _ = _striction(family, z)
        fz = family.partner(z)
        s2, d2, R2, _ = _striction(family, fz)
        L1 = np.linalg.norm(R1, axis=-1)
        L2 = np.linalg.norm(R2, axis=-1)
        return (1 - s1) * L1 + s2 * L2, d1, d2, R1 / L1[..., None], R2 / L2[..., None]

    a, _, _, v1, v2 = pieces(t)
    da = _d1(lambda z: pieces(z)[0], t, h)
    dd1 = _d1(lambda z: pieces(z)[1], t, h)
    dd2 = _d1(lambda z: pieces(z)[2], t, h)
    rhs = np.einsum("...i,...i", dd2, v2) - np.einsum("...i,...i", dd1, v1)
    resid = np.abs(da - rhs)
    _, _, _, nc = _striction(family, t)
    ok = nc > CYLINDRICAL_TOL
    return float(resid[ok].max())
