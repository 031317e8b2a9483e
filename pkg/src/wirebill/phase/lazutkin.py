"""Lazutkin coordinates u = int k^(2/3) dx, v = k^(-1/3) sin(alpha/2)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import chebyshev as C

from ..chords import chord_frame
from ..curves import _CHEB_MAT, _CHEB_NODES, _Piecewise
from ..errors import NicenessError
from ..reflection import iterate_orbit, solve_alpha

_GL_Z, _GL_W = np.polynomial.legendre.leggauss(20)


class LazutkinChart:
    """Cumulative map u(x) with period U, its inverse, and v(x, alpha)."""

    def __init__(self, curve, panels=None):
        self.curve = curve
        P = curve.length
        n = panels or 256
        xs_min = np.linspace(0, P, 8 * n, endpoint=False)
        if curve.curvature(xs_min).min() < 1e-8:
            raise NicenessError("curvature vanishes; k^(-1/3) is undefined")
        for attempt in range(5):
            if attempt:
                n *= 2
            h = P / n
            xn = np.arange(n)[:, None] * h + (_CHEB_NODES + 1.0) * (h / 2)
            w = self.density(xn)
            c = w @ _CHEB_MAT.T
            if np.abs(c[:, -4:]).max() <= 1e-15 * np.abs(c[:, 0]).max():
                break
        ci = C.chebint(c, lbnd=-1, scl=h / 2, axis=1)
        self._S = np.concatenate([[0.0], np.cumsum(ci.sum(axis=1))])
        self._fwd = _Piecewise(0.0, h, ci)
        self.U = float(self._S[-1])

    def density(self, x):
        return self.curve.curvature(x) ** (2.0 / 3.0)

    def u(self, x):
        """Lifted u(x); u(x + |gamma|) = u(x) + U."""
        x = np.asarray(x, float)
        P = self.curve.length
        k = np.floor(x / P)
        r = x - k * P
        idx = self._fwd.panel(r)
        return k * self.U + self._S[idx] + self._fwd(r, idx)

    def u_between(self, x, y, panels=4):
        """u(y) - u(x) by direct Gauss-Legendre quadrature (accurate for y close to x)."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        h = (y - x) / panels
        total = np.zeros(x.shape)
        for j in range(panels):
            a = x + j * h
            nodes = a[..., None] + 0.5 * h[..., None] * (_GL_Z + 1.0)
            total = total + 0.5 * h * (self.density(nodes) @ _GL_W)
        return total

    def x_of_u(self, u):
        """Inverse of the lifted map by safeguarded Newton."""
        u = np.asarray(u, float)
        P = self.curve.length
        k = np.floor(u / self.U)
        r = u - k * self.U
        x = np.interp(r, self._S, np.linspace(0, P, len(self._S)))
        for _ in range(60):
            dx = (self.u(x) - r) / self.density(x)
            x = x - dx
            if np.abs(dx).max() < 1e-15 * P:
                break
        return k * P + x

    def v(self, x, alpha):
        return self.curve.curvature(x) ** (-1.0 / 3.0) * np.sin(np.asarray(alpha) / 2)

    def alpha_of_v(self, x, v):
        return 2 * np.arcsin(np.asarray(v) * self.curve.curvature(x) ** (1.0 / 3.0))


def lazutkin_chart(curve):
    key = ("lazutkin",)
    if key not in curve._cache:
        curve._cache[key] = LazutkinChart(curve)
    return curve._cache[key]


@dataclass
class LazutkinFit:
    """Power-law fit of the one-step residuals against v.

    ``res_u[i]`` and ``res_v[i]`` are the maxima over the sampled base points
    at ``v[i]``; entries at the round-off floor are excluded from the fit.
    """

    v: np.ndarray
    res_u: np.ndarray
    res_v: np.ndarray
    used_u: np.ndarray
    used_v: np.ndarray
    e_u: float
    e_v: float


def _slope(v, r, used):
    if used.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(v[used]), np.log(r[used]), 1)[0])


def lazutkin_residuals(curve, v_values=None, samples=16, seed=0):
    """One reflection step from (x, v) for each v; fitted exponents of the residuals.

    With u1 = u(y), v1 = k(y)^(-1/3) sin(beta/2) after the step, the residuals
    are |u1 - u - 4v| and |v1 - v|.  ``samples`` base points x are drawn once
    and shared by all v values so the fit sees a single envelope.
    """
    chart = lazutkin_chart(curve)
    if v_values is None:
        v_values = 2.0 ** -np.arange(3, 13)
    v_values = np.asarray(v_values, float)
    rng = np.random.default_rng(seed)
    xs = rng.random(samples) * curve.length
    eps = np.finfo(float).eps
    res_u = np.empty(v_values.size)
    res_v = np.empty(v_values.size)
    floor_u = np.empty(v_values.size)
    floor_v = np.empty(v_values.size)
    for i, v in enumerate(v_values):
        alpha = chart.alpha_of_v(xs, v)
        y = xs + solve_alpha(curve, xs, alpha)
        beta = chord_frame(curve, xs, y).beta
        du = chart.u_between(xs, y) - 4 * v
        dv = chart.v(y, beta) - v
        res_u[i] = np.abs(du).max()
        res_v[i] = np.abs(dv).max()
        # angles near glancing carry an absolute error of a few eps
        floor_u[i] = 10 * eps
        floor_v[i] = 10 * eps
    used_u = res_u > floor_u
    used_v = res_v > floor_v
    return LazutkinFit(v_values, res_u, res_v, used_u, used_v, _slope(v_values, res_u, used_u), _slope(v_values, res_v, used_v))


@dataclass
class RotationNumber:
    value: float
    rational: tuple | None
    max_denominator: int


def rotation_number(orbit, tol=1e-9, max_denominator=10**6):
    """Mean advance per step in units of the period, with rational detection.

    Denominators are capped by the orbit length as well: a q-periodic pattern
    cannot be identified from fewer than q steps.
    """
    n = orbit.steps + 1
    if n < 100:
        raise ValueError("orbit too short for a rotation number (need >= 100 steps)")
    rho = float((orbit.vertices[-1] - orbit.vertices[0]) / (orbit.period * (len(orbit.vertices) - 1)))
    qmax = int(min(max_denominator, n))
    fr = Fraction(rho).limit_denominator(qmax)
    rational = (fr.numerator, fr.denominator) if abs(rho - fr.numerator / fr.denominator) < tol else None
    return RotationNumber(rho, rational, qmax)


@dataclass
class BandResult:
    v0: np.ndarray
    deviation: np.ndarray
    exponent: float
    steps: int


def band_confinement(curve, v0_values=(0.05, 0.025, 0.0125), steps=10_000, x0=0.0):
    """sup_n |v_n - v0| for orbits started at each v0, and its log-log slope."""
    chart = lazutkin_chart(curve)
    dev = []
    for v0 in v0_values:
        a0 = float(chart.alpha_of_v(x0, v0))
        y0 = x0 + float(solve_alpha(curve, x0, a0))
        orb = iterate_orbit(curve, x0, y0, steps)
        v = chart.v(orb.vertices[:-1], orb.alpha)
        dev.append(np.abs(v - v0).max())
    dev = np.array(dev)
    v0 = np.asarray(v0_values, float)
    slope = float(np.polyfit(np.log(v0), np.log(dev), 1)[0])
    return BandResult(v0, dev, slope, steps)
