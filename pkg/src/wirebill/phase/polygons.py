"""Longest inscribed polygons: chains on an arc and closed periodic orbits.

A critical point of the total length in the interior vertices is exactly a
billiard trajectory: the partial derivative in x_i is
cos(beta(x_{i-1}, x_i)) - cos(alpha(x_i, x_{i+1})).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import minimize, minimize_scalar

from ..chords import chord_frame
from ..errors import ConvergenceError, NumericalError
from .lazutkin import lazutkin_chart


@dataclass
class Polygon:
    """Vertices of an inscribed chain (``closed=False``) or closed polygon.

    For a chain, ``vertices`` includes both fixed endpoints.  For a closed
    polygon it lists q vertices; the last chord returns to
    ``vertices[0] + winding * |gamma|``.
    """

    vertices: np.ndarray
    total_length: float
    residuals: np.ndarray
    closed: bool = False
    winding: int = 0
    iterations: int = 0

    @property
    def n(self):
        return len(self.vertices) - 2 if not self.closed else len(self.vertices)


def _gap_check(curve, x):
    gaps = np.diff(x)
    if gaps.min() <= 0:
        return False
    return True


def _chain_terms(curve, x):
    f = chord_frame(curve, x[:-1], x[1:])
    grad = f.cos_beta[:-1] - f.cos_alpha[1:]
    diag = f.L22[:-1] + f.L11[1:]
    off = f.L12[1:-1]
    return f, grad, diag, off


def _equal_measure(curve, a, b, n):
    """n interior points splitting [a, b] into equal k^(2/3) measure (equal arc length if k vanishes)."""
    try:
        chart = lazutkin_chart(curve)
    except Exception:
        return np.linspace(a, b, n + 2)
    ua, ub = chart.u(a), chart.u(b)
    inner = chart.x_of_u(np.linspace(ua, ub, n + 2)[1:-1])
    return np.concatenate([[a], inner, [b]])


def _ascent_sweeps(curve, x, tol, max_sweeps):
    """Cyclic coordinate ascent: each vertex maximizes its two adjacent chords."""
    for sweep in range(max_sweeps):
        moved = 0.0
        for i in range(1, len(x) - 1):
            lo, hi = x[i - 1], x[i + 1]

            def neg(t):
                f = chord_frame(curve, np.array([lo, t]), np.array([t, hi]))
                return -float(f.L.sum())

            res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10 * (hi - lo)})
            t = res.x
            for _ in range(3):  # Newton polish on the local first-order condition
                f = chord_frame(curve, np.array([lo, t]), np.array([t, hi]))
                g = f.cos_beta[0] - f.cos_alpha[1]
                h = f.L22[0] + f.L11[1]
                if h >= 0:
                    break
                tn = t - g / h
                if not lo < tn < hi:
                    break
                t = tn
            moved = max(moved, abs(t - x[i]))
            x[i] = t
        if moved < tol:
            return x, sweep + 1
    raise ConvergenceError("longest_inscribed_polygon", f"coordinate ascent did not converge in {max_sweeps} sweeps")


def _newton_chain(curve, x, tol, max_iter):
    n = len(x) - 2
    f, g, d, o = _chain_terms(curve, x)
    total = float(f.L.sum())
    for it in range(max_iter):
        if np.abs(g).max() < tol:
            return x, it
        ab = np.zeros((3, n))
        ab[0, 1:] = o
        ab[1] = d
        ab[2, :-1] = o
        step = -solve_banded((1, 1), ab, g)
        t = 1.0
        for _ in range(60):
            xn = x.copy()
            xn[1:-1] += t * step
            if _gap_check(curve, xn):
                fn, gn, dn, on = _chain_terms(curve, xn)
                tn = float(fn.L.sum())
                # accept if length grows, or if the gradient shrinks once length is flat to round-off
                if tn > total or (tn >= total - 1e-14 * abs(total) and np.abs(gn).max() < np.abs(g).max()):
                    break
            t *= 0.5
        else:
            raise ConvergenceError("longest_inscribed_polygon", "line search failed")
        x, f, g, d, o, total = xn, fn, gn, dn, on, tn
    if np.abs(g).max() < tol:
        return x, max_iter
    raise ConvergenceError("longest_inscribed_polygon", f"Newton did not converge in {max_iter} iterations")


def longest_inscribed_polygon(curve, x_start, x_end, n, method="newton", tol=1e-13, max_iter=200, init=None):
    """Longest chain x_start = x_0 < x_1 < ... < x_n < x_{n+1} = x_end.

    ``method="newton"`` runs Newton on the tridiagonal Hessian of the length
    (L22 + L11 on the diagonal, L12 off it) with step halving that keeps the
    vertices ordered and the length non-decreasing.  ``method="ascent"`` runs
    cyclic coordinate ascent and finishes with the same Newton iteration.
    Both start from equal k^(2/3)-measure spacing.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not x_end > x_start:
        raise ValueError("x_end must exceed x_start")
    if curve.closed and x_end - x_start >= curve.length:
        raise ValueError("arc must be shorter than the curve")
    x = _equal_measure(curve, float(x_start), float(x_end), n) if init is None else np.asarray(init, float).copy()
    its = 0
    if method == "ascent":
        x, its = _ascent_sweeps(curve, x, 1e-9 * (x_end - x_start), max_iter * 50)
    elif method != "newton":
        raise ValueError(f"unknown method {method!r}")
    x, it2 = _newton_chain(curve, x, tol, max_iter)
    f, g, _, _ = _chain_terms(curve, x)
    return Polygon(x, float(f.L.sum()), np.abs(g), closed=False, iterations=its + it2)


def _neville(h, values):
    """Value at h = 0 of the interpolating polynomial through (h_i, values_i), plus the tableau diagonal."""
    h = np.asarray(h, float)
    T = [np.asarray(values, float).copy()]
    for k in range(1, len(h)):
        prev = T[-1]
        nxt = (h[k:] * prev[:-1] - h[:-k] * prev[1:]) / (h[k:] - h[:-k])
        T.append(nxt)
    diag = np.array([t[-1] for t in T])
    return float(T[-1][0]), diag


@dataclass
class DeficitResult:
    """Scaled deficits N^2 (l - l_n) with N = n + 1 chords, and their extrapolation.

    ``reference_cubed`` is (int k^(2/3) dx)^3 / 24 over the arc; ``reference_printed``
    is the same integral without the cube, kept for comparison.
    """

    n: np.ndarray
    scaled: np.ndarray
    limit: float
    extrapolation_steps: np.ndarray
    reference_cubed: float
    reference_printed: float
    arc_length: float
    polygons: list = field(default_factory=list, repr=False)


def deficit_limit(curve, x_start, x_end, n_list=(32, 64, 128, 256), method="newton"):
    """Extrapolated limit of N^2 (l - l_n) as n -> infinity.

    The error model is c0 + c1/N^2 + c2/N^4 + ...; the limit is the Neville
    extrapolation to 1/N^2 = 0 through all points.
    """
    n_list = np.asarray(sorted(n_list), int)
    arc = float(x_end - x_start)
    scaled, polys = [], []
    for n in n_list:
        try:
            poly = longest_inscribed_polygon(curve, x_start, x_end, int(n), method=method)
        except ConvergenceError as exc:
            raise NumericalError("deficit_limit", f"n={n}: {exc}") from exc
        polys.append(poly)
        # sum of per-chord deficits keeps precision when l - l_n is tiny
        x = poly.vertices
        f = chord_frame(curve, x[:-1], x[1:])
        deficit = float(np.sum(np.diff(x) - f.L))
        scaled.append((n + 1) ** 2 * deficit)
    scaled = np.array(scaled)
    h = 1.0 / (n_list + 1.0) ** 2
    limit, diag = _neville(h, scaled)
    chart = None
    try:
        chart = lazutkin_chart(curve)
        I = float(chart.u_between(x_start, x_end, panels=64))
    except Exception:
        xs = np.linspace(x_start, x_end, 4097)
        I = float(np.trapz(curve.curvature(xs) ** (2 / 3), xs))
    return DeficitResult(n_list, scaled, limit, np.abs(np.diff(diag)), I**3 / 24, I / 24, arc, polys)


def impact_discrepancy(polygon, curve):
    """Kolmogorov distance between the interior vertices and the k^(2/3) dx law on the arc."""
    x = polygon.vertices
    chart = lazutkin_chart(curve)
    total = chart.u_between(x[0], x[-1], panels=64)
    inner = x[1:-1]
    G = np.array([chart.u_between(x[0], t, panels=16) for t in inner]) / total
    n = inner.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - G), np.max(G - (i - 1) / n)))


def _cyclic_terms(curve, x, winding):
    P = curve.length
    q = len(x)
    xe = np.concatenate([x, [x[0] + winding * P]])
    f = chord_frame(curve, xe[:-1], xe[1:])
    # vertex i: incoming chord i-1 (cyclic), outgoing chord i
    grad = np.roll(f.cos_beta, 1) - f.cos_alpha
    H = np.zeros((q, q))
    idx = np.arange(q)
    H[idx, idx] = np.roll(f.L22, 1) + f.L11
    H[idx, (idx + 1) % q] += f.L12
    H[(idx + 1) % q, idx] += f.L12
    return f, grad, H


def periodic_orbit_search(curve, p, q, x0=0.0, tol=1e-12, max_iter=100):
    """Closed q-gon of winding p maximizing the perimeter.

    BFGS on the perimeter from an equally spaced start, then Newton on the
    cyclic Hessian with least-squares steps (the Hessian is singular when the
    orbit comes in a continuous family, as on the circle).
    """
    if q < 2 or p < 1:
        raise ValueError("need q >= 2 and p >= 1")
    P = curve.length
    x = float(x0) + np.arange(q) * (p * P / q)

    def neg(z):
        f, g, _ = _cyclic_terms(curve, z, p)
        return -float(f.L.sum()), -g

    def ordered(z):
        gaps = np.diff(np.concatenate([z, [z[0] + p * P]]))
        return gaps.min() > 0

    res = minimize(neg, x, jac=True, method="BFGS", options={"gtol": 1e-9, "maxiter": 500})
    if ordered(res.x):
        x = res.x
    f, g, H = _cyclic_terms(curve, x, p)
    total = float(f.L.sum())
    for it in range(max_iter):
        if np.abs(g).max() < tol:
            break
        step = -np.linalg.lstsq(H, g, rcond=1e-12)[0]
        t = 1.0
        for _ in range(60):
            xn = x + t * step
            if ordered(xn):
                fn, gn, Hn = _cyclic_terms(curve, xn, p)
                tn = float(fn.L.sum())
                if tn > total or (tn >= total - 1e-14 * total and np.abs(gn).max() < np.abs(g).max()):
                    break
            t *= 0.5
        else:
            raise ConvergenceError("periodic_orbit_search", "line search failed")
        x, f, g, H, total = xn, fn, gn, Hn, tn
    else:
        if np.abs(g).max() >= tol:
            raise ConvergenceError("periodic_orbit_search", f"no convergence in {max_iter} iterations")
    gaps = np.diff(np.concatenate([x, [x[0] + p * P]]))
    if gaps.min() < 1e-6 * P:
        raise NumericalError("periodic_orbit_search", f"polygon collapsed (min gap {gaps.min():.3g}); winding {p} not realized")
    return Polygon(x, total, np.abs(g), closed=True, winding=p, iterations=it)
