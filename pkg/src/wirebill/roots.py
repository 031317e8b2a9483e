"""Scalar root-finding helpers shared by the reflection and caustic code."""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError


def newton_increasing(fun, lo, hi, x0, xtol, maxiter=100):
    """Vectorized safeguarded Newton for increasing functions.

    ``fun(x)`` returns ``(f, df)``; each component has exactly one root in
    ``(lo, hi)`` with ``f(lo) < 0 < f(hi)``.  A Newton step leaving the
    current bracket is replaced by bisection.
    """
    lo = np.array(lo, float, copy=True)
    hi = np.array(hi, float, copy=True)
    x = np.clip(np.array(x0, float, copy=True), lo, hi)
    x = np.where((x <= lo) | (x >= hi), 0.5 * (lo + hi), x)
    active = np.ones(x.shape, bool)
    for _ in range(maxiter):
        f, df = fun(x)
        lo = np.where(active & (f < 0), x, lo)
        hi = np.where(active & (f > 0), x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / df
        xn = x - step
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        moved = np.abs(xn - x)
        x = np.where(active, xn, x)
        active = active & (moved > xtol) & (f != 0)
        if not active.any():
            return x
    raise ConvergenceError("newton_increasing", f"no convergence after {maxiter} iterations")


def scan_roots(g, a, b, cells, xtol=1e-15, zero_tol=1e-12):
    """All roots of scalar ``g`` on [a, b] found by sign changes on a grid.

    ``g`` must accept arrays.  Nodes where |g| <= zero_tol that are local
    minima of |g| count as roots as well.  Returns a sorted array.
    """
    t = np.linspace(a, b, cells + 1)
    v = g(t)
    roots = []
    s = np.sign(v)
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        roots.append(brentq(lambda z: float(g(np.array([z]))[0]), t[i], t[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))
    av = np.abs(v)
    for i in np.nonzero(av <= zero_tol)[0]:
        left = av[i - 1] if i > 0 else np.inf
        right = av[i + 1] if i < cells else np.inf
        if av[i] <= left and av[i] <= right:
            roots.append(t[i])
    if not roots:
        return np.empty(0)
    roots = np.sort(np.asarray(roots))
    keep = np.concatenate([[True], np.diff(roots) > 10 * xtol + 1e-12 * (b - a)])
    return roots[keep]
