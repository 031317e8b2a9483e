"""The wire billiard map: reflection solver, orbits, niceness report, area check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .chords import _angle, chord_frame, chord_tangents, chord_vector, frame_from_jets, separation
from .errors import ConvergenceError, NicenessError, NumericalError, WireBilliardError
from .roots import newton_increasing

EXCLUSION = 1e-4  # root exclusion zone around y, relative to |gamma|
MIN_CELLS = 1024
WITNESS_TOL = 1e-7
CURVATURE_FLOOR = 1e-6


def _require_closed(curve):
    if not curve.closed:
        raise ValueError("billiard dynamics needs a closed curve")


def _first_order(curve, y, z):
    """alpha(y, z), beta(y, z) and d alpha / dz = L12 / sin(alpha) from tangents only."""
    R, a, b = chord_tangents(curve, y, z)
    L = np.linalg.norm(R, axis=-1)
    u = R / L[..., None]
    a_perp = a - np.einsum("...i,...i", a, u)[..., None] * u
    b_perp = b - np.einsum("...i,...i", b, u)[..., None] * u
    rate = -np.einsum("...i,...i", a_perp, b_perp) / (L * np.linalg.norm(a_perp, axis=-1))
    return _angle(a, u), _angle(b, u), rate


def solve_alpha(curve, y, target, guess=None, return_beta=False):
    """Forward separations d in (0, |gamma|) with alpha(y, y + d) = target.

    Relies on alpha(y, y + d) increasing from 0 to pi, which holds on nice
    curves.  Vectorized in ``y`` and ``target``.  With ``return_beta`` the
    angle beta(y, y + d) at the solution is returned as well.
    """
    _require_closed(curve)
    y, target = np.broadcast_arrays(np.asarray(y, float), np.asarray(target, float))
    if np.any((target <= 0) | (target >= math.pi)):
        raise ValueError("target angle must lie in (0, pi)")
    P = curve.length
    if guess is None:
        guess = target / math.pi * P
    eps = 1e-12 * P

    def fun(d):
        a, _, rate = _first_order(curve, y, y + d)
        return a - target, rate

    d = newton_increasing(fun, np.full(y.shape, eps), np.full(y.shape, P - eps), guess, xtol=1e-14 * P)
    if return_beta:
        return d, _first_order(curve, y, y + d)[1]
    return d


def _cos_alpha(curve, y, z, precise=True):
    Jy = curve.jets(y, 1)
    if precise:
        R = chord_vector(curve, y, z, Jy)
    else:
        R = curve.position(z) - Jy[0]
    return np.einsum("...i,...i", Jy[1], R) / np.linalg.norm(R, axis=-1)


def all_successors(curve, x, y, cells=MIN_CELLS):
    """Every z (lifted forward from y) with cos(alpha(y, z)) = cos(beta(x, y)).

    Sign changes of g(z) = cos(beta(x,y)) - cos(alpha(y,z)) are bracketed on a
    grid of ``cells`` cells that skips a 1e-4 |gamma| zone around y, then
    polished by Brent's method.  Sorted by forward distance from y.
    """
    _require_closed(curve)
    cells = max(int(cells), MIN_CELLS)
    P = curve.length
    cb = float(chord_frame(curve, x, y).cos_beta)
    ex = EXCLUSION * P
    Jy = curve.jets(np.array([y]), 1)[:, 0]
    d = np.linspace(ex, P - ex, cells + 1)
    R = curve.position(y + d) - Jy[0]
    g = cb - (R @ Jy[1]) / np.linalg.norm(R, axis=-1)

    def g_precise(s):
        return float(cb - _cos_alpha(curve, np.array([y]), np.array([y + s]))[0])

    roots = []
    sgn = np.sign(g)
    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
        a, b = d[i], d[i + 1]
        ga, gb = g_precise(a), g_precise(b)
        if ga * gb > 0:
            # the fast scan and the precise evaluation disagree on this cell
            roots.append(a if abs(ga) < abs(gb) else b)
            continue
        roots.append(brentq(g_precise, a, b, xtol=1e-15 * P, rtol=4 * np.finfo(float).eps))
    for i in np.nonzero(np.abs(g) <= 1e-12)[0]:
        roots.append(d[i])
    roots = np.unique(np.asarray(roots, float))
    if roots.size:
        resid = np.array([abs(g_precise(r)) for r in roots])
        roots = roots[resid < 1e-10]
        keep = np.concatenate([[True], np.diff(roots) > 1e-12 * P])
        roots = roots[keep]
    return y + roots


def reflect(curve, x, y, mode="nice", cells=MIN_CELLS):
    """Successor vertices z of the chord (x, y), lifted so that z > y.

    ``mode="nice"`` returns a one-element array; it needs the curve to pass
    :func:`check_nice` (the report is cached).  ``mode="all-roots"`` returns
    every solution, possibly none.
    """
    if mode == "all-roots":
        return all_successors(curve, x, y, cells)
    if mode != "nice":
        raise ValueError(f"unknown mode {mode!r}")
    require_nice(curve)
    beta = chord_frame(curve, x, y).beta
    d = solve_alpha(curve, y, beta)
    return np.atleast_1d(y + d)


@dataclass
class Orbit:
    """Vertices x_0, x_1, ... (lifted, non-decreasing) of a billiard trajectory.

    Phase point k is the chord (x_k, x_{k+1}); ``alpha[k]``, ``beta[k]`` and
    ``length[k]`` describe it.  ``residual[k]`` is |cos beta_{k-1} - cos alpha_k|
    (0 for k = 0).
    """

    vertices: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    length: np.ndarray
    residual: np.ndarray
    period: float
    flags: list = field(default_factory=list)
    stopped_early: bool = False

    @property
    def steps(self):
        return len(self.vertices) - 2

    def phase_points(self):
        return np.column_stack([self.vertices[:-1], self.vertices[1:]])


def _orbit_from_vertices(curve, verts, flags, stopped):
    f = chord_frame(curve, verts[:-1], verts[1:])
    res = np.zeros(len(verts) - 1)
    res[1:] = np.abs(f.cos_beta[:-1] - f.cos_alpha[1:])
    return Orbit(verts, f.alpha, f.beta, f.L, res, curve.length, flags, stopped)


def start_from_angle(curve, x0, alpha0):
    """Second vertex y0 > x0 of the chord leaving gamma(x0) at angle alpha0 (nice curves)."""
    return float(x0 + solve_alpha(curve, x0, alpha0))


def iterate_orbit(curve, x0, y0, steps, mode="nice", cells=MIN_CELLS):
    """Orbit of the chord (x0, y0) over ``steps`` reflections.

    In all-roots mode a step with several successors takes the one whose
    chord length is closest to the previous chord and is flagged; a step
    with no successor stops the orbit early.
    """
    _require_closed(curve)
    P = curve.length
    y0 = x0 + (np.mod(y0 - x0, P) or P)
    verts = [float(x0), float(y0)]
    flags = []
    stopped = False
    if mode == "nice":
        require_nice(curve)
        # work with y reduced to [0, P) and count windings separately, so the
        # lifted coordinate never costs precision in the chord evaluations
        wind, y = divmod(float(y0), P)
        beta = float(_first_order(curve, x0, y0)[1])
        d = None
        for k in range(steps):
            try:
                d, beta = solve_alpha(curve, y, beta, guess=d, return_beta=True)
            except ConvergenceError as exc:
                raise NumericalError("reflection.iterate_orbit", f"step {k}: {exc}") from exc
            d, beta = float(d), float(beta)
            z = y + d
            if z >= P:
                z -= P
                wind += 1
            verts.append(wind * P + z)
            y = z
    elif mode == "all-roots":
        prev_len = float(chord_frame(curve, x0, y0).L)
        for k in range(steps):
            x, y = verts[-2], verts[-1]
            zs = all_successors(curve, x, y, cells)
            if zs.size == 0:
                flags.append((k, "no successor"))
                stopped = True
                break
            if zs.size > 1:
                lens = chord_frame(curve, np.full(zs.shape, y), zs).L
                z = float(zs[np.argmin(np.abs(lens - prev_len))])
                flags.append((k, f"{zs.size} successors"))
            else:
                z = float(zs[0])
            prev_len = float(chord_frame(curve, y, z).L)
            verts.append(z)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _orbit_from_vertices(curve, np.array(verts), flags, stopped)


# ---------------------------------------------------------------------------


@dataclass
class NicenessReport:
    grid: int
    margin: float
    min_curvature: float
    argmin_curvature: float
    min_cos_phi: float
    min_twist: float
    min_transversality: float
    witnesses: list
    condition1: bool
    condition2: bool
    condition3: bool
    twist: bool

    @property
    def passed(self):
        return self.condition1 and self.condition2 and self.condition3 and self.twist

    def to_dict(self):
        out = asdict(self)
        out["passed"] = self.passed
        return out


def _min_curvature(curve, n=4096):
    xs = np.arange(n) * (curve.length / n)
    k = curve.curvature(xs)
    i = int(np.argmin(k))
    h = curve.length / n
    res = minimize_scalar(
        lambda s: float(curve.curvature(s)), bounds=(xs[i] - h, xs[i] + h), method="bounded", options={"xatol": 1e-12}
    )
    if res.fun < k[i]:
        return float(res.fun), float(curve.wrap(res.x))
    return float(k[i]), float(xs[i])


def _third_intersections(curve, xs, pos, fine):
    """Points of the curve on grid chord lines, away from the chord's endpoints."""
    P = curve.length
    n = len(xs)
    m = len(fine)
    h = P / m
    fpos = curve.position(fine)
    witnesses = []
    excl = 3 * h + 1e-9 * P
    for i in range(n):
        j = np.arange(i + 1, n)
        R = pos[j] - pos[i]
        u = R / np.linalg.norm(R, axis=1)[:, None]
        w = fpos[None, :, :] - pos[i]
        proj = np.einsum("jmk,jk->jm", w, u)
        dist2 = np.einsum("jmk,jmk->jm", w, w) - proj**2
        dist = np.sqrt(np.maximum(dist2, 0.0))
        far = (separation(curve, fine[None, :], xs[i]) > excl) & (separation(curve, fine[None, :], xs[j][:, None]) > excl)
        left = np.roll(dist, 1, axis=1)
        right = np.roll(dist, -1, axis=1)
        cand = far & (dist <= left) & (dist <= right) & (dist < 2 * h)
        for a, b in zip(*np.nonzero(cand)):
            p0, uu = pos[i], u[a]

            def line_dist(t):
                q = curve.position(t) - p0
                return float(np.linalg.norm(q - np.dot(q, uu) * uu))

            res = minimize_scalar(line_dist, bounds=(fine[b] - h, fine[b] + h), method="bounded", options={"xatol": 1e-13})
            t = float(curve.wrap(res.x))
            if res.fun < WITNESS_TOL and separation(curve, t, xs[i]) > excl and separation(curve, t, xs[j[a]]) > excl:
                witnesses.append((float(xs[i]), float(xs[j[a]]), t, float(res.fun)))
    return witnesses


def check_nice(curve, grid=128, margin=0.01, use_cache=True) -> NicenessReport:
    """Numerical check of the three niceness conditions and the twist sign.

    Condition 1: no grid chord's line meets the curve at a third point, and
    chords cross the curve transversally.  Condition 2: curvature stays above
    1e-6.  Condition 3: cos(phi) > margin for every grid chord (diagonal
    limit 1).  Twist: L * L12 > 0 on every grid chord.
    """
    _require_closed(curve)
    key = ("nice", grid, margin)
    if use_cache and key in curve._cache:
        return curve._cache[key]
    if grid < 128:
        raise ValueError("grid must be >= 128")
    xs = np.arange(grid) * (curve.length / grid)
    J = curve.jets(xs, 2)
    i, j = np.triu_indices(grid, 1)
    f = frame_from_jets(xs[i], xs[j], J[:, i], J[:, j], separation(curve, xs[i], xs[j]) / curve.length)
    twist = f.L * f.L12
    transversal = float(np.min(np.minimum(f.sin_alpha, f.sin_beta) / f.L))
    min_cphi = float(np.nanmin(f.cos_phi)) if np.any(f.phi_defined) else float("nan")
    kmin, kx = _min_curvature(curve)
    fine = np.arange(8 * grid) * (curve.length / (8 * grid))
    witnesses = _third_intersections(curve, xs, J[0], fine)
    report = NicenessReport(
        grid=grid,
        margin=margin,
        min_curvature=kmin,
        argmin_curvature=kx,
        min_cos_phi=min_cphi,
        min_twist=float(twist.min()),
        min_transversality=transversal,
        witnesses=witnesses,
        condition1=not witnesses and transversal > 1e-12 and bool(np.all(f.phi_defined)),
        condition2=kmin > CURVATURE_FLOOR,
        condition3=bool(min_cphi > margin),
        twist=bool(twist.min() > 0),
    )
    curve._cache[key] = report
    return report


def require_nice(curve):
    for key, rep in curve._cache.items():
        if key[0] == "nice" and rep.passed:
            return rep
    rep = check_nice(curve)
    if not rep.passed:
        failed = [c for c in ("condition1", "condition2", "condition3", "twist") if not getattr(rep, c)]
        raise NicenessError(f"curve is not nice (failed: {', '.join(failed)}); use mode='all-roots'")
    return rep


# ---------------------------------------------------------------------------


def billiard_map(curve, x, c):
    """The map in (x, cos alpha) coordinates: (x, c) -> (y, cos beta(x, y))."""
    x, c = np.broadcast_arrays(np.asarray(x, float), np.asarray(c, float))
    y = x + solve_alpha(curve, x, np.arccos(c))
    return y, chord_frame(curve, x, y).cos_beta


def jacobian_check(curve, x, y, h=1e-4):
    """Determinant of the finite-difference Jacobian of the map in (x, cos alpha).

    Fourth-order central differences with steps ``h * |gamma|`` in x and ``h``
    in cos(alpha).  Returns ``(det, flagged)``; ``flagged`` marks phase points
    with sin(alpha) below 1e-3, where differences in cos(alpha) are
    ill-conditioned.
    """
    require_nice(curve)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    f = chord_frame(curve, x, y)
    c = f.cos_alpha
    hx = h * curve.length
    k = np.array([2.0, 1.0, -1.0, -2.0]).reshape((4,) + (1,) * x.ndim)
    xs = np.concatenate([x + k * hx, np.broadcast_to(x, (4,) + x.shape)])
    cs = np.concatenate([np.broadcast_to(c, (4,) + c.shape), c + k * h])
    Y, CB = billiard_map(curve, xs, cs)
    Y = Y.copy()
    Y[:4] -= k * hx  # differentiate y - x, which is periodic-safe

    def d(F, step):
        return (8 * (F[1] - F[2]) - (F[0] - F[3])) / (12 * step)

    dy_dx = d(Y[:4], hx) + 1.0
    dc_dx = d(CB[:4], hx)
    dy_dc = d(Y[4:], h)
    dc_dc = d(CB[4:], h)
    det = dy_dx * dc_dc - dy_dc * dc_dx
    return det, f.sin_alpha < 1e-3
