"""Billiards in confocal ellipsoids and the reparameterized geodesic flow on an ellipsoid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, NumericalError, SpecError

CONSTRAINT_TOL = 1e-8


@dataclass
class ConfocalFamily:
    """Quadrics sum x_i^2 / (a_i^2 + lam) = 1 with distinct semi-axes a_1 > ... > a_n."""

    axes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.axes, float)
        if a.ndim != 1 or a.size < 2:
            raise SpecError("axes", "need at least two semi-axes")
        if np.any(a <= 0):
            raise SpecError("axes", "semi-axes must be positive")
        a = np.sort(a)[::-1]
        if np.any(np.diff(a) == 0):
            raise SpecError("axes", "semi-axes must be distinct")
        self.axes = a

    @property
    def n(self):
        return self.axes.size

    @property
    def poles(self):
        return -self.axes[::-1] ** 2  # ascending: -a_1^2 < ... < -a_n^2 reversed order

    def diag(self, lam=0.0):
        d = self.axes**2 + lam
        if np.any(d <= 0):
            raise SpecError("lambda", f"member requires lambda > {-self.axes[-1] ** 2:g}")
        return 1.0 / d

    def level(self, lam, x):
        """A_lam x . x - 1."""
        return float(np.dot(self.diag(lam) * x, x) - 1.0)

    def contains(self, lam, x):
        return self.level(lam, x) < 0


@dataclass
class GeodesicState:
    x: np.ndarray
    v: np.ndarray
    clock: float = 0.0


@dataclass
class LineState:
    """Oriented line through ``p`` with unit direction ``q``."""

    p: np.ndarray
    q: np.ndarray

    def reduced(self):
        """(p - (p.q) q, q): the line's point closest to the origin and its direction."""
        return self.p - np.dot(self.p, self.q) * self.q, self.q


def line_gap(a: LineState, b: LineState):
    """Distance between two oriented lines: closest-point gap plus direction gap."""
    pa, qa = a.reduced()
    pb, qb = b.reduced()
    return float(np.linalg.norm(pa - pb) + np.linalg.norm(qa - qb))


def curvature(family, lam, x, v):
    """Curvature in R^n of the geodesic through x with unit velocity v: Av.v / |Ax|."""
    d = family.diag(lam)
    return float(np.dot(d * v, v) / np.linalg.norm(d * x))


def project(family, lam, x, v):
    """Put x back on the quadric and make v a unit tangent vector there."""
    d = family.diag(lam)
    x = x / math.sqrt(np.dot(d * x, x))
    N = d * x
    N = N / np.linalg.norm(N)
    v = v - np.dot(v, N) * N
    return x, v / np.linalg.norm(v)


def geodesic_state(family, lam, x, v):
    """Validated state: x projected onto the member, v made tangent and unit."""
    x, v = np.asarray(x, float), np.asarray(v, float)
    if x.shape != (family.n,) or v.shape != (family.n,):
        raise SpecError("state", f"x and v must have {family.n} components")
    if abs(family.level(lam, x)) > 1e-6:
        raise SpecError("state.x", "point is not on the quadric")
    x, v = project(family, lam, x, v)
    return GeodesicState(x, v)


def _rhs(family, lam, mode):
    d = family.diag(lam)

    def f(y):
        n = y.size // 2
        x, v = y[:n], y[n:]
        Ax = d * x
        Avv = np.dot(d * v, v)
        nAx2 = np.dot(Ax, Ax)
        acc = -(Avv / nAx2) * Ax
        if mode == "xi":
            s = (Avv / math.sqrt(nAx2)) ** (-2.0 / 3.0)
            return np.concatenate([s * v, s * acc])
        return np.concatenate([v, acc])

    return f


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _dp_step(f, y, k0, h):
    K = [k0]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], K))
        K.append(f(yi))
    y5 = y + h * sum(b * k for b, k in zip(_B5, K))
    err = h * sum((b5 - b4) * k for b5, b4, k in zip(_B5, _B4, K))
    return y5, err, K[-1]


def geodesic_flow(family, lam, s0: GeodesicState, T, mode="arc-length", rtol=1e-12, atol=1e-13, max_steps=10**6, record=False):
    """Flow the geodesic for time T.

    ``mode="arc-length"`` uses unit speed; ``mode="xi"`` uses speed k^(-2/3)
    with k = Av.v/|Ax|, so T is xi-time.  Adaptive Dormand-Prince 5(4) with
    (x, v) projected back onto the constraint after every accepted step.
    With ``record`` a list of accepted states is returned as well.
    """
    if mode not in ("arc-length", "xi"):
        raise SpecError("mode", "must be 'arc-length' or 'xi'")
    T = float(T)
    if not math.isfinite(T):
        raise SpecError("T", "must be finite")
    sign = 1.0 if T >= 0 else -1.0
    f = _rhs(family, lam, mode)
    g = (lambda y: -f(y)) if sign < 0 else f
    n = family.n
    x, v = project(family, lam, s0.x, s0.v)
    y = np.concatenate([x, v])
    t, T = 0.0, abs(T)
    k0 = g(y)
    h = min(T, 0.05) if T > 0 else 0.0
    path = [GeodesicState(x.copy(), v.copy(), s0.clock)] if record else None
    steps = 0
    while t < T:
        if steps >= max_steps:
            raise ConvergenceError("geodesic_flow", "too many steps")
        h = min(h, T - t)
        if h < 1e-14 * max(1.0, T):
            raise NumericalError("geodesic_flow", "step size underflow")
        yn, err, kn = _dp_step(g, y, k0, h)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(yn))
        e = float(np.sqrt(np.mean((err / scale) ** 2)))
        if e <= 1.0:
            t += h
            x, v = project(family, lam, yn[:n], yn[n:])
            y = np.concatenate([x, v])
            k0 = g(y) if not np.array_equal(y, yn) else kn
            steps += 1
            if record:
                path.append(GeodesicState(x.copy(), v.copy(), s0.clock + sign * t))
        h *= min(5.0, max(0.2, 0.9 * max(e, 1e-10) ** -0.2))
    x, v = y[:n], y[n:]
    drift = abs(family.level(lam, x))
    if drift > CONSTRAINT_TOL or abs(np.linalg.norm(v) - 1) > CONSTRAINT_TOL:
        raise NumericalError("geodesic_flow", f"constraint drift {drift:.3g}")
    out = GeodesicState(x, v, s0.clock + sign * T)
    return (out, path) if record else out


def acceleration(family, lam, state: GeodesicState):
    """x'' of the arc-length geodesic equation at the state."""
    n = family.n
    return _rhs(family, lam, "arc-length")(np.concatenate([state.x, state.v]))[n:]


def _intersections(family, lam, line):
    d = family.diag(lam)
    p, q = np.asarray(line.p, float), np.asarray(line.q, float)
    a = np.dot(d * q, q)
    b = np.dot(d * p, q)
    c = np.dot(d * p, p) - 1.0
    disc = b * b - a * c
    if disc <= 0:
        raise NumericalError("reflect_line", "line misses or is tangent to the quadric")
    r = math.sqrt(disc)
    # stable pair of roots of a s^2 + 2 b s + c
    s1 = (-b - r) / a if b > 0 else c / (-b + r)
    s2 = c / (-b - r) if b > 0 else (-b + r) / a
    return min(s1, s2), max(s1, s2)


def reflect_line(family, lam, line: LineState) -> LineState:
    """Billiard reflection of an oriented line in the member M_lam.

    The line is advanced to its exit point from M_lam (the larger root) and
    reflected about the tangent plane there.
    """
    q = np.asarray(line.q, float)
    q = q / np.linalg.norm(q)
    _, s = _intersections(family, lam, LineState(line.p, q))
    x = np.asarray(line.p, float) + s * q
    N = family.diag(lam) * x
    N = N / np.linalg.norm(N)
    return LineState(x, q - 2 * np.dot(q, N) * N)


def _tangency_poly(family, p, q):
    """Coefficients (highest first) of P(lam) = D(lam) prod(a_i^2 + lam), D the discriminant."""
    a2 = family.axes**2
    n = family.n
    P = np.zeros(1)
    for i in range(n):
        P = np.polyadd(P, q[i] ** 2 * np.poly(-np.delete(a2, i)))
    for i in range(n):
        for j in range(i + 1, n):
            w = (p[i] * q[j] - p[j] * q[i]) ** 2
            P = np.polysub(P, w * np.poly(-np.delete(a2, [i, j])) if n > 2 else w * np.ones(1))
    return P


def tangency_parameters(family, line: LineState):
    """The n-1 values lam for which the line is tangent to M_lam (sorted).

    Sign changes of the polynomial P = D * prod(a_i^2 + lam) are bracketed
    between consecutive poles -a_i^2 of the discriminant D and polished by
    Brent's method; if fewer than n-1 are bracketed (degenerate lines) the
    real roots of P are used instead.
    """
    p, q = line.reduced()
    q = q / np.linalg.norm(q)
    P = _tangency_poly(family, p, q)
    val = lambda t: np.polyval(P, t)
    a2 = np.sort(family.axes**2)[::-1]
    big = 2.0 * (a2[0] + np.dot(p, p) + 1.0)
    edges = np.concatenate([[-a2[0] - big], -a2, [big]])
    roots = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        flo, fhi = val(lo), val(hi)
        if flo == 0:
            roots.append(lo)
        elif flo * fhi < 0:
            roots.append(brentq(val, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))
    roots = sorted(set(roots))
    if len(roots) < family.n - 1:
        r = np.roots(P)
        roots = sorted(np.real(r[np.abs(np.imag(r)) < 1e-8 * (1 + np.abs(r))]))
    return np.array(roots)


def tangent_line(state: GeodesicState) -> LineState:
    return LineState(state.x.copy(), state.v.copy())


def tangency_point(family, lam, line: LineState) -> GeodesicState:
    """Geodesic state where a line tangent to M_lam touches it."""
    d = family.diag(lam)
    p, q = np.asarray(line.p, float), np.asarray(line.q, float)
    s = -np.dot(d * p, q) / np.dot(d * q, q)
    x, v = project(family, lam, p + s * q, q)
    return GeodesicState(x, v)


@dataclass
class CommuteReport:
    gap_xi: float
    gap_arc_length: float
    tangency_before: np.ndarray
    tangency_after: np.ndarray

    def to_dict(self):
        return {
            "gap_xi": self.gap_xi,
            "gap_arc_length": self.gap_arc_length,
            "tangency_before": self.tangency_before.tolist(),
            "tangency_after": self.tangency_after.tolist(),
        }


def commute_report(family, lam, geo: GeodesicState, tau, rtol=1e-12):
    """Gap between (reflect after flow) and (flow after reflect) on the line tangent to geo.

    geo lies on M_0; the reflector is M_lam with lam > 0.  The flow is the
    geodesic flow on M_0, in xi-time and, for contrast, in arc length.
    """
    if not lam > 0:
        raise SpecError("lambda", "reflector must be a confocal ellipsoid outside M_0 (lambda > 0)")

    def gap(mode):
        a = geodesic_flow(family, 0.0, geo, tau, mode=mode, rtol=rtol)
        la = reflect_line(family, lam, tangent_line(a))
        r = tangency_point(family, 0.0, reflect_line(family, lam, tangent_line(geo)))
        b = geodesic_flow(family, 0.0, r, tau, mode=mode, rtol=rtol)
        return line_gap(la, tangent_line(b)), la

    g_xi, la = gap("xi")
    g_arc, _ = gap("arc-length")
    return CommuteReport(g_xi, g_arc, tangency_parameters(family, tangent_line(geo)), tangency_parameters(family, la))


def _chart(q):
    k = int(np.argmax(np.abs(q)))
    return k, float(np.sign(q[k]))


def _from_chart(k, sgn, u, eta):
    n = u.size + 1
    w = np.insert(u, k, 1.0)
    nw = np.linalg.norm(w)
    q = sgn * w / nw
    B = np.empty((n, n - 1))
    for j, idx in enumerate([i for i in range(n) if i != k]):
        e = np.zeros(n)
        e[idx] = 1.0
        B[:, j] = sgn * (e / nw - w * u[j] / nw**3)
    p = B @ np.linalg.solve(B.T @ B, eta)
    return LineState(p, q), B


def canonical_coords(line: LineState, chart=None):
    """Canonical coordinates (u, eta) of an oriented line: q in a graph chart of the sphere,
    eta_j = p . dq/du_j, so that sum eta_j du_j is the Liouville form."""
    p, q = line.reduced()
    q = q / np.linalg.norm(q)
    k, sgn = chart or _chart(q)
    u = np.delete(q / q[k], k)
    _, B = _from_chart(k, sgn, u, np.zeros(u.size))
    return np.concatenate([u, B.T @ p]), (k, sgn)


def symplectic_det(family, lam, line: LineState, h=1e-5):
    """det of the Jacobian of reflect_line in canonical coordinates (fourth-order differences)."""
    z0, chart = canonical_coords(line)
    out_chart = canonical_coords(reflect_line(family, lam, line))[1]
    m = z0.size // 2

    def F(z):
        ln, _ = _from_chart(chart[0], chart[1], z[:m], z[m:])
        ln = LineState(ln.p, ln.q)
        return canonical_coords(reflect_line(family, lam, ln), out_chart)[0]

    J = np.empty((z0.size, z0.size))
    for j in range(z0.size):
        e = np.zeros(z0.size)
        e[j] = h * max(1.0, abs(z0[j]))
        J[:, j] = (8 * (F(z0 + e) - F(z0 - e)) - (F(z0 + 2 * e) - F(z0 - 2 * e))) / (12 * e[j])
    return float(np.linalg.det(J))


def random_interior_line(family, lam, rng):
    """Random oriented line through a random point inside M_lam."""
    n = family.n
    while True:
        x = rng.uniform(-1, 1, n)
        if np.dot(x, x) < 1:
            break
    p = 0.9 * x * np.sqrt(family.axes**2 + lam)
    q = rng.normal(size=n)
    return LineState(p, q / np.linalg.norm(q))


def random_geodesic_state(family, lam, rng):
    n = family.n
    x = rng.normal(size=n)
    x = x / math.sqrt(np.dot(family.diag(lam) * x, x))
    v = rng.normal(size=n)
    x, v = project(family, lam, x, v)
    return GeodesicState(x, v)
