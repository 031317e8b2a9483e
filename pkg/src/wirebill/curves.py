"""Arc-length parameterized curves in R^n.

A curve is described by a :class:`CurveSpec` (JSON-serializable) and turned
into a :class:`Curve` by :func:`build_curve`.  Each kind supplies a raw
parametrization ``g(t)`` with analytic derivatives; the curve then carries an
arc-length chart ``t <-> x`` and evaluates derivatives with respect to ``x``
through the chain rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import Polynomial
from scipy.interpolate import make_interp_spline
from scipy.optimize import brentq

from .errors import CurveConstructionError, SpecError

KINDS = (
    "circle",
    "planar-ellipse",
    "fourier-convex",
    "coil",
    "subgroup-orbit",
    "flat-point",
    "raw-samples",
    "orthogonal-circles",
)

_PARAMS = {
    "circle": {"radius"},
    "planar-ellipse": {"a", "b"},
    "fourier-convex": {"radius", "cos", "sin"},
    "coil": {"eps", "m"},
    "subgroup-orbit": {"matrix", "seed", "period"},
    "flat-point": {"radius"},
    "raw-samples": {"points"},
    "orthogonal-circles": {"plateau"},
}

MIN_RESOLUTION = 64


@dataclass(frozen=True)
class CurveSpec:
    """Declarative description of a curve.

    JSON form is a flat object: ``{"kind": "coil", "eps": 0.05, "m": 2}``;
    ``dimension`` and ``closed`` are optional top-level keys, everything else
    goes to ``params``.
    """

    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    dimension: int | None = None
    closed: bool = True

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CurveSpec":
        if not isinstance(data, Mapping):
            raise SpecError("curve", "must be a JSON object")
        data = dict(data)
        if "kind" not in data:
            raise SpecError("curve.kind", "missing")
        kind = data.pop("kind")
        dimension = data.pop("dimension", None)
        closed = data.pop("closed", True)
        spec = cls(kind=kind, params=data, dimension=dimension, closed=closed)
        spec.validate()
        return spec

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.dimension is not None:
            out["dimension"] = self.dimension
        if not self.closed:
            out["closed"] = False
        for key, val in self.params.items():
            out[key] = val.tolist() if isinstance(val, np.ndarray) else val
        return out

    # convenience constructors
    @classmethod
    def circle(cls, radius=1.0, dimension=None):
        return cls("circle", {"radius": radius}, dimension)

    @classmethod
    def ellipse(cls, a, b, dimension=None):
        return cls("planar-ellipse", {"a": a, "b": b}, dimension)

    @classmethod
    def fourier_convex(cls, radius=1.0, cos=(), sin=(), dimension=None):
        return cls("fourier-convex", {"radius": radius, "cos": list(cos), "sin": list(sin)}, dimension)

    @classmethod
    def coil(cls, eps, m, dimension=None):
        return cls("coil", {"eps": eps, "m": m}, dimension)

    @classmethod
    def subgroup_orbit(cls, matrix, seed, period=None):
        params = {"matrix": np.asarray(matrix, float).tolist(), "seed": np.asarray(seed, float).tolist()}
        if period is not None:
            params["period"] = period
        return cls("subgroup-orbit", params)

    @classmethod
    def flat_point(cls, radius=1.0, dimension=None):
        return cls("flat-point", {"radius": radius}, dimension)

    @classmethod
    def raw_samples(cls, points, closed=True):
        return cls("raw-samples", {"points": np.asarray(points, float).tolist()}, closed=closed)

    @classmethod
    def orthogonal_circles(cls, plateau=math.pi / 4):
        return cls("orthogonal-circles", {"plateau": plateau})

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise SpecError("curve.kind", f"unknown kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        extra = set(self.params) - _PARAMS[self.kind]
        if extra:
            raise SpecError(f"curve.{sorted(extra)[0]}", f"not a parameter of kind {self.kind!r}")
        if self.dimension is not None and (not _is_int(self.dimension) or self.dimension < 2):
            raise SpecError("curve.dimension", "must be an integer >= 2")
        if not isinstance(self.closed, bool):
            raise SpecError("curve.closed", "must be a boolean")
        p = self.params
        if self.kind in ("circle", "flat-point", "fourier-convex"):
            _positive(p, "radius", default=1.0)
        elif self.kind == "planar-ellipse":
            _positive(p, "a")
            _positive(p, "b")
        elif self.kind == "coil":
            eps = _number(p, "eps")
            if not 0.0 <= eps < 1.0:
                raise SpecError("curve.eps", "must satisfy 0 <= eps < 1")
            m = p.get("m")
            if not _is_int(m) or m < 2:
                raise SpecError("curve.m", "must be an integer >= 2")
        elif self.kind == "subgroup-orbit":
            A = _array(p, "matrix", ndim=2)
            if A.shape[0] != A.shape[1] or A.shape[0] < 2:
                raise SpecError("curve.matrix", "must be a square matrix of size >= 2")
            if np.max(np.abs(A + A.T)) > 1e-12:
                raise SpecError("curve.matrix", "must be skew-symmetric to 1e-12")
            g0 = _array(p, "seed", ndim=1)
            if g0.shape[0] != A.shape[0]:
                raise SpecError("curve.seed", "length must match the matrix size")
            if "period" in p:
                _positive(p, "period")
        elif self.kind == "fourier-convex":
            pass
        elif self.kind == "raw-samples":
            P = _array(p, "points", ndim=2)
            if P.shape[0] < 8 or P.shape[1] < 2:
                raise SpecError("curve.points", "need at least 8 points of dimension >= 2")
        elif self.kind == "orthogonal-circles":
            plateau = _number(p, "plateau", default=math.pi / 4)
            if not 0.0 < plateau < math.pi / 2:
                raise SpecError("curve.plateau", "must lie in (0, pi/2)")
        if self.kind == "fourier-convex":
            for key in ("cos", "sin"):
                if key in p:
                    arr = np.asarray(p[key], dtype=float)
                    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
                        raise SpecError(f"curve.{key}", "must be a list of finite numbers")


def _is_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _number(p, key, default=None):
    v = p.get(key, default)
    if v is None:
        raise SpecError(f"curve.{key}", "missing")
    if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
        raise SpecError(f"curve.{key}", "must be a finite number")
    return float(v)


def _positive(p, key, default=None):
    v = _number(p, key, default)
    if v <= 0:
        raise SpecError(f"curve.{key}", "must be positive")
    return v


def _array(p, key, ndim):
    if key not in p:
        raise SpecError(f"curve.{key}", "missing")
    try:
        arr = np.asarray(p[key], dtype=float)
    except (TypeError, ValueError):
        raise SpecError(f"curve.{key}", "must be numeric") from None
    if arr.ndim != ndim or not np.all(np.isfinite(arr)):
        raise SpecError(f"curve.{key}", f"must be a finite {ndim}-d array")
    return arr


# ---------------------------------------------------------------------------
# raw parametrizations: jets(t, order) -> (order+1, len(t), dim)


def _rot(t, j):
    """Columns cos(t + j pi/2), sin(t + j pi/2): the j-th derivative of e^{it}."""
    return np.cos(t + j * math.pi / 2), np.sin(t + j * math.pi / 2)


class _Raw:
    period = 2 * math.pi
    dim = 2
    constant_speed = None

    def jets(self, t, order):
        raise NotImplementedError

    def velocity(self, t):
        return self.jets(t, 1)[1]

    def speed(self, t):
        return np.linalg.norm(self.velocity(t), axis=-1)


class _Circle(_Raw):
    def __init__(self, r):
        self.r = r
        self.constant_speed = r

    def jets(self, t, order):
        out = np.empty((order + 1, t.size, 2))
        for j in range(order + 1):
            c, s = _rot(t, j)
            out[j, :, 0] = self.r * c
            out[j, :, 1] = self.r * s
        return out


class _Ellipse(_Raw):
    def __init__(self, a, b):
        self.a, self.b = a, b

    def jets(self, t, order):
        out = np.empty((order + 1, t.size, 2))
        for j in range(order + 1):
            c, s = _rot(t, j)
            out[j, :, 0] = self.a * c
            out[j, :, 1] = self.b * s
        return out


class _SupportCurve(_Raw):
    # support function h(th) = r0 + sum A_k cos k th + B_k sin k th; gamma' = (h + h'') e'(th)
    def __init__(self, r0, A, B):
        K = max(len(A), len(B))
        self.r0 = r0
        self.A = np.zeros(K)
        self.B = np.zeros(K)
        self.A[: len(A)] = A
        self.B[: len(B)] = B
        self.k = np.arange(1, K + 1, dtype=float)
        th = np.linspace(0, 2 * math.pi, 4096, endpoint=False)
        if self._rho(th, 0).min() <= 0:
            raise CurveConstructionError("curve.cos", "radius of curvature h + h'' must stay positive (curve not convex)")
        if self.A.size == 0 or not np.any(self.A[1:]) and not np.any(self.B[1:]):
            self.constant_speed = r0

    def _rho(self, th, i):
        val = np.full(th.shape, self.r0 if i == 0 else 0.0)
        if self.k.size:
            ang = np.multiply.outer(th, self.k) + i * math.pi / 2
            coef = (1 - self.k**2) * self.k**i
            val = val + (coef * (self.A * np.cos(ang) + self.B * np.sin(ang))).sum(-1)
        return val

    def jets(self, t, order):
        out = np.empty((order + 1, t.size, 2))
        h = np.full(t.shape, self.r0)
        hp = np.zeros(t.shape)
        if self.k.size:
            ang = np.multiply.outer(t, self.k)
            h = h + (self.A * np.cos(ang) + self.B * np.sin(ang)).sum(-1)
            hp = (self.k * (-self.A * np.sin(ang) + self.B * np.cos(ang))).sum(-1)
        c0, s0 = _rot(t, 0)
        c1, s1 = _rot(t, 1)
        out[0, :, 0] = h * c0 + hp * c1
        out[0, :, 1] = h * s0 + hp * s1
        rho = [self._rho(t, i) for i in range(order)]
        for j in range(order):
            acc = np.zeros((t.size, 2))
            for i in range(j + 1):
                c, s = _rot(t, j - i + 1)
                w = math.comb(j, i) * rho[i]
                acc[:, 0] += w * c
                acc[:, 1] += w * s
            out[j + 1] = acc
        return out


class _Coil(_Raw):
    dim = 4

    def __init__(self, eps, m):
        self.eps, self.m = eps, m
        self.constant_speed = math.sqrt(1 + eps**2 * m**2)

    def jets(self, t, order):
        out = np.empty((order + 1, t.size, 4))
        for j in range(order + 1):
            c, s = _rot(t, j)
            cm, sm = _rot(self.m * t, j)
            f = self.eps * self.m**j
            out[j, :, 0] = c
            out[j, :, 1] = s
            out[j, :, 2] = f * cm
            out[j, :, 3] = f * sm
        return out


class _SubgroupOrbit(_Raw):
    """t -> exp(A t) g0 through the eigendecomposition of the Hermitian matrix iA."""

    def __init__(self, A, g0, period=None):
        self.dim = A.shape[0]
        self.mu, self.U = np.linalg.eigh(1j * A)
        self.c = self.U.conj().T @ g0.astype(complex)
        speed = float(np.linalg.norm(A @ g0))
        if speed < 1e-14:
            raise CurveConstructionError("curve.seed", "seed is fixed by the subgroup (zero-length orbit)")
        self.constant_speed = speed
        self.period = period if period is not None else self._detect_period()

    def _detect_period(self):
        active = (np.abs(self.c) > 1e-12) & (np.abs(self.mu) > 1e-12)
        freqs = np.unique(np.round(np.abs(self.mu[active]), 14))
        w0 = freqs.min()
        fracs = []
        for w in freqs:
            r = w / w0
            fr = Fraction(r).limit_denominator(1000)
            if abs(r - fr) > 1e-9 * r:
                raise CurveConstructionError(
                    "curve.period", "frequencies are incommensurate (orbit not closed); pass an explicit period"
                )
            fracs.append(fr)
        Q = 1
        for fr in fracs:
            Q = Q * fr.denominator // math.gcd(Q, fr.denominator)
        ints = [fr.numerator * Q // fr.denominator for fr in fracs]
        g = 0
        for n in ints:
            g = math.gcd(g, n)
        return 2 * math.pi * Q / (w0 * g)

    def jets(self, t, order):
        E = np.exp(-1j * np.multiply.outer(t, self.mu)) * self.c
        out = np.empty((order + 1, t.size, self.dim))
        for j in range(order + 1):
            out[j] = ((E * (-1j * self.mu) ** j) @ self.U.T).real
        return out


class _FlatPoint(_Raw):
    """Planar closed convex curve whose curvature vanishes to second order at t = 0.

    gamma(u) = i s (exp(-e^{iu}) - 1) in complex notation, so that
    gamma'(u) = s e^{iu} exp(-e^{iu}): tangent angle u - sin u, speed
    s exp(-cos u), curvature (1 - cos u) / (s exp(-cos u)).  The scale s is
    set so the length is 2 pi * radius.
    """

    a = -1.0

    def __init__(self, radius):
        u = 2 * math.pi * np.arange(256) / 256
        mean_speed = float(np.mean(np.exp(-np.cos(u))))  # I_0(1), spectrally accurate
        self.scale = radius / mean_speed

    def _f(self, u):
        return np.exp(1j * u - np.exp(1j * u))

    def velocity(self, t):
        f = self.scale * self._f(t)
        return np.stack([f.real, f.imag], axis=-1)

    def jets(self, t, order):
        out = np.empty((order + 1, t.size, 2))
        vals = [1j * (np.exp(-np.exp(1j * t)) - 1.0)]
        if order >= 1:
            f = self._f(t)
            # derivatives of the phase a cos u + i (u - sin u)
            p1 = -self.a * np.sin(t) + 1j * (1 - np.cos(t))
            p2 = -self.a * np.cos(t) + 1j * np.sin(t)
            p3 = self.a * np.sin(t) + 1j * np.cos(t)
            vals += [f, p1 * f, (p2 + p1**2) * f, (p3 + 3 * p1 * p2 + p1**3) * f][:order]
        for j, v in enumerate(vals):
            out[j, :, 0] = self.scale * v.real
            out[j, :, 1] = self.scale * v.imag
        return out


class _ClosedSamples(_Raw):
    """Trigonometric interpolant of equally spaced closed samples, t in [0, 2 pi)."""

    def __init__(self, P):
        N, self.dim = P.shape
        self.coef = np.fft.fft(P, axis=0) / N
        self.freq = np.fft.fftfreq(N, 1.0 / N)

    def jets(self, t, order):
        E = np.exp(1j * np.multiply.outer(t, self.freq))
        out = np.empty((order + 1, t.size, self.dim))
        for j in range(order + 1):
            out[j] = ((E * (1j * self.freq) ** j) @ self.coef).real
        return out


class _OpenSamples(_Raw):
    """Quintic interpolating spline through open samples, chord-length parameter."""

    def __init__(self, P):
        seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        self.dim = P.shape[1]
        self.period = float(s[-1])
        self.spline = make_interp_spline(s, P, k=5)

    def jets(self, t, order):
        return np.stack([self.spline(t, nu=j) for j in range(order + 1)])


def _smoothstep_poly(n=5):
    # C^n smoothstep on [0, 1]
    s = Polynomial([0, 1])
    acc = Polynomial([0])
    for k in range(n + 1):
        acc = acc + math.comb(n + k, k) * math.comb(2 * n + 1, n - k) * (-s) ** k
    return s ** (n + 1) * acc


class _OrthogonalCircles(_Raw):
    """Closed curve in R^4 containing exact arcs of two circles in orthogonal planes.

    ((1-w) e^{it}, w e^{i(t - pi)}) with a C^5 blend w that is 0 near t = 0 and
    1 near t = pi; every chord between the two exact arcs is perpendicular to
    the curve at both ends.
    """

    dim = 4

    def __init__(self, plateau):
        self.p = plateau
        self.width = math.pi - 2 * plateau
        S = _smoothstep_poly(5)
        self.S = [S.deriv(j) if j else S for j in range(5)]

    def _w(self, t, order):
        t = np.mod(t, 2 * math.pi)
        p, wdt = self.p, self.width
        out = np.zeros((order + 1, t.size))
        up = (t > p) & (t < math.pi - p)
        top = (t >= math.pi - p) & (t <= math.pi + p)
        down = (t > math.pi + p) & (t < 2 * math.pi - p)
        out[0, top] = 1.0
        for j in range(order + 1):
            f = wdt ** (-j)
            out[j, up] = f * self.S[j]((t[up] - p) / wdt)
            dval = f * self.S[j]((t[down] - math.pi - p) / wdt)
            out[j, down] = (1.0 - dval) if j == 0 else -dval
        return out

    def jets(self, t, order):
        W = self._w(t, order)
        out = np.zeros((order + 1, t.size, 4))
        for j in range(order + 1):
            for i in range(j + 1):
                b = math.comb(j, i)
                one_minus = (1.0 - W[0]) if i == 0 else -W[i]
                c1, s1 = _rot(t, j - i)
                c2, s2 = _rot(t - math.pi, j - i)
                out[j, :, 0] += b * one_minus * c1
                out[j, :, 1] += b * one_minus * s1
                out[j, :, 2] += b * W[i] * c2
                out[j, :, 3] += b * W[i] * s2
        return out


# ---------------------------------------------------------------------------
# piecewise Chebyshev tables used by the arc-length chart

_NCHEB = 24
_CHEB_NODES = np.cos(math.pi * (np.arange(_NCHEB) + 0.5) / _NCHEB)
_CHEB_MAT = (2.0 / _NCHEB) * np.cos(math.pi * np.outer(np.arange(_NCHEB), np.arange(_NCHEB) + 0.5) / _NCHEB)
_CHEB_MAT[0] *= 0.5


def _clenshaw(c, s):
    b1 = np.zeros_like(s)
    b2 = np.zeros_like(s)
    for j in range(c.shape[1] - 1, 0, -1):
        b1, b2 = 2.0 * s * b1 - b2 + c[:, j], b1
    return s * b1 - b2 + c[:, 0]



class _Piecewise:
    def __init__(self, start, width, coeffs):
        self.start, self.width, self.coeffs = start, width, coeffs
        self.n = coeffs.shape[0]

    def panel(self, z):
        idx = np.floor((z - self.start) / self.width).astype(int)
        return np.clip(idx, 0, self.n - 1)

    def __call__(self, z, idx=None):
        z = np.asarray(z, float)
        shape = z.shape
        z = z.ravel()
        idx = self.panel(z) if idx is None else np.ravel(idx)
        s = 2.0 * (z - self.start - idx * self.width) / self.width - 1.0
        return _clenshaw(self.coeffs[idx], s).reshape(shape)


class _ArcChart:
    """Map between the raw parameter t and arc length x.

    Speed is Chebyshev-interpolated per panel and integrated exactly; the
    inverse map is tabulated the same way from Newton-polished nodes.
    """

    def __init__(self, raw, resolution):
        T = raw.period
        self.T = T
        self.const = raw.constant_speed
        if self.const is not None:
            self.length = self.const * T
            self.panels = 0
            return
        N = resolution
        for attempt in range(6):
            if attempt:
                N *= 2
            h = T / N
            tn = np.arange(N)[:, None] * h + (_CHEB_NODES + 1.0) * (h / 2)
            sig = raw.speed(tn.ravel()).reshape(N, _NCHEB)
            if sig.min() <= 0:
                raise CurveConstructionError("curve", "raw parametrization has zero speed")
            c = sig @ _CHEB_MAT.T
            if np.abs(c[:, -4:]).max() <= 1e-15 * np.abs(c[:, 0]).max():
                break
        self.panels = N
        ci = C.chebint(c, lbnd=-1, scl=h / 2, axis=1)
        S = np.concatenate([[0.0], np.cumsum(ci.sum(axis=1))])
        self.length = float(S[-1])
        if self.length <= 1e-12:
            raise CurveConstructionError("curve", "zero-length curve")
        self._S = S
        self._fwd = _Piecewise(0.0, h, ci)
        self._speed = raw.speed

        # inverse table on equal arc-length panels
        M = N
        for attempt in range(4):
            if attempt:
                M *= 2
            hx = self.length / M
            xn = np.arange(M)[:, None] * hx + (_CHEB_NODES + 1.0) * (hx / 2)
            t = np.interp(xn, S, np.arange(N + 1) * h)
            for _ in range(50):
                dt = (self._arc_base(t) - xn) / self._speed(t.ravel()).reshape(t.shape)
                t = t - dt
                if np.abs(dt).max() < 1e-15 * T:
                    break
            ct = t @ _CHEB_MAT.T
            if np.abs(ct[:, -4:]).max() <= 1e-15 * T:
                break
        self._inv = _Piecewise(0.0, hx, ct)

    def _arc_base(self, t):
        idx = self._fwd.panel(t)
        return self._S[idx] + self._fwd(t, idx)

    def arc(self, t):
        """Arc length of raw parameter ``t`` (any real, lifted periodically)."""
        t = np.asarray(t, float)
        if self.const is not None:
            return self.const * t
        k = np.floor(t / self.T)
        return k * self.length + self._arc_base(t - k * self.T)

    def param(self, x):
        """Raw parameter of arc length ``x`` reduced to ``[0, length]``."""
        x = np.asarray(x, float)
        if self.const is not None:
            return x / self.const
        return self._inv(x)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    """Position and arc-length derivatives at ``x``.

    ``d3``/``d4`` and ``dcurvature`` are ``None`` below the requested order.
    ``normal`` is NaN wherever ``normal_defined`` is False (|d2| < 1e-14).
    """

    x: np.ndarray
    position: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray | None
    d4: np.ndarray | None
    curvature: np.ndarray
    dcurvature: np.ndarray | None
    normal: np.ndarray
    normal_defined: np.ndarray


def _chain(J, order):
    """Arc-length jets from raw jets (Faa di Bruno with t'(x) = |g'|^-1)."""
    out = np.empty((order + 1,) + J.shape[1:])
    out[0] = J[0]
    g1 = J[1]
    q = np.einsum("...i,...i", g1, g1)
    h = q**-0.5
    out[1] = g1 * h[..., None]
    if order < 2:
        return out
    g2 = J[2]
    q1 = 2 * np.einsum("...i,...i", g1, g2)
    h1 = -0.5 * q**-1.5 * q1
    t1, t2 = h, h * h1
    out[2] = g2 * (t1**2)[..., None] + g1 * t2[..., None]
    if order < 3:
        return out
    g3 = J[3]
    q2 = 2 * (np.einsum("...i,...i", g2, g2) + np.einsum("...i,...i", g1, g3))
    h2 = 0.75 * q**-2.5 * q1**2 - 0.5 * q**-1.5 * q2
    t3 = (h1**2 + h * h2) * h
    out[3] = g3 * (t1**3)[..., None] + g2 * (3 * t1 * t2)[..., None] + g1 * t3[..., None]
    if order < 4:
        return out
    g4 = J[4]
    q3 = 2 * (3 * np.einsum("...i,...i", g2, g3) + np.einsum("...i,...i", g1, g4))
    h3 = -15 / 8 * q**-3.5 * q1**3 + 9 / 4 * q**-2.5 * q1 * q2 - 0.5 * q**-1.5 * q3
    t4 = h * (4 * h * h1 * h2 + h**2 * h3 + h1**3)
    out[4] = (
        g4 * (t1**4)[..., None]
        + g3 * (6 * t1**2 * t2)[..., None]
        + g2 * (3 * t2**2 + 4 * t1 * t3)[..., None]
        + g1 * t4[..., None]
    )
    return out


class Curve:
    """An immutable arc-length parameterized curve.

    Arc length ``x`` runs over ``[0, length)`` (reduced periodically when the
    curve is closed).  All evaluation methods accept scalars or arrays.
    """

    def __init__(self, spec: CurveSpec, raw: _Raw, resolution: int):
        self.spec = spec
        self.kind = spec.kind
        self.closed = spec.closed
        self._raw = raw
        self.dimension = spec.dimension or raw.dim
        if self.dimension < raw.dim:
            raise SpecError("curve.dimension", f"kind {spec.kind!r} needs dimension >= {raw.dim}")
        self._chart = _ArcChart(raw, resolution)
        self.length = self._chart.length
        self.raw_period = raw.period
        self.constant_speed = raw.constant_speed
        self._cache = {}

    def __repr__(self):
        return f"Curve({self.kind}, length={self.length:.12g}, dim={self.dimension})"

    def wrap(self, x):
        x = np.asarray(x, float)
        if self.closed:
            return np.mod(x, self.length)
        return x

    def param(self, x):
        """Raw parameter of arc length ``x``."""
        return self._chart.param(self.wrap(x))

    def arc(self, t):
        """Arc length of raw parameter ``t`` (lifted, not reduced)."""
        return self._chart.arc(t)

    def jets(self, x, order=2):
        """Array ``(order+1, *x.shape, dim)`` of gamma and its x-derivatives."""
        if not 0 <= order <= 4:
            raise ValueError("order must be in 0..4")
        x = np.asarray(x, float)
        t = self.param(x).ravel()
        need = max(order, 1)
        J = self._raw.jets(t, need)
        if self.constant_speed is not None:
            scale = self.constant_speed ** -np.arange(need + 1)
            out = J * scale[:, None, None]
        else:
            out = _chain(J, need)
        out = out[: order + 1]
        if self.dimension > out.shape[-1]:
            pad = np.zeros(out.shape[:-1] + (self.dimension - out.shape[-1],))
            out = np.concatenate([out, pad], axis=-1)
        return out.reshape((order + 1,) + x.shape + (self.dimension,))

    def position(self, x):
        return self.jets(x, 0)[0]

    def tangent(self, x):
        """Unit tangent d gamma / dx (skips the position evaluation)."""
        x = np.asarray(x, float)
        v = self._raw.velocity(self.param(x).ravel())
        v = v / np.linalg.norm(v, axis=-1)[:, None]
        if self.dimension > v.shape[-1]:
            v = np.concatenate([v, np.zeros((v.shape[0], self.dimension - v.shape[-1]))], axis=-1)
        return v.reshape(x.shape + (self.dimension,))

    def curvature(self, x):
        return np.linalg.norm(self.jets(x, 2)[2], axis=-1)

    def evaluate(self, x, order=2) -> CurvePoint:
        if not 0 <= order <= 4:
            raise ValueError("order must be in 0..4")
        J = self.jets(x, max(order, 2))
        d2 = J[2]
        k = np.linalg.norm(d2, axis=-1)
        defined = k >= 1e-14
        with np.errstate(invalid="ignore", divide="ignore"):
            normal = np.where(defined[..., None], d2 / k[..., None], np.nan)
            dk = None
            if order >= 3:
                dk = np.where(defined, np.einsum("...i,...i", d2, J[3]) / k, np.nan)
        return CurvePoint(
            x=np.asarray(x, float),
            position=J[0],
            d1=J[1],
            d2=d2,
            d3=J[3] if order >= 3 else None,
            d4=J[4] if order >= 4 else None,
            curvature=k,
            dcurvature=dk,
            normal=normal,
            normal_defined=defined,
        )

    def grid(self, n):
        """Cached equally spaced arc-length grid and its 2-jets (for scans)."""
        key = ("grid", n)
        if key not in self._cache:
            xs = np.arange(n) * (self.length / n)
            self._cache[key] = (xs, self.jets(xs, 2))
        return self._cache[key]


def build_curve(spec, resolution: int = 256) -> Curve:
    """Construct a :class:`Curve` from a spec (or its dict form)."""
    if not isinstance(spec, CurveSpec):
        spec = CurveSpec.from_dict(spec)
    spec.validate()
    if not _is_int(resolution) or resolution < MIN_RESOLUTION:
        raise SpecError("resolution", f"must be an integer >= {MIN_RESOLUTION}")
    p = spec.params
    kind = spec.kind
    if kind == "circle":
        raw = _Circle(float(p.get("radius", 1.0)))
    elif kind == "planar-ellipse":
        raw = _Ellipse(float(p["a"]), float(p["b"]))
    elif kind == "fourier-convex":
        raw = _SupportCurve(float(p.get("radius", 1.0)), p.get("cos", []), p.get("sin", []))
    elif kind == "coil":
        raw = _Coil(float(p["eps"]), int(p["m"]))
    elif kind == "subgroup-orbit":
        raw = _SubgroupOrbit(np.asarray(p["matrix"], float), np.asarray(p["seed"], float), p.get("period"))
    elif kind == "flat-point":
        raw = _FlatPoint(float(p.get("radius", 1.0)))
    elif kind == "orthogonal-circles":
        raw = _OrthogonalCircles(float(p.get("plateau", math.pi / 4)))
    else:
        P = np.asarray(p["points"], float)
        _check_samples(P, spec.closed)
        raw = _ClosedSamples(P) if spec.closed else _OpenSamples(P)
    return Curve(spec, raw, resolution)


def _check_samples(P, closed):
    seg = np.linalg.norm(np.diff(np.vstack([P, P[:1]]) if closed else P, axis=0), axis=1)
    total = seg.sum()
    if total < 1e-12:
        raise CurveConstructionError("curve.points", "zero-length sample polygon")
    N = len(P)
    D = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=-1)
    idx = np.arange(N)
    sep = np.abs(idx[:, None] - idx[None, :])
    if closed:
        sep = np.minimum(sep, N - sep)
    D[sep < 2] = np.inf
    if D.min() < 1e-9 * total:
        i, j = np.unravel_index(np.argmin(D), D.shape)
        raise CurveConstructionError("curve.points", f"samples {i} and {j} coincide (self-intersecting curve)")
