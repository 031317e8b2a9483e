"""Chord data: the generating function L(x, y) = |gamma(y) - gamma(x)| and its partials."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DiagonalChordError, NumericalError

DIAGONAL_TOL = 1e-9  # relative to |gamma|
NEAR_DIAGONAL = 1e-4  # cos(phi) reported as its limit 1 below this separation
TANGENT_TOL = 1e-12


@dataclass(frozen=True)
class ChordFrame:
    """Everything scalar about the oriented chord [gamma(x), gamma(y)].

    alpha is the angle at gamma(x) between the tangent and the chord, beta the
    angle at gamma(y); both lie in [0, pi].  L1 = -cos(alpha), L2 = cos(beta).
    """

    x: np.ndarray
    y: np.ndarray
    L: np.ndarray
    cos_alpha: np.ndarray
    sin_alpha: np.ndarray
    alpha: np.ndarray
    cos_beta: np.ndarray
    sin_beta: np.ndarray
    beta: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    L11: np.ndarray
    L12: np.ndarray
    L22: np.ndarray
    cos_phi: np.ndarray
    phi_defined: np.ndarray


def separation(curve, x, y):
    """Parameter distance between x and y (periodic for closed curves)."""
    d = np.abs(np.asarray(y, float) - np.asarray(x, float))
    if curve.closed:
        d = np.mod(d, curve.length)
        d = np.minimum(d, curve.length - d)
    return d


def _dot(a, b):
    return np.einsum("...i,...i", a, b)


PANEL = 0.05  # relative width of the quadrature panels used for chord vectors
_GL_Z, _GL_W = np.polynomial.legendre.leggauss(10)


def _panels(curve, x, y):
    P = curve.length
    dd = y - x
    if curve.closed:
        dd = dd - P * np.round(dd / P)
    return dd, np.maximum(np.ceil(np.abs(dd) / (PANEL * P)).astype(int), 1)


def chord_tangents(curve, x, y):
    """(R, T(x), T(y)) with R integrated from the tangent, in one curve evaluation per panel count.

    Cheaper than :func:`chord_frame` when only first-order data is needed.
    """
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    shape = x.shape
    xf, yf = x.ravel(), y.ravel()
    dd, npan = _panels(curve, xf, yf)
    dim = curve.dimension
    R = np.empty((xf.size, dim))
    Tx = np.empty((xf.size, dim))
    Ty = np.empty((xf.size, dim))
    for n in np.unique(npan):
        sel = np.nonzero(npan == n)[0]
        h = dd[sel] / n
        left = xf[sel][:, None] + h[:, None] * np.arange(n)
        nodes = (left[:, :, None] + 0.5 * h[:, None, None] * (_GL_Z + 1.0)).reshape(len(sel), -1)
        pts = np.concatenate([nodes, xf[sel][:, None], yf[sel][:, None]], axis=1)
        T = curve.tangent(pts)
        R[sel] = 0.5 * h[:, None] * np.einsum("k,mkn->mn", np.tile(_GL_W, n), T[:, :-2])
        Tx[sel] = T[:, -2]
        Ty[sel] = T[:, -1]
    return R.reshape(shape + (dim,)), Tx.reshape(shape + (dim,)), Ty.reshape(shape + (dim,))


def chord_vector(curve, x, y, Jx=None, Jy=None):
    """R = gamma(y) - gamma(x).

    Computed as the composite Gauss-Legendre integral of the unit tangent over
    the shorter arc from x to y.  Unlike the difference of positions this
    keeps full relative precision for short chords and has no rounding bias
    between the two endpoints.  Where the integral disagrees with the plain
    difference by more than 1e-9 (under-resolved curves) the difference is
    used.
    """
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    if Jx is None:
        Jx = curve.jets(x, 0)
    if Jy is None:
        Jy = curve.jets(y, 0)
    R = Jy[0] - Jx[0]
    P = curve.length
    dd, npan = _panels(curve, x, y)
    Rf = R.reshape(-1, R.shape[-1]).copy()
    xf, df, nf = x.ravel(), dd.ravel(), npan.ravel()
    for n in np.unique(nf):
        sel = np.nonzero(nf == n)[0]
        h = df[sel] / n
        left = xf[sel][:, None] + h[:, None] * np.arange(n)
        nodes = left[:, :, None] + 0.5 * h[:, None, None] * (_GL_Z + 1.0)
        T = curve.tangent(nodes.reshape(len(sel), -1))
        W = np.tile(_GL_W, n)
        Ri = 0.5 * h[:, None] * np.einsum("k,mkn->mn", W, T)
        ok = np.linalg.norm(Ri - Rf[sel], axis=-1) <= 1e-9 * np.maximum(np.abs(df[sel]), 1e-300) + 1e-15 * P
        Rf[sel[ok]] = Ri[ok]
    return Rf.reshape(R.shape)


def chord_frame(curve, x, y, check=True) -> ChordFrame:
    """Chord frame for arrays (or scalars) x, y broadcast together."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    sep = separation(curve, x, y)
    if check and np.any(sep < DIAGONAL_TOL * curve.length):
        raise DiagonalChordError("chord endpoints coincide; the diagonal is not a chord")
    Jx = curve.jets(x, 2)
    Jy = curve.jets(y, 2)
    R = chord_vector(curve, x, y, Jx, Jy)
    return frame_from_jets(x, y, Jx, Jy, sep / curve.length, R)


def frame_from_jets(x, y, Jx, Jy, rel_sep=None, R=None) -> ChordFrame:
    if R is None:
        R = Jy[0] - Jx[0]
    L = np.sqrt(_dot(R, R))
    if np.any(L == 0):
        raise DiagonalChordError("zero-length chord")
    u = R / L[..., None]
    a, b = Jx[1], Jy[1]
    ca = _dot(a, u)
    cb = _dot(b, u)
    a_perp = a - ca[..., None] * u
    b_perp = b - cb[..., None] * u
    sa = np.sqrt(_dot(a_perp, a_perp))
    sb = np.sqrt(_dot(b_perp, b_perp))
    # L12 = [-(a.b)|R|^2 + (a.R)(b.R)] / L^3, evaluated as -(a_perp . b_perp) / L
    cross = _dot(a_perp, b_perp)
    L12 = -cross / L
    L11 = sa**2 / L - _dot(Jx[2], u)
    L22 = sb**2 / L + _dot(Jy[2], u)
    defined = sa * sb >= TANGENT_TOL
    with np.errstate(invalid="ignore", divide="ignore"):
        cphi = np.where(defined, np.clip(-cross / (sa * sb), -1.0, 1.0), np.nan)
    if rel_sep is not None:
        near = np.asarray(rel_sep) < NEAR_DIAGONAL
        cphi = np.where(near, 1.0, cphi)
        defined = defined | near
    return ChordFrame(
        x=x,
        y=y,
        L=L,
        cos_alpha=ca,
        sin_alpha=sa,
        alpha=_angle(a, u),
        cos_beta=cb,
        sin_beta=sb,
        beta=_angle(b, u),
        L1=-ca,
        L2=cb,
        L11=L11,
        L12=L12,
        L22=L22,
        cos_phi=cphi,
        phi_defined=defined,
    )


def _angle(a, u):
    # angle between a and unit u, accurate over the whole range [0, pi]
    a = a / np.sqrt(_dot(a, a))[..., None]
    return 2.0 * np.arctan2(np.linalg.norm(a - u, axis=-1), np.linalg.norm(a + u, axis=-1))


def chord_length(curve, x, y):
    return np.linalg.norm(chord_vector(curve, x, y), axis=-1)


def angle_alpha(curve, x, y):
    """alpha(x, y) alone (cheaper than a full frame)."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    Jx = curve.jets(x, 1)
    R = chord_vector(curve, x, y, Jx)
    return _angle(Jx[1], R / np.linalg.norm(R, axis=-1)[..., None])


def _gauss_legendre(n):
    z, w = np.polynomial.legendre.leggauss(n)
    return z, w


def phase_area(curve, grid=256):
    """Total area of the chord cylinder under sin(alpha) d(alpha) ^ dx.

    Written as the integral of L12 over x in one period and the forward
    separation d in (0, |gamma|).  The x-direction uses the periodic
    rectangle rule, d uses Gauss-Legendre on panels.  The integral is computed
    at ``grid`` and ``grid/2`` nodes per direction; a relative change above
    1e-3 raises.
    """
    if not curve.closed:
        raise ValueError("phase area needs a closed curve")
    if grid < 128:
        raise ValueError("grid must be >= 128")

    def integrate(n):
        xs = np.arange(n) * (curve.length / n)
        panels = max(n // 16, 4)
        z, w = _gauss_legendre(16)
        edges = np.linspace(0.0, curve.length, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        d = (mid[:, None] + half[:, None] * z).ravel()
        wd = (half[:, None] * w).ravel()
        Jx = curve.jets(xs, 2)
        total = 0.0
        for i, x in enumerate(xs):
            y = x + d
            Jy = curve.jets(y, 2)
            Jxi = np.broadcast_to(Jx[:, i : i + 1, :], Jy.shape)
            f = frame_from_jets(np.full_like(y, x), y, Jxi, Jy)
            total += float(np.dot(f.L12, wd))
        return total * curve.length / n

    coarse = integrate(grid // 2)
    fine = integrate(grid)
    if abs(fine - coarse) > 1e-3 * abs(fine):
        raise NumericalError("phase_area", f"integral not converged: {coarse!r} vs {fine!r}")
    return fine
