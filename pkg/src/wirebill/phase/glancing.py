"""Glancing orbits near a flat point, and the second-derivative identity there."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..chords import angle_alpha, chord_frame
from ..reflection import MIN_CELLS, iterate_orbit
from ..roots import scan_roots


@dataclass
class GlancingResult:
    alpha0: float
    max_alpha: float
    min_alpha: float
    steps: int
    escape_step: int | None
    multivalued_steps: int
    stopped_early: bool
    alpha: np.ndarray = field(repr=False)

    @property
    def excursion(self):
        return self.max_alpha / self.alpha0


def _first_chord(curve, x0, alpha0, cells):
    """Smallest forward d with alpha(x0, x0 + d) = alpha0, without assuming monotonicity."""
    P = curve.length
    g = lambda d: angle_alpha(curve, np.full(np.shape(d), x0), x0 + d) - alpha0
    roots = scan_roots(g, 1e-4 * P, P * (1 - 1e-4), cells, xtol=1e-15 * P)
    if roots.size == 0:
        raise ValueError(f"no chord leaves x0={x0} at angle {alpha0}")
    return x0 + roots[0]


def glancing_escape(curve, alpha0, steps, x0=0.0, mode="all-roots", stop_factor=None, cells=MIN_CELLS, chunk=250):
    """Iterate a glancing orbit started at angle alpha0 and report its alpha range.

    With ``stop_factor`` set, iteration stops as soon as alpha exceeds
    ``stop_factor * alpha0`` (``escape_step`` records when).  In all-roots
    mode multivalued steps pick the root nearest the previous chord length
    and are counted.
    """
    y0 = _first_chord(curve, x0, alpha0, cells)
    alphas = []
    multi = 0
    escape = None
    stopped = False
    x, y = x0, y0
    done = 0
    while done < steps:
        n = min(chunk, steps - done)
        orb = iterate_orbit(curve, x, y, n, mode=mode, cells=cells)
        a = orb.alpha if not alphas else orb.alpha[1:]
        alphas.append(a)
        multi += sum(1 for _, msg in orb.flags if "successors" in msg)
        if stop_factor is not None and escape is None:
            hit = np.nonzero(orb.alpha > stop_factor * alpha0)[0]
            if hit.size:
                escape = done + int(hit[0])
                done += n
                break
        if orb.stopped_early:
            stopped = True
            break
        done += n
        x, y = orb.vertices[-2], orb.vertices[-1]
    alpha = np.concatenate(alphas)
    return GlancingResult(alpha0, float(alpha.max()), float(alpha.min()), done, escape, multi, stopped, alpha)


def flat_point_identity(curve, q, samples=100, seed=0):
    """L11(q, z) + L22(w, q) at chords through q, with the sin^2/L prediction.

    Returns ``(values, predicted)``.  At a point with k(q) = 0 the curvature
    terms drop out and each value equals sin^2(alpha)/L + sin^2(beta)/L > 0.
    """
    rng = np.random.default_rng(seed)
    P = curve.length
    z = q + (0.02 + 0.96 * rng.random(samples)) * P
    w = q - (0.02 + 0.96 * rng.random(samples)) * P
    fz = chord_frame(curve, np.full(samples, q), z)
    fw = chord_frame(curve, w, np.full(samples, q))
    values = fz.L11 + fw.L22
    predicted = fz.sin_alpha**2 / fz.L + fw.sin_beta**2 / fw.L
    return values, predicted
