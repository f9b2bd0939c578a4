"""Derivative-free step-size search for the projected gradient step.

The objective ``mu -> ||y - H g(f(x + mu d))||`` is piecewise (the codec
switches codewords), so a coarse uniform scan locates the basin and a
golden-section pass refines it.
"""
from __future__ import annotations

import math

import numpy as np

from ..exceptions import InvalidParameterError, SearchError
from ..sensing import adjoint_array, forward_array

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class _Objective:
    def __init__(self, codec, masks, y, x_t, direction, iteration):
        self.codec, self.masks, self.y = codec, masks, y
        self.x_t, self.direction, self.iteration = x_t, direction, iteration
        self.seen = []

    def __call__(self, mu):
        xp = self.codec.project(self.x_t + mu * self.direction, iteration=self.iteration)
        val = float(np.linalg.norm(self.y - forward_array(self.masks, xp)))
        if not math.isfinite(val):
            raise SearchError(f"non-finite objective at mu={mu}")
        self.seen.append((val, mu))
        return val


def golden_section(f, a, b, xtol=1e-6, maxiter=60):
    """Minimize ``f`` on ``[a, b]``; returns ``(x, f(x))`` of the best point seen."""
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    best = min((fc, c), (fd, d))
    for _ in range(maxiter):
        if abs(b - a) <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
            best = min(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
            best = min(best, (fd, d))
    return best[1], best[0]


def codeword_segments(codebook, x_t, direction, lo, hi):
    """Breakpoints of the nearest-codeword map along ``x_t + mu d`` on ``[lo, hi]``.

    ``||x + mu d - c||^2`` differs across codewords only by the line
    ``2 mu <d, x - c> + ||x - c||^2``, so the projection is piecewise
    constant in ``mu`` and its pieces are the lower envelope of those lines.
    """
    C = codebook.array.reshape(len(codebook), -1)
    x = np.asarray(x_t, dtype=np.float64).ravel()
    d = np.asarray(direction, dtype=np.float64).ravel()
    diff = x[None, :] - C
    slope = 2.0 * diff @ d
    icpt = np.einsum("ij,ij->i", diff, diff)
    cuts = [lo]
    mu = lo
    cur = int(np.argmin(icpt + slope * mu))
    while True:
        steeper = slope < slope[cur]
        if not steeper.any():
            break
        cross = (icpt[steeper] - icpt[cur]) / (slope[cur] - slope[steeper])
        ahead = cross > mu * (1 + 1e-15) + 1e-300
        if not ahead.any():
            break
        nxt = float(cross[ahead].min())
        if nxt >= hi:
            break
        cuts.append(nxt)
        mu = nxt
        # the winner just past the crossing
        probe = np.nextafter(nxt, np.inf)
        cur = int(np.argmin(icpt + slope * probe))
    cuts.append(hi)
    return np.array(cuts)


def adaptive_step_search(codec, masks, y, x_t, bracket, direction=None, extra_points=(),
                         grid_points=33, refine=5, iteration=None):
    """Find ``mu`` in ``bracket`` minimizing the post-projection residual.

    Parameters
    ----------
    direction : array, optional
        Search direction; defaults to the gradient step ``H^T (y - H x_t)``.
    extra_points : iterable of float
        Step sizes that are always evaluated (e.g. the configured fixed step),
        so the result is never worse than any of them.
    grid_points : int
        Size of the uniform coarse scan (endpoints included).
    refine : int
        Number of best local minima of the scan refined by golden section.
        Enumerable codebooks skip this and evaluate every constant piece
        of the objective instead.

    Returns
    -------
    mu_star, objective : float, float
        A flat objective returns the bracket midpoint.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise InvalidParameterError("bracket must satisfy mu_lo < mu_hi")
    y = np.asarray(y, dtype=np.float64)
    x_t = np.asarray(x_t, dtype=np.float64)
    if direction is None:
        direction = adjoint_array(masks, y - forward_array(masks, x_t))
    f = _Objective(codec, masks, y, x_t, np.asarray(direction, dtype=np.float64), iteration)

    grid = np.linspace(lo, hi, int(grid_points))
    vals = np.array([f(m) for m in grid])
    for m in extra_points:
        if lo <= m <= hi:
            f(float(m))
    exact = getattr(codec, "enumerable", False)
    if exact:
        # one evaluation inside every constant piece
        cuts = codeword_segments(codec, x_t, f.direction, lo, hi)
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b > a:
                f(0.5 * (a + b))
    seen = [v for v, _ in f.seen]
    if max(seen) - min(seen) <= 1e-14 * max(1.0, abs(max(seen))):
        mid = 0.5 * (lo + hi)
        return mid, f(mid)
    if exact:
        val, mu = min(f.seen)
        return float(mu), float(val)

    is_min = np.ones(len(vals), dtype=bool)
    is_min[1:] &= vals[1:] <= vals[:-1]
    is_min[:-1] &= vals[:-1] <= vals[1:]
    cands = np.flatnonzero(is_min)
    cands = cands[np.lexsort((cands, vals[cands]))][:refine]
    width = hi - lo
    for i in cands:
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        golden_section(f, a, b, xtol=1e-6 * width)
    # lowest objective wins; among equal objectives the smallest step
    val, mu = min(f.seen)
    return float(mu), float(val)
