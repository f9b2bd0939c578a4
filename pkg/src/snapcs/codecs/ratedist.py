"""Empirical rate/distortion accounting and alpha-dimension fits."""
from __future__ import annotations

import math

import numpy as np

from ..exceptions import InvalidParameterError


def average_distortion(x, xhat) -> float:
    """``(1/nB) ||x - xhat||^2``."""
    x = np.asarray(x, dtype=np.float64)
    d = x - np.asarray(xhat, dtype=np.float64)
    return float(np.vdot(d, d) / x.size)


def estimate_rate_distortion(codec, corpus):
    """Return ``(rate, distortion)`` of ``codec`` on ``corpus``.

    Distortion is the worst per-entry squared error over the corpus.  Rate
    is ``log2 |C| / (nB)`` for enumerable codebooks and the largest
    per-signal bit cost divided by ``nB`` otherwise.
    """
    corpus = [np.asarray(x, dtype=np.float64) for x in corpus]
    if not corpus:
        raise InvalidParameterError("corpus must be nonempty")
    distortion = max(average_distortion(x, codec.project(x)) for x in corpus)
    if codec.enumerable:
        rate = math.log2(len(codec)) / corpus[0].size
    else:
        rate = max(codec.bits_for(x) / x.size for x in corpus)
    return float(rate), float(distortion)


def fit_alpha_dimension(rates, distortions) -> float:
    """Least-squares slope of ``2 r`` against ``log2(1/delta)``.

    The slope discards the constant location-bit overhead that dominates
    the raw ratio ``2 r / log(1/delta)`` at finite resolution.
    """
    r = np.asarray(rates, dtype=np.float64)
    d = np.asarray(distortions, dtype=np.float64)
    if r.shape != d.shape or r.size < 2 or np.any(d <= 0):
        raise InvalidParameterError("need >= 2 points with positive distortion")
    slope, _ = np.polyfit(np.log2(1.0 / d), 2.0 * r, 1)
    return float(slope)
