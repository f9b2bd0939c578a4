"""Frame-count sweep for the CSP sampling-rate corollary.

``log`` is taken base 2 throughout: this matches the hand-evaluated example
(``r = 0.5, delta = 2^-8, eta = 4`` gives ``B = 2``) and the corollary's
proof goes through unchanged because the union term is a power of two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..codecs.toy import CODEBOOK_GUARD, EnumerableCodebook
from ..rng import CODEBOOK_STREAM, RngSpec
from .csp import run_csp_experiment
from .report import TailBoundReport, make_record


def corollary_b_max(rate: float, delta: float, eta: float) -> int:
    """``floor(log2(1/delta) / (2 r eta))``; below 1 means infeasible."""
    return int(math.floor(math.log2(1.0 / delta) / (2.0 * rate * eta) + 1e-12))


def corollary_error_bound(delta: float, eta: float, rho: float) -> float:
    return delta + 8 * rho * rho * math.sqrt(math.log2(1.0 / delta) / eta)


def corollary_failure_prob(delta: float, eta: float, n: int) -> float:
    return min(1.0, 2.0 * math.exp(-math.log2(1.0 / delta) * n / (5.0 * eta)))


@dataclass
class SweepPoint:
    delta: float
    B: int
    feasible: bool
    reason: str = ""


def corollary_b_sweep(rate: float = 0.5, deltas: Sequence[float] = (2.0**-4, 2.0**-8, 2.0**-12),
                      eta: float = 4.0, trials: int = 200, rng=None, n_x: int = 8, n_y: int = 1,
                      rho: float = 2.0, threads=None) -> TailBoundReport:
    """For each ``delta``: largest admissible ``B``, then the CSP experiment on a
    rate-``r`` random codebook with distortion ``delta``.  Infeasible points
    are listed in ``report.extras['points']`` and produce no record."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    spec = rng if isinstance(rng, RngSpec) else RngSpec(0 if rng is None else int(rng), 12)
    n = n_x * n_y
    report = TailBoundReport()
    points: List[SweepPoint] = []
    for k, delta in enumerate(deltas):
        if not 0 < delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        B = corollary_b_max(rate, delta, eta)
        if B < 1:
            points.append(SweepPoint(delta, B, False, "B < 1"))
            continue
        bits = n * B * rate
        size = int(round(2**bits))
        if size > CODEBOOK_GUARD or abs(2**bits - size) > 1e-9:
            points.append(SweepPoint(delta, B, False, f"2^(nBr) = 2^{bits:g} not a usable codebook size"))
            continue
        a = math.sqrt(delta)
        gen = spec.child(k).with_stream(CODEBOOK_STREAM).generator()
        C = gen.uniform(-(rho / 2 - a), rho / 2 - a, size=(size, n_x, n_y, B))
        book = EnumerableCodebook(C, amplitude_bound=rho, distortion_bound=delta, rate=rate)
        sampler = lambda g, C=C: C[g.integers(len(C))] + g.uniform(-a, a, size=C.shape[1:])
        run = run_csp_experiment(book, trials, spec.child(k), epsilons=(1.0,),
                                 signal_sampler=sampler, threads=threads)
        err2 = run.extras["errors"] ** 2
        bound = corollary_error_bound(delta, eta, rho)
        params = {"rate": rate, "delta": delta, "eta": eta, "B": B, "n": n, "rho": rho,
                  "error_bound": bound, "mean_sq_error": float(err2.mean()), "trials": trials}
        hits = int(np.count_nonzero(err2 > bound))
        report.records.append(make_record("corollary-b", params, delta, hits, trials,
                                          corollary_failure_prob(delta, eta, n)))
        points.append(SweepPoint(delta, B, True))
    report.extras["points"] = points
    return report
