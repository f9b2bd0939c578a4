"""Sub-Gaussian norms and the Bernstein-type tail bound for weighted sums
of centered squared Gaussians."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from ..exceptions import InvalidParameterError
from ..rng import RngSpec
from .report import TailBoundReport, make_record

K_SUBEXP = 8.0 / 3.0
_CHUNK = 10_000


def _gaussian_square_mgf(L: float, sigma: float) -> float:
    """``E exp(X^2 / L^2)`` for ``X ~ N(0, sigma^2)``, finite for ``L^2 > 2 sigma^2``."""
    L2 = L * L
    return math.sqrt(L2 / (L2 - 2.0 * sigma * sigma))


def verify_psi2_gaussian(sigma: float):
    """Return ``(psi2, check_at_bound)`` for ``N(0, sigma^2)``.

    ``psi2`` solves ``E exp(X^2/L^2) = 2`` by root finding; ``check_at_bound``
    evaluates the same expectation at ``L = sqrt(8/3) sigma``.
    """
    if not sigma > 0:
        raise InvalidParameterError("sigma must be positive")
    lo = math.sqrt(2.0) * sigma * (1.0 + 1e-9)
    hi = 10.0 * sigma
    psi2 = brentq(lambda L: _gaussian_square_mgf(L, sigma) - 2.0, lo, hi, xtol=1e-15 * sigma,
                  rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(psi2), _gaussian_square_mgf(math.sqrt(K_SUBEXP) * sigma, sigma)


def bernstein_bound(t: float, weights, K: float = K_SUBEXP) -> float:
    """``exp(-min(t^2/(4K^2||w||_2^2), t/(2K||w||_inf)))`` for ``t >= 0``."""
    w = np.asarray(weights, dtype=np.float64)
    if t <= 0:
        return 1.0
    l2 = float(np.dot(w, w))
    linf = float(np.max(np.abs(w)))
    if linf == 0.0:
        return 0.0
    return math.exp(-min(t * t / (4.0 * K * K * l2), t / (2.0 * K * linf)))


@dataclass
class TailExperimentSpec:
    n: int
    weights: Sequence[float]
    trials: int
    thresholds: Sequence[float]
    rng: RngSpec = field(default_factory=RngSpec)
    subexp_K: float = K_SUBEXP

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.n,) or not np.all(np.isfinite(w)):
            raise InvalidParameterError("weights must be n finite values")
        if self.trials < 1:
            raise InvalidParameterError("trials must be >= 1")
        t = np.asarray(self.thresholds, dtype=np.float64)
        if t.ndim != 1 or np.any(np.diff(t) < 0):
            raise InvalidParameterError("thresholds must be sorted ascending")


def default_thresholds() -> np.ndarray:
    """Eight-point grid used for the uniform-weight, ``n = 100`` setting."""
    return np.linspace(0.0, 0.7, 8)


def sample_weighted_chi2(spec: TailExperimentSpec) -> np.ndarray:
    """``sum_j w_j (Z_j^2 - 1)`` for every trial, sampled in fixed chunks."""
    w = np.asarray(spec.weights, dtype=np.float64)
    out = np.empty(spec.trials)
    for c, start in enumerate(range(0, spec.trials, _CHUNK)):
        m = min(_CHUNK, spec.trials - start)
        z = spec.rng.child(c).generator().standard_normal((m, spec.n))
        out[start:start + m] = (z * z - 1.0) @ w
    return out


def simulate_bernstein_tail(spec: TailExperimentSpec) -> TailBoundReport:
    s = sample_weighted_chi2(spec)
    report = TailBoundReport()
    params = {"n": spec.n, "trials": spec.trials, "K": spec.subexp_K,
              "w_l2": float(np.linalg.norm(spec.weights)),
              "w_inf": float(np.max(np.abs(spec.weights)))}
    for t in spec.thresholds:
        hits = int(np.count_nonzero(s >= t))
        report.records.append(make_record("bernstein", params, t, hits, spec.trials,
                                          bernstein_bound(t, spec.weights, spec.subexp_K)))
    report.extras["sample_max"] = float(s.max())
    return report


def product_tail_check(sigma1: float, sigma2: float, trials: int, thresholds, rng=None,
                       K: float = K_SUBEXP) -> TailBoundReport:
    """Tail of ``|Z Z'|`` for independent centered Gaussians against the
    sub-exponential envelope ``2 exp(-t / (K sigma1 sigma2))``; the product of
    the two sub-Gaussian norms is ``K sigma1 sigma2``."""
    spec = rng if isinstance(rng, RngSpec) else RngSpec(0 if rng is None else int(rng), 7)
    scale = K * sigma1 * sigma2
    hits = np.zeros(len(thresholds), dtype=np.int64)
    t_arr = np.asarray(thresholds, dtype=np.float64)
    for c, start in enumerate(range(0, trials, _CHUNK)):
        m = min(_CHUNK, trials - start)
        z = spec.child(c).generator().standard_normal((2, m))
        p = np.abs(sigma1 * z[0] * sigma2 * z[1])
        hits += np.count_nonzero(p[:, None] >= t_arr[None, :], axis=0)
    report = TailBoundReport()
    params = {"sigma1": sigma1, "sigma2": sigma2, "trials": trials, "K": K}
    for t, h in zip(t_arr, hits):
        report.records.append(make_record("product-tail", params, t, int(h), trials,
                                          min(1.0, 2.0 * math.exp(-t / scale))))
    return report
