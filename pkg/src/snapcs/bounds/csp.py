"""Monte Carlo checks of the CSP guarantees (noise-free and bounded noise)."""
from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

from ..exceptions import InvalidCodecError, InvalidParameterError, TooLargeCodebookError
from ..codecs.toy import CODEBOOK_GUARD
from ..parallel import ordered_map
from ..rng import RngSpec
from ..sensing import MaskStack, forward_array
from ..solvers.csp import csp_recover
from ..solvers.core import normalized_error
from .report import TailBoundReport, make_record
from .tails import K_SUBEXP

LN2 = math.log(2.0)


def _clip_prob(log_p: float) -> float:
    return 1.0 if log_p >= 0 else math.exp(log_p)


def csp_failure_prob(n: int, B: int, rate: float, eps: float, K: float = K_SUBEXP) -> float:
    """``2^(nBr+1) exp(-eps^2 n / (16 K^2))``, clipped to 1."""
    return _clip_prob((n * B * rate + 1) * LN2 - eps * eps * n / (16 * K * K))


def noisy_csp_failure_prob(n: int, B: int, rate: float, eps: float, K: float = K_SUBEXP) -> float:
    """``2^(nBr+1) exp(-eps^4 n / (64 K^2))``, clipped to 1."""
    return _clip_prob((n * B * rate + 1) * LN2 - eps**4 * n / (64 * K * K))


def _book_info(codebook):
    if not getattr(codebook, "enumerable", False):
        raise InvalidCodecError("experiment needs an enumerable codebook")
    if len(codebook) > CODEBOOK_GUARD:
        raise TooLargeCodebookError(f"{len(codebook)} codewords exceed the guard {CODEBOOK_GUARD}")
    n_x, n_y, B = codebook.signal_shape
    d = codebook.descriptor
    return n_x * n_y, B, d.rate_bits_per_sample, d.distortion_bound, d.amplitude_bound


def _gaussian_only(dist):
    if dist != "gaussian":
        raise InvalidParameterError("the guarantees are stated for N(0,1) masks; use 'gaussian'")


def random_codeword_sampler(codebook) -> Callable[[np.random.Generator], np.ndarray]:
    C = codebook.array
    return lambda gen: C[gen.integers(len(C))].copy()


def expected_projection_energy(x, c, trials: int, rng=None) -> float:
    """Monte Carlo mean of ``||sum_i D_i (x_i - c_i)||^2`` over Gaussian masks."""
    d = np.asarray(x, dtype=np.float64) - np.asarray(c, dtype=np.float64)
    spec = rng if isinstance(rng, RngSpec) else RngSpec(0 if rng is None else int(rng), 8)
    total = 0.0
    chunk = max(1, 2_000_000 // d.size)
    for k, start in enumerate(range(0, trials, chunk)):
        m = min(chunk, trials - start)
        D = spec.child(k).generator().standard_normal((m, *d.shape))
        p = np.einsum("mxyb,xyb->mxy", D, d)
        total += float(np.sum(p * p))
    return total / trials


def simulate_csp_events(codebook, masks_distribution: str = "gaussian",
                        epsilons: Sequence[float] = (0.5, 1.0, 2.0, 16 / 3), trials: int = 1000,
                        rng=None, x=None) -> TailBoundReport:
    """Frequency with which some codeword's projected energy leaves the band
    ``||x - c||^2/n +- B rho^2 eps / 2``, against the union-bound formula.

    ``x`` defaults to a fresh uniformly drawn codeword per trial.
    """
    _gaussian_only(masks_distribution)
    n, B, rate, _, rho = _book_info(codebook)
    eps = np.asarray(epsilons, dtype=np.float64)
    if np.any(eps <= 0) or np.any(eps > 2 * K_SUBEXP * (1 + 1e-12)):
        raise InvalidParameterError("need 0 < eps <= 2K = 16/3")
    spec = rng if isinstance(rng, RngSpec) else RngSpec(0 if rng is None else int(rng), 9)
    C = codebook.array.reshape(len(codebook), n, B)
    sampler = random_codeword_sampler(codebook)
    fixed = None if x is None else np.asarray(x, dtype=np.float64).reshape(n, B)

    def one(t):
        gen = spec.child(t).generator()
        D = gen.standard_normal((n, B))
        xs = fixed if fixed is not None else sampler(gen).reshape(n, B)
        diff = xs[None] - C
        proj = np.einsum("cjb,jb->cj", diff, D)
        q = np.einsum("cj,cj->c", proj, proj) / n
        mean = np.einsum("cjb,cjb->c", diff, diff) / n
        return float(np.max(np.abs(q - mean)))

    worst = np.array(ordered_map(one, range(trials)))
    report = TailBoundReport()
    params = {"n": n, "B": B, "rate": rate, "rho": rho, "codewords": len(codebook), "trials": trials}
    for e in eps:
        hits = int(np.count_nonzero(worst > B * rho * rho * e / 2))
        report.records.append(make_record("csp-events", params, e, hits, trials,
                                          csp_failure_prob(n, B, rate, e)))
    return report


def _noise(gen, n_x, n_y):
    # unit-level noise with (1/sqrt(n))||xi|| <= 1; scaled by sigma_z later
    xi = gen.standard_normal((n_x, n_y))
    level = np.linalg.norm(xi) / math.sqrt(xi.size)
    return xi / level if level > 1 else xi


def run_csp_experiment(codebook, trials: int, rng=None, epsilons: Sequence[float] = (0.5, 1.0, 2.0),
                       sigma_z: float = 0.0, signal_sampler=None, noisy_form: Optional[bool] = None,
                       threads=None) -> TailBoundReport:
    """CSP recovery on seeded Gaussian-mask instances.

    Trial ``t`` draws masks, the signal and a unit noise pattern from
    ``rng.child(t)`` in that order, so runs at different ``sigma_z`` see
    the same masks, signals and noise directions.  With ``noisy_form``
    (default: ``sigma_z > 0``) the error is compared with
    ``sqrt(delta) + rho eps + 2 sigma_z / sqrt(B)``, otherwise the squared
    error with ``delta + rho^2 eps``.
    """
    if sigma_z < 0:
        raise InvalidParameterError("sigma_z must be >= 0")
    n, B, rate, delta, rho = _book_info(codebook)
    n_x, n_y, _ = codebook.signal_shape
    noisy = sigma_z > 0 if noisy_form is None else bool(noisy_form)
    eps = np.asarray(epsilons, dtype=np.float64)
    eps_max = 2 * math.sqrt(K_SUBEXP) if noisy else 2 * K_SUBEXP
    if np.any(eps <= 0) or np.any(eps > eps_max * (1 + 1e-12)):
        raise InvalidParameterError(f"need 0 < eps <= {eps_max:g}")
    spec = rng if isinstance(rng, RngSpec) else RngSpec(0 if rng is None else int(rng), 10)
    sampler = signal_sampler or random_codeword_sampler(codebook)

    def one(t):
        gen = spec.child(t).generator()
        masks = MaskStack(gen.standard_normal((n_x, n_y, B)), "gaussian")
        x = sampler(gen)
        z = sigma_z * _noise(gen, n_x, n_y)
        xhat, _ = csp_recover(codebook, masks, forward_array(masks, x) + z)
        return normalized_error(xhat, x), bool(np.array_equal(xhat, x))

    out = ordered_map(one, range(trials), threads=threads)
    err = np.array([o[0] for o in out])
    report = TailBoundReport()
    params = {"n": n, "B": B, "rate": rate, "delta": delta, "rho": rho, "sigma_z": sigma_z,
              "codewords": len(codebook), "trials": trials}
    name = "csp-noisy" if noisy else "csp"
    for e in eps:
        if noisy:
            hits = int(np.count_nonzero(err > math.sqrt(delta) + rho * e + 2 * sigma_z / math.sqrt(B)))
            bound = noisy_csp_failure_prob(n, B, rate, e)
        else:
            hits = int(np.count_nonzero(err**2 > delta + rho * rho * e))
            bound = csp_failure_prob(n, B, rate, e)
        report.records.append(make_record(name, params, e, hits, trials, bound))
    report.extras.update(errors=err, mean_error=float(err.mean()),
                         exact_recovery_freq=float(np.mean([o[1] for o in out])))
    return report


def run_noisy_csp_experiment(codebook, sigma_z: float, trials: int, rng=None,
                             epsilons: Sequence[float] = (0.25, 0.5, 1.0, 2 * math.sqrt(K_SUBEXP)),
                             signal_sampler=None, threads=None) -> TailBoundReport:
    """Bounded-noise CSP; ``sigma_z = 0`` keeps the noisy error form."""
    return run_csp_experiment(codebook, trials, rng, epsilons, sigma_z, signal_sampler,
                              noisy_form=True, threads=threads)


def noise_scaling_ratio(codebook, sigmas=(0.01, 0.1), trials: int = 200, rng=None,
                        signal_sampler=None):
    """Mean error increment over the matched noise-free run, per noise level.

    Returns ``(increments, ratio)`` where ``ratio`` is the last increment
    over the first; linear scaling gives ``sigmas[-1] / sigmas[0]``.
    """
    base = run_noisy_csp_experiment(codebook, 0.0, trials, rng, signal_sampler=signal_sampler)
    e0 = base.extras["errors"]
    inc = []
    for s in sigmas:
        r = run_noisy_csp_experiment(codebook, s, trials, rng, signal_sampler=signal_sampler)
        inc.append(float(np.mean(r.extras["errors"] - e0)))
    ratio = inc[-1] / inc[0] if inc[0] > 0 else float("inf")
    return inc, ratio
