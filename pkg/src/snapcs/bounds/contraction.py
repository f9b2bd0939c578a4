"""Monte Carlo check of the CbPGD/CbGAP contraction recursion.

Signals are drawn around a random enumerable codebook: codewords are
uniform in ``[-rho/2 + a, rho/2 - a]`` and the signal adds uniform
``[-a, a]`` noise with ``a = sqrt(delta)``, so every entry stays within
``rho/2`` and the code distortion on the signal class is at most ``delta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..codecs.toy import CODEBOOK_GUARD, EnumerableCodebook
from ..exceptions import InvalidParameterError, TooLargeCodebookError
from ..parallel import ordered_map
from ..rng import CODEBOOK_STREAM, RngSpec
from ..sensing import MaskStack, forward_array
from ..solvers.core import SolverConfig, cbgap_recover, cbpgd_recover, normalized_error
from .report import TailBoundReport, make_record
from .tails import K_SUBEXP

LN2 = math.log(2.0)
# absolute slack on the recursion check (floating-point only)
_TOL = 1e-12


@dataclass
class ContractionExperimentSpec:
    n_x: int = 8
    n_y: int = 8
    B: int = 2
    rate: float = 1 / 16
    delta: float = 0.0025
    rho: float = 2.0
    lam: float = 0.25
    trials: int = 500
    solver: str = "pgd"
    rng: RngSpec = field(default_factory=lambda: RngSpec(0, 11))
    iters: int = 20
    sigma: float = 0.0  # i.i.d. measurement noise level (adds the noise term when > 0)
    eps_z: float = 1.0
    init: str = "zero"  # or "reference": start at the projected signal
    target_rate: float = 0.01

    def __post_init__(self):
        if not 0 < self.lam < 0.5:
            raise InvalidParameterError("lambda must lie in (0, 0.5)")
        if not 0 < self.delta <= 2 * K_SUBEXP * self.rho**2:
            raise InvalidParameterError("need 0 < delta <= 2 K rho^2")
        if math.sqrt(self.delta) >= self.rho / 2:
            raise InvalidParameterError("sqrt(delta) must be below rho/2")
        if self.solver not in ("pgd", "gap"):
            raise InvalidParameterError(f"unknown solver {self.solver!r}")
        if self.init not in ("zero", "reference"):
            raise InvalidParameterError(f"unknown init {self.init!r}")
        if self.trials < 1 or self.iters < 1:
            raise InvalidParameterError("trials and iters must be >= 1")
        if self.sigma < 0:
            raise InvalidParameterError("sigma must be >= 0")
        if self.sigma > 0 and not 0 < self.eps_z < math.sqrt(self.rho):
            raise InvalidParameterError("eps_z must lie in (0, sqrt(rho))")
        if self.codebook_size > CODEBOOK_GUARD:
            raise TooLargeCodebookError(f"2^(nBr) = {self.codebook_size} exceeds the guard")

    @property
    def n(self) -> int:
        return self.n_x * self.n_y

    @property
    def codebook_size(self) -> int:
        return int(round(2 ** (self.n * self.B * self.rate)))

    @property
    def step(self) -> float:
        # the step sizes under which the recursion is stated
        return 1.0 if self.solver == "pgd" else float(self.B)

    @property
    def noise_term(self) -> float:
        return 2 * self.eps_z * self.sigma / math.sqrt(self.B)


@dataclass
class ContractionResult:
    violation_rate: float
    tested: int
    violations: int
    degenerate: bool
    cumulative_pass_rate: float
    traces: List[np.ndarray]
    report: TailBoundReport


def build_contraction_codebook(spec: ContractionExperimentSpec) -> EnumerableCodebook:
    a = math.sqrt(spec.delta)
    gen = spec.rng.with_stream(CODEBOOK_STREAM).generator()
    lim = spec.rho / 2 - a
    C = gen.uniform(-lim, lim, size=(spec.codebook_size, spec.n_x, spec.n_y, spec.B))
    return EnumerableCodebook(C, amplitude_bound=spec.rho, distortion_bound=spec.delta,
                              rate=spec.rate)


def recursion_failure_prob(spec: ContractionExperimentSpec) -> float:
    """Failure probability of one recursion step, clipped to 1.

    PGD uses the mu = 1 statement (plus the noise event when ``sigma > 0``);
    GAP uses the mu = B statement.
    """
    n, B, r, d, rho, lam = spec.n, spec.B, spec.rate, spec.delta, spec.rho, spec.lam
    nBr = n * B * r
    terms = []
    if spec.solver == "gap":
        terms.append(4 * nBr * LN2 - lam**2 * d**2 * n / (2 * B * rho**4))
        terms.append(2 * nBr * LN2 - n * d / (2 * rho**2 * B**2))
    elif spec.sigma > 0:
        c = 3 * d / (16 * rho**2)
        terms.append(4 * nBr * LN2 - c**2 * lam**2 * n)
        terms.append(math.log(2 ** (2 * nBr) + 1) - n * c**2)
        terms.append(2 * nBr * LN2 - n * (3 * spec.eps_z / (16 * rho)) ** 2 * d)
    else:
        c = d / (2 * K_SUBEXP * rho**2)
        terms.append(4 * nBr * LN2 - c**2 * lam**2 * n)
        terms.append(math.log(2 ** (2 * nBr) + 1) - n * c**2)
    # sum of exponentials, evaluated safely
    m = max(terms)
    if m >= 0:
        return 1.0
    return min(1.0, math.exp(m) * sum(math.exp(t - m) for t in terms))


def corollary_b_epsilon(spec: ContractionExperimentSpec) -> float:
    """Smallest ``eps`` making ``B <= (1+eps)/(100 r) (delta lam / rho^2)^2`` hold."""
    return max(0.0, 100 * spec.rate * spec.B * (spec.rho**2 / (spec.delta * spec.lam)) ** 2 - 1)


def corollary_failure_prob(spec: ContractionExperimentSpec, eps: Optional[float] = None) -> float:
    """``exp(-(3 delta lam / (16 rho^2))^2 eps n)`` at the given (default: minimal) ``eps``."""
    eps = corollary_b_epsilon(spec) if eps is None else eps
    return math.exp(-((3 * spec.delta * spec.lam / (16 * spec.rho**2)) ** 2) * eps * spec.n)


def check_recursion(errors, sqrt_delta, lam, extra=0.0):
    """Count ``(tested, violations)`` over steps that start outside the delta-ball."""
    tested = violations = 0
    for t in range(len(errors) - 1):
        if errors[t] <= sqrt_delta:
            continue
        tested += 1
        if errors[t + 1] > 2 * lam * errors[t] + 4 * sqrt_delta + extra + _TOL:
            violations += 1
    return tested, violations


def check_cumulative(errors, sqrt_delta, lam, extra=0.0) -> bool:
    """``e_t <= (2 lam)^t e_0 + (4 sqrt(delta) + extra)/(1 - 2 lam)`` until the
    trace first enters the delta-ball."""
    floor = (4 * sqrt_delta + extra) / (1 - 2 * lam)
    for t in range(1, len(errors)):
        if errors[t] > (2 * lam) ** t * errors[0] + floor + _TOL:
            return False
        if errors[t] <= sqrt_delta:
            return True
    return True


def run_contraction_experiment(spec: ContractionExperimentSpec, threads=None):
    """Return ``(violation_rate, result)``; ``result.traces`` holds ``e_0..e_T``."""
    book = build_contraction_codebook(spec)
    a = math.sqrt(spec.delta)
    recover = cbpgd_recover if spec.solver == "pgd" else cbgap_recover
    cfg = SolverConfig(step_mu=spec.step, max_iters=spec.iters, residual_tol=0.0)
    shape = (spec.n_x, spec.n_y, spec.B)
    C = book.array

    def one(t):
        gen = spec.rng.child(t).generator()
        masks = MaskStack(gen.standard_normal(shape), "gaussian")
        x = C[gen.integers(len(C))] + gen.uniform(-a, a, size=shape)
        y = forward_array(masks, x)
        if spec.sigma > 0:
            y = y + spec.sigma * gen.standard_normal(shape[:2])
        x_tilde = book.project(x)
        x0 = x_tilde if spec.init == "reference" else None
        _, trace = recover(book, masks, y, cfg, reference=x_tilde, x0=x0)
        return trace.errors()

    traces = ordered_map(one, range(spec.trials), threads=threads)
    extra = spec.noise_term
    tested = violations = cum_fail = 0
    for e in traces:
        te, vi = check_recursion(e, a, spec.lam, extra)
        tested += te
        violations += vi
        cum_fail += not check_cumulative(e, a, spec.lam, extra)
    degenerate = tested == 0
    rate = violations / tested if tested else 0.0

    report = TailBoundReport()
    params = {"solver": spec.solver, "n": spec.n, "B": spec.B, "rate": spec.rate,
              "delta": spec.delta, "rho": spec.rho, "lambda": spec.lam, "iters": spec.iters,
              "sigma": spec.sigma, "eps_z": spec.eps_z, "mu": spec.step,
              "target_rate": spec.target_rate, "trials": spec.trials}
    bound = recursion_failure_prob(spec)
    name = "contraction-noisy" if spec.sigma > 0 else "contraction"
    report.records.append(make_record(name + "-step", params, spec.lam, violations, max(tested, 1),
                                      bound, extra_ok=rate <= spec.target_rate))
    report.records.append(make_record(name + "-cumulative", params, spec.lam, cum_fail, spec.trials,
                                      bound, extra_ok=cum_fail / spec.trials <= spec.target_rate))
    report.extras.update(violation_rate=rate, tested=tested, violations=violations,
                         degenerate=degenerate, cumulative_failures=cum_fail,
                         corollary_eps=corollary_b_epsilon(spec),
                         corollary_failure_prob=corollary_failure_prob(spec))
    result = ContractionResult(rate, tested, violations, degenerate,
                               1 - cum_fail / spec.trials, traces, report)
    return rate, result
