import csv
import json
import math

import numpy as np
import pytest

from snapcs import RngSpec
from snapcs.bounds import (K_SUBEXP, ContractionExperimentSpec, TailBoundReport,
                           TailExperimentSpec, bernstein_bound, bound_holds,
                           build_contraction_codebook, check_cumulative, check_recursion,
                           corollary_b_epsilon, corollary_b_max, corollary_b_sweep,
                           corollary_error_bound, corollary_failure_prob, default_thresholds,
                           expected_projection_energy, mc_stderr, noise_scaling_ratio,
                           product_tail_check, run_contraction_experiment, run_csp_experiment,
                           run_noisy_csp_experiment, simulate_bernstein_tail, simulate_csp_events,
                           csp_failure_prob, noisy_csp_failure_prob, recursion_failure_prob,
                           verify_psi2_gaussian)
from snapcs.bounds.corollary import corollary_failure_prob as cor1_failure_prob
from snapcs.bounds.report import TailRecord, make_record
from snapcs.codecs import EnumerableCodebook, build_quantized_sparse_codec, random_codebook
from snapcs.exceptions import InvalidParameterError


# -- closed forms ---------------------------------------------------------------

def test_psi2_gaussian():
    psi, check = verify_psi2_gaussian(1.0)
    assert psi == pytest.approx(math.sqrt(8 / 3), abs=1e-6)
    assert check == pytest.approx(2.0, abs=1e-9)
    psi3, check3 = verify_psi2_gaussian(3.0)
    assert psi3 == pytest.approx(3 * math.sqrt(8 / 3), rel=1e-9)
    assert check3 == pytest.approx(2.0, abs=1e-9)
    with pytest.raises(InvalidParameterError):
        verify_psi2_gaussian(0.0)


def test_k_constant():
    assert K_SUBEXP == 8 / 3


def test_csp_failure_exponent_at_2k():
    # eps = 2K makes the exponent n/4
    n, B, r = 64, 2, 1 / 16
    assert csp_failure_prob(n, B, r, 2 * K_SUBEXP) == pytest.approx(2**9 * math.exp(-16), rel=1e-12)
    assert csp_failure_prob(n, B, r, 0.5) == 1.0


def test_noisy_csp_failure_exponent_at_2sqrtk():
    n, B, r = 256, 2, 1 / 64
    eps = 2 * math.sqrt(K_SUBEXP)
    assert noisy_csp_failure_prob(n, B, r, eps) == pytest.approx(2**9 * math.exp(-64), rel=1e-12)


def test_bernstein_bound_values():
    w = np.full(100, 0.01)
    assert bernstein_bound(0.0, w) == 1.0
    assert bernstein_bound(-1.0, w) == 1.0
    # quadratic branch: 0.49 / (4 K^2 0.01)
    assert bernstein_bound(0.7, w) == pytest.approx(math.exp(-0.49 / (0.04 * 64 / 9)), rel=1e-12)
    # linear branch for large t: t / (2 K 0.01)
    assert bernstein_bound(5.0, w) == pytest.approx(math.exp(-5.0 / (0.02 * 8 / 3)), rel=1e-12)
    assert bernstein_bound(1.0, np.zeros(3)) == 0.0


def test_contraction_formulas():
    spec = ContractionExperimentSpec()
    eps = corollary_b_epsilon(spec)
    assert eps == pytest.approx(100 * (1 / 16) * 2 * (4 / (0.0025 * 0.25)) ** 2 - 1)
    p = corollary_failure_prob(spec)
    assert -math.log(p) == pytest.approx((3 * 0.0025 * 0.25 / 64) ** 2 * eps * 64, rel=1e-12)
    # the union bound is vacuous at desk scale
    assert recursion_failure_prob(spec) == 1.0
    big = ContractionExperimentSpec(n_x=100, n_y=100, B=1, rate=1e-9, delta=0.9)
    assert recursion_failure_prob(big) < 1.0


def test_corollary_b_max_and_bounds():
    assert corollary_b_max(0.5, 2.0**-8, 4) == 2
    assert corollary_b_max(0.5, 2.0**-2, 4) == 0
    assert corollary_error_bound(2.0**-8, 4, 2) == pytest.approx(2.0**-8 + 32 * math.sqrt(2))
    assert cor1_failure_prob(2.0**-8, 4, 8) == pytest.approx(2 * math.exp(-8 * 8 / 20))


def test_spec_validation():
    with pytest.raises(InvalidParameterError):
        ContractionExperimentSpec(lam=0.5)
    with pytest.raises(InvalidParameterError):
        ContractionExperimentSpec(delta=2 * K_SUBEXP * 4 * 1.01)
    with pytest.raises(InvalidParameterError):
        ContractionExperimentSpec(sigma=0.1, eps_z=2.0)
    with pytest.raises(InvalidParameterError):
        TailExperimentSpec(3, [1, 1, 1], 10, [0.2, 0.1])
    with pytest.raises(InvalidParameterError):
        TailExperimentSpec(3, [1, 1, np.nan], 10, [0.1])
    with pytest.raises(InvalidParameterError):
        TailExperimentSpec(3, [1, 1, 1], 0, [0.1])


# -- reports ---------------------------------------------------------------------

def test_report_helpers(tmp_path):
    assert mc_stderr(0.5, 100) == 0.05
    assert bound_holds(0.1, 0.05, 0.02)
    assert not bound_holds(0.2, 0.05, 0.02)
    with pytest.raises(ValueError):
        TailRecord("x", {}, 0.0, 1.5, 0.0, 1.0, True)
    rec = make_record("demo", {"b": 1, "a": 2}, 0.5, 3, 10, 0.2)
    assert rec.empirical_freq == 0.3 and rec.passed
    rep = TailBoundReport([rec])
    path = tmp_path / "r.csv"
    rep.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["experiment", "param_json", "threshold", "empirical_freq", "mc_stderr",
                       "theoretical_bound", "pass"]
    assert json.loads(rows[1][1]) == {"a": 2, "b": 1}
    assert rows[1][6] == "true"


# -- Monte Carlo -----------------------------------------------------------------

def test_bernstein_simulation_passes():
    spec = TailExperimentSpec(100, np.full(100, 0.01), 100_000, default_thresholds(), RngSpec(0, 5))
    rep = simulate_bernstein_tail(spec)
    assert len(rep) == 8 and rep.all_pass
    assert rep.records[0].theoretical_bound == 1.0
    # far tail is exhausted
    far = TailExperimentSpec(100, np.full(100, 0.01), 1000, [rep.extras["sample_max"] + 10],
                             RngSpec(0, 5))
    r2 = simulate_bernstein_tail(far)
    assert r2.records[0].empirical_freq == 0.0 and r2.all_pass


def test_bernstein_deterministic(tmp_path):
    spec = TailExperimentSpec(10, np.full(10, 0.1), 5000, [0.0, 0.5, 1.0], RngSpec(3, 5))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    simulate_bernstein_tail(spec).to_csv(a)
    simulate_bernstein_tail(spec).to_csv(b)
    assert a.read_bytes() == b.read_bytes()


def test_product_tail_envelope():
    rep = product_tail_check(1.0, 2.0, 50_000, np.linspace(0, 10, 6), RngSpec(1, 7))
    assert rep.all_pass


def test_csp_events_degenerate_codebook():
    x = np.full((4, 2, 2), 0.3)
    book = EnumerableCodebook(x[None], amplitude_bound=2.0)
    rep = simulate_csp_events(book, "gaussian", (0.5, 1.0), trials=200, x=x)
    assert all(r.empirical_freq == 0.0 for r in rep)
    with pytest.raises(InvalidParameterError):
        simulate_csp_events(book, "bernoulli01", (0.5,), trials=10)
    with pytest.raises(InvalidParameterError):
        simulate_csp_events(book, "gaussian", (6.0,), trials=10)


def test_expectation_identity(gen):
    x = gen.uniform(-1, 1, (4, 4, 2))
    c = gen.uniform(-1, 1, (4, 4, 2))
    ratio = expected_projection_energy(x, c, 100_000, RngSpec(2, 8)) / np.sum((x - c) ** 2)
    assert ratio == pytest.approx(1.0, rel=1e-2)


def test_csp_events_n64():
    book = random_codebook((8, 8, 2), 16, RngSpec(0, 4))
    rep = simulate_csp_events(book, "gaussian", (1.0,), trials=10_000, rng=RngSpec(0, 9))
    assert rep.all_pass


def test_csp_experiment_codeword_inputs():
    book = random_codebook((6, 2, 2), 64, RngSpec(1, 4))
    rep = run_csp_experiment(book, 200, RngSpec(1, 10))
    assert rep.all_pass
    assert rep.extras["exact_recovery_freq"] > 0.95


def test_noisy_csp_zero_noise_matches_noise_free():
    book = random_codebook((6, 2, 2), 64, RngSpec(1, 4))
    a = run_csp_experiment(book, 100, RngSpec(1, 10))
    b = run_noisy_csp_experiment(book, 0.0, 100, RngSpec(1, 10))
    np.testing.assert_array_equal(a.extras["errors"], b.extras["errors"])


@pytest.mark.parametrize("sigma", [0.01, 0.1])
def test_noisy_csp_passes(sigma):
    book = random_codebook((6, 2, 2), 64, RngSpec(1, 4))
    rep = run_noisy_csp_experiment(book, sigma, 200, RngSpec(1, 10))
    assert rep.all_pass
    # recovered error stays within the noise slack for exact recoveries
    assert rep.extras["mean_error"] <= 2 * sigma / math.sqrt(2) + 1e-12 or \
        rep.extras["exact_recovery_freq"] > 0.9


def test_noise_scaling_linear():
    book = build_quantized_sparse_codec(8, 2, 1, 10, RngSpec(5, 4))
    inc, ratio = noise_scaling_ratio(book, (0.01, 0.1), trials=200, rng=RngSpec(5, 10))
    assert inc[1] > inc[0] > 0
    assert 10 / 3 <= ratio <= 30


def test_recursion_checkers():
    e = np.array([1.0, 0.4, 0.1, 0.01, 0.02])
    assert check_recursion(e, 0.05, 0.25) == (3, 0)
    assert check_recursion(np.array([1.0, 0.9]), 0.05, 0.25) == (1, 1)
    assert check_cumulative(e, 0.05, 0.25)
    assert not check_cumulative(np.array([1.0, 0.95]), 0.05, 0.25)


def test_contraction_codebook_within_amplitude():
    spec = ContractionExperimentSpec(trials=1)
    book = build_contraction_codebook(spec)
    assert len(book) == 256
    assert np.max(np.abs(book.array)) <= 1 - 0.05


def test_contraction_reference_init_degenerate():
    spec = ContractionExperimentSpec(trials=20, init="reference")
    rate, res = run_contraction_experiment(spec)
    assert rate == 0.0 and res.tested == 0 and res.degenerate


@pytest.mark.parametrize("solver", ["pgd", "gap"])
def test_contraction_small_run(solver):
    spec = ContractionExperimentSpec(trials=60, solver=solver, rng=RngSpec(4, 11))
    rate, res = run_contraction_experiment(spec)
    assert res.tested > 0 and rate <= 0.01
    assert res.cumulative_pass_rate >= 0.99
    assert res.report.all_pass


def test_contraction_deterministic_across_threads():
    spec = ContractionExperimentSpec(trials=30, rng=RngSpec(6, 11))
    _, a = run_contraction_experiment(spec, threads=1)
    _, b = run_contraction_experiment(spec, threads=4)
    for x, y in zip(a.traces, b.traces):
        np.testing.assert_array_equal(x, y)


def test_corollary_sweep_marks_infeasible():
    rep = corollary_b_sweep(0.5, (2.0**-2, 2.0**-8), eta=4, trials=50, rng=RngSpec(0, 12))
    points = rep.extras["points"]
    assert not points[0].feasible and points[0].B == 0
    assert points[1].feasible and points[1].B == 2
    assert len(rep) == 1 and rep.all_pass
    with pytest.raises(ValueError):
        corollary_b_sweep(0.5, (1.5,), trials=5)
