"""Monte Carlo and closed-form checks of the recovery guarantees."""
from .contraction import (ContractionExperimentSpec, ContractionResult, build_contraction_codebook,
                          check_cumulative, check_recursion, corollary_b_epsilon,
                          corollary_failure_prob, run_contraction_experiment, recursion_failure_prob)
from .corollary import (corollary_b_max, corollary_b_sweep, corollary_error_bound)
from .csp import (expected_projection_energy, noise_scaling_ratio, run_csp_experiment,
                  run_noisy_csp_experiment, simulate_csp_events, csp_failure_prob,
                  noisy_csp_failure_prob)
from .report import TailBoundReport, TailRecord, bound_holds, mc_stderr
from .tails import (K_SUBEXP, TailExperimentSpec, bernstein_bound, default_thresholds,
                    product_tail_check, simulate_bernstein_tail, verify_psi2_gaussian)

__all__ = [
    "ContractionExperimentSpec", "ContractionResult", "K_SUBEXP", "TailBoundReport",
    "TailExperimentSpec", "TailRecord", "bernstein_bound", "bound_holds",
    "build_contraction_codebook", "check_cumulative", "check_recursion", "corollary_b_epsilon",
    "corollary_b_max", "corollary_b_sweep", "corollary_error_bound", "corollary_failure_prob",
    "default_thresholds", "expected_projection_energy", "mc_stderr", "noise_scaling_ratio",
    "product_tail_check", "run_contraction_experiment", "run_csp_experiment",
    "run_noisy_csp_experiment", "simulate_bernstein_tail", "simulate_csp_events",
    "csp_failure_prob", "noisy_csp_failure_prob", "verify_psi2_gaussian",
]
