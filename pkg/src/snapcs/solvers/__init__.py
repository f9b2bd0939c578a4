from .core import (IterationRecord, IterationTrace, SolverConfig, backprojection,
                   cbgap_recover, cbpgd_recover, normalized_error)
from .csp import csp_recover, csp_residuals
from .estimators import CbGAP, CbPGD, CSPRecovery
from .metrics import compute_metrics, psnr_from_mse
from .stepsearch import adaptive_step_search, golden_section

__all__ = [
    "CSPRecovery", "CbGAP", "CbPGD", "IterationRecord", "IterationTrace", "SolverConfig",
    "adaptive_step_search", "backprojection", "cbgap_recover", "cbpgd_recover",
    "compute_metrics", "csp_recover", "csp_residuals", "golden_section", "normalized_error",
    "psnr_from_mse",
]
