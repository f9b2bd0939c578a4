"""scikit-learn style front ends for the recovery algorithms.

``fit(masks)`` binds a solver to a sensing operator; ``transform(y)``
reconstructs a measurement.  Hyperparameters go through ``get_params`` /
``set_params`` like any estimator, so grid searches and ``clone`` work.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..codecs import IdentityCodec
from ..exceptions import InvalidParameterError
from ..sensing import DEFAULT_CLAMP_EPS, MaskStack, Measurement
from .core import SolverConfig, cbgap_recover, cbpgd_recover
from .csp import csp_recover
from .metrics import compute_metrics


def _as_masks(masks) -> MaskStack:
    if isinstance(masks, MaskStack):
        return masks
    return MaskStack(np.asarray(masks, dtype=np.float64))


class _IterativeRecovery(BaseEstimator):
    _kind = None

    def __init__(self, codec=None, step_mu=None, max_iters=150, residual_tol=1e-8,
                 step_mode="fixed", init_mode="zero", clamp_eps=DEFAULT_CLAMP_EPS,
                 step_bracket=None):
        self.codec = codec
        self.step_mu = step_mu
        self.max_iters = max_iters
        self.residual_tol = residual_tol
        self.step_mode = step_mode
        self.init_mode = init_mode
        self.clamp_eps = clamp_eps
        self.step_bracket = step_bracket

    def _config(self) -> SolverConfig:
        return SolverConfig(self.step_mu, self.max_iters, self.residual_tol, self.step_mode,
                            self.clamp_eps, self.init_mode, self.step_bracket)

    def fit(self, masks, y=None):
        self._config()  # validate early
        self.masks_ = _as_masks(masks)
        self.codec_ = self.codec if self.codec is not None else IdentityCodec()
        return self

    def transform(self, y, reference=None, x0=None):
        check_is_fitted(self, "masks_")
        data = y.data if isinstance(y, Measurement) else np.asarray(y, dtype=np.float64)
        run = cbpgd_recover if self._kind == "pgd" else cbgap_recover
        xhat, self.trace_ = run(self.codec_, self.masks_, data, self._config(), reference, x0)
        self.reconstruction_ = xhat
        return xhat

    def score(self, y, x_true):
        """PSNR (dB) of the reconstruction of ``y`` against ``x_true``."""
        return compute_metrics(self.transform(y), x_true)[1]


class CbPGD(_IterativeRecovery):
    """Compression-based projected gradient descent."""

    _kind = "pgd"


class CbGAP(_IterativeRecovery):
    """Compression-based generalized alternating projection."""

    _kind = "gap"


class CSPRecovery(BaseEstimator):
    """Exhaustive compressible signal pursuit over an enumerable codebook."""

    def __init__(self, codebook=None):
        self.codebook = codebook

    def fit(self, masks, y=None):
        if self.codebook is None or not getattr(self.codebook, "enumerable", False):
            raise InvalidParameterError("CSPRecovery needs an enumerable codebook")
        self.masks_ = _as_masks(masks)
        return self

    def transform(self, y):
        check_is_fitted(self, "masks_")
        data = y.data if isinstance(y, Measurement) else np.asarray(y, dtype=np.float64)
        xhat, self.residual_ = csp_recover(self.codebook, self.masks_, data)
        self.reconstruction_ = xhat
        return xhat
