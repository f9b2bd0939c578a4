"""Compression-code abstraction: only the composite ``g(f(.))`` is needed."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..exceptions import InvalidParameterError


@dataclass(frozen=True)
class CodecDescriptor:
    """Rate ``r`` (bits per entry), distortion ``delta`` and amplitude bound ``rho``.

    Signals handled by the code satisfy ``max |x| <= rho / 2``.
    """

    rate_bits_per_sample: float
    distortion_bound: float
    amplitude_bound: float

    def __post_init__(self):
        if self.rate_bits_per_sample < 0:
            raise InvalidParameterError("rate must be nonnegative")
        if self.distortion_bound < 0:
            raise InvalidParameterError("distortion must be nonnegative")
        if not self.amplitude_bound > 0:
            raise InvalidParameterError("amplitude_bound must be positive")


class Codec(BaseEstimator, TransformerMixin):
    """Base class for codecs used as projections.

    Subclasses implement :meth:`project`.  ``transform`` maps a signal (or
    a batch of signals stacked on a leading axis) through the projection,
    so codecs slot into scikit-learn pipelines.
    """

    enumerable = False

    def fit(self, X=None, y=None):
        return self

    def project(self, s, iteration=None) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def transform(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 4:
            return np.stack([self.project(x) for x in X])
        return self.project(X)

    def bits_for(self, s) -> float:
        """Bits needed to describe ``g(f(s))``."""
        raise NotImplementedError
