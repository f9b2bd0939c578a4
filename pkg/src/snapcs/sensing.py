"""Snapshot sensing operator ``H = [D_1, ..., D_B]`` with diagonal blocks.

Only the diagonal entries of each ``D_i`` are stored, as an array of shape
``(n_x, n_y, B)``.  Pixel ``j`` of the measurement combines pixel ``j`` of
every frame, so forward, adjoint and ``H H^T`` are all pixelwise.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidParameterError, InvalidShapeError
from .rng import RngSpec, as_generator

logger = logging.getLogger(__name__)

DISTRIBUTIONS = ("gaussian", "bernoulli01")
DEFAULT_CLAMP_EPS = 1e-12


@dataclass
class MultiFrameSignal:
    """A ``(n_x, n_y, B)`` stack of frames.

    ``normalized`` marks signals whose entries are known to lie in [0, 1]
    (e.g. loaded from 8/16-bit images).
    """

    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise InvalidShapeError(f"signal must be 3-D (n_x, n_y, B), got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise InvalidParameterError("signal contains non-finite entries")
        if self.normalized and (self.data.min(initial=0.0) < 0.0 or self.data.max(initial=0.0) > 1.0):
            raise InvalidParameterError("normalized signal has entries outside [0, 1]")

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    @property
    def shape(self):
        return self.data.shape

    @property
    def n(self) -> int:
        return self.data.shape[0] * self.data.shape[1]

    @property
    def frames(self) -> int:
        return self.data.shape[2]


@dataclass
class Measurement:
    """Snapshot measurement ``y`` (shape ``(n_x, n_y)``) and the noise level used."""

    data: np.ndarray
    noise_sigma: float = 0.0
    # pixels zeroed by the pseudo-inverse in gram_apply_inverse
    clamped: int = 0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise InvalidShapeError(f"measurement must be 2-D (n_x, n_y), got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise InvalidParameterError("measurement contains non-finite entries")
        if self.noise_sigma < 0:
            raise InvalidParameterError("noise_sigma must be nonnegative")

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    @property
    def shape(self):
        return self.data.shape


@dataclass
class MaskStack:
    """Diagonal mask entries ``D_ij`` and the Gram diagonal ``R_j = sum_i D_ij^2``."""

    diag: np.ndarray
    distribution: str = "gaussian"
    gram_diag: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.diag = np.asarray(self.diag, dtype=np.float64)
        if self.diag.ndim != 3 or 0 in self.diag.shape:
            raise InvalidShapeError(f"mask diagonal must be a nonempty 3-D array, got {self.diag.shape}")
        if self.distribution not in DISTRIBUTIONS:
            raise InvalidParameterError(f"unknown mask distribution {self.distribution!r}")
        if self.gram_diag is None:
            self.gram_diag = gram_diagonal(self.diag)
        else:
            self.gram_diag = np.asarray(self.gram_diag, dtype=np.float64)
            if self.gram_diag.shape != self.diag.shape[:2]:
                raise InvalidShapeError("gram_diag shape does not match the mask frames")

    @property
    def shape(self):
        return self.diag.shape

    @property
    def frames(self) -> int:
        return self.diag.shape[2]

    @property
    def n(self) -> int:
        return self.diag.shape[0] * self.diag.shape[1]

    def to_dense(self) -> np.ndarray:
        """Materialize ``H`` as an ``n x nB`` matrix (test oracles only).

        Columns follow the frame-stacked order ``x = [x_1; ...; x_B]`` with
        each frame flattened in C order.
        """
        n, B = self.n, self.frames
        H = np.zeros((n, n * B))
        d = self.diag.reshape(n, B)
        rows = np.arange(n)
        for i in range(B):
            H[rows, i * n + rows] = d[:, i]
        return H


def gram_diagonal(diag) -> np.ndarray:
    diag = np.asarray(diag, dtype=np.float64)
    # explicit left-to-right accumulation over frames keeps the result bit-stable
    out = np.zeros(diag.shape[:2])
    for i in range(diag.shape[2]):
        out += diag[:, :, i] * diag[:, :, i]
    return out


def stack_frames(x) -> np.ndarray:
    """Flatten a ``(n_x, n_y, B)`` signal into the frame-stacked vector ``[x_1; ...; x_B]``."""
    x = np.asarray(x, dtype=np.float64)
    return np.moveaxis(x, 2, 0).reshape(-1)


def unstack_frames(v, shape) -> np.ndarray:
    n_x, n_y, B = shape
    return np.moveaxis(np.asarray(v, dtype=np.float64).reshape(B, n_x, n_y), 0, 2)


def generate_masks(shape, distribution: str = "gaussian", rng=None) -> MaskStack:
    """Draw i.i.d. mask entries of the given ``(n_x, n_y, B)`` shape.

    ``gaussian`` draws N(0, 1); ``bernoulli01`` draws {0, 1} with p = 0.5.
    """
    shape = tuple(int(s) for s in shape)
    if len(shape) != 3 or min(shape) < 1:
        raise InvalidShapeError(f"mask shape must be three positive ints, got {shape}")
    if distribution not in DISTRIBUTIONS:
        raise InvalidParameterError(f"unknown mask distribution {distribution!r}")
    gen = as_generator(rng if rng is not None else RngSpec(0, 1))
    if distribution == "gaussian":
        diag = gen.standard_normal(shape)
    else:
        diag = gen.integers(0, 2, size=shape).astype(np.float64)
    return MaskStack(diag, distribution)


def _check_signal(masks: MaskStack, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != masks.diag.shape:
        raise InvalidShapeError(f"signal shape {x.shape} does not match masks {masks.diag.shape}")
    return x


def _check_measurement(masks: MaskStack, e) -> np.ndarray:
    e = np.asarray(e, dtype=np.float64)
    if e.shape != masks.diag.shape[:2]:
        raise InvalidShapeError(f"measurement shape {e.shape} does not match masks {masks.diag.shape[:2]}")
    return e


def forward_array(masks: MaskStack, x) -> np.ndarray:
    x = _check_signal(masks, x)
    out = np.zeros(x.shape[:2])
    for i in range(x.shape[2]):
        out += masks.diag[:, :, i] * x[:, :, i]
    return out


def adjoint_array(masks: MaskStack, e) -> np.ndarray:
    e = _check_measurement(masks, e)
    return masks.diag * e[:, :, None]


def forward(masks: MaskStack, x) -> Measurement:
    """Noise-free snapshot ``y_j = sum_i D_ij x_ij``."""
    return Measurement(forward_array(masks, x), 0.0)


def adjoint(masks: MaskStack, e) -> MultiFrameSignal:
    """``H^T e``: frame ``i`` of the output is ``D_i e``."""
    return MultiFrameSignal(adjoint_array(masks, e))


def gram_inverse_array(masks: MaskStack, e, clamp_eps: float = DEFAULT_CLAMP_EPS):
    """Return ``(R^+ e, n_clamped)`` where pixels with ``R_j < clamp_eps`` map to 0."""
    if not clamp_eps > 0:
        raise InvalidParameterError("clamp_eps must be positive")
    e = _check_measurement(masks, e)
    R = masks.gram_diag
    ok = R >= clamp_eps
    out = np.zeros_like(e)
    np.divide(e, R, out=out, where=ok)
    return out, int(ok.size - np.count_nonzero(ok))


def gram_apply_inverse(masks: MaskStack, e, clamp_eps: float = DEFAULT_CLAMP_EPS) -> Measurement:
    """Elementwise ``R^{-1} e`` with a pseudo-inverse at degenerate pixels."""
    out, n_clamped = gram_inverse_array(masks, e, clamp_eps)
    if n_clamped:
        logger.warning("gram_apply_inverse: %d pixel(s) with R_j < %g set to 0", n_clamped, clamp_eps)
    return Measurement(out, clamped=n_clamped)


def add_noise(y, sigma: float, rng=None) -> Measurement:
    """Return ``y + z`` with ``z`` i.i.d. N(0, sigma^2)."""
    if not sigma >= 0:
        raise InvalidParameterError(f"sigma must be nonnegative, got {sigma}")
    data = np.asarray(y, dtype=np.float64)
    if sigma == 0:
        return Measurement(data.copy(), 0.0)
    gen = as_generator(rng if rng is not None else RngSpec(0, 2))
    return Measurement(data + sigma * gen.standard_normal(data.shape), float(sigma))
