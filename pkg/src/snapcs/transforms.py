"""Separable orthonormal DCT-II and top-k hard thresholding."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import InvalidParameterError, UnsupportedRankError

MAX_RANK = 4


@dataclass
class CoeffTensor:
    data: np.ndarray
    basis_tag: str = "spatial"

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.basis_tag not in ("spatial", "dct"):
            raise InvalidParameterError(f"unknown basis_tag {self.basis_tag!r}")

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


@lru_cache(maxsize=None)
def dct_matrix(length: int) -> np.ndarray:
    """Orthonormal DCT-II matrix ``C`` with ``X = C @ x``.

    ``C[k, m] = s_k cos(pi (2m + 1) k / (2L))`` with ``s_0 = sqrt(1/L)`` and
    ``s_k = sqrt(2/L)`` otherwise.
    """
    L = int(length)
    m = np.arange(L)
    C = np.cos(np.pi * (2 * m[None, :] + 1) * m[:, None] / (2 * L))
    C *= np.sqrt(2.0 / L)
    C[0] = np.sqrt(1.0 / L)
    C.setflags(write=False)
    return C


def _apply_separable(a: np.ndarray, axes, inverse: bool) -> np.ndarray:
    out = np.asarray(a, dtype=np.float64)
    for ax in axes:
        C = dct_matrix(out.shape[ax])
        M = C.T if inverse else C
        out = np.moveaxis(np.tensordot(M, out, axes=([1], [ax])), 0, ax)
    return out


def dctn(a, axes=None) -> np.ndarray:
    """Array-level orthonormal DCT over ``axes`` (all axes by default)."""
    a = np.asarray(a, dtype=np.float64)
    return _apply_separable(a, range(a.ndim) if axes is None else axes, inverse=False)


def idctn(a, axes=None) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    return _apply_separable(a, range(a.ndim) if axes is None else axes, inverse=True)


def _check_rank(t: CoeffTensor):
    if not 1 <= t.data.ndim <= MAX_RANK:
        raise UnsupportedRankError(f"DCT supports ranks 1-{MAX_RANK}, got {t.data.ndim}")


def dct_forward(t) -> CoeffTensor:
    if not isinstance(t, CoeffTensor):
        t = CoeffTensor(t, "spatial")
    if t.basis_tag != "spatial":
        raise InvalidParameterError("dct_forward expects a spatial-domain tensor")
    _check_rank(t)
    return CoeffTensor(dctn(t.data), "dct")


def dct_inverse(t) -> CoeffTensor:
    if not isinstance(t, CoeffTensor):
        t = CoeffTensor(t, "dct")
    if t.basis_tag != "dct":
        raise InvalidParameterError("dct_inverse expects a coefficient-domain tensor")
    _check_rank(t)
    return CoeffTensor(idctn(t.data), "spatial")


def top_k_indices(values, k: int) -> np.ndarray:
    """Flat indices of the ``k`` largest magnitudes; ties go to the lower index."""
    flat = np.abs(np.asarray(values, dtype=np.float64)).ravel()
    k = min(int(k), flat.size)
    if k <= 0:
        return np.empty(0, dtype=np.intp)
    return np.argsort(-flat, kind="stable")[:k]


def keep_top_k(t, k: int):
    """Zero all but the ``k`` largest-magnitude entries.

    Returns the same kind of object it was given (CoeffTensor or ndarray).
    """
    if k < 0:
        raise InvalidParameterError("k must be nonnegative")
    data = np.asarray(t, dtype=np.float64)
    if k >= data.size:
        out = data.copy()
    else:
        out = np.zeros_like(data)
        idx = top_k_indices(data, k)
        out.flat[idx] = data.flat[idx]
    if isinstance(t, CoeffTensor):
        return CoeffTensor(out, t.basis_tag)
    return out
