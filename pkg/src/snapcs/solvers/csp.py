"""Compressible signal pursuit: exhaustive minimum-residual codeword search."""
from __future__ import annotations

import numpy as np

from ..exceptions import InvalidCodecError, InvalidShapeError, TooLargeCodebookError
from ..codecs.toy import CODEBOOK_GUARD

_CHUNK = 2048


def csp_residuals(codebook, masks, y) -> np.ndarray:
    """``||y - H c||_2`` for every codeword ``c``, in codebook order."""
    if not getattr(codebook, "enumerable", False):
        raise InvalidCodecError("CSP needs an enumerable codebook")
    if len(codebook) > CODEBOOK_GUARD:
        raise TooLargeCodebookError(f"{len(codebook)} codewords exceed the guard {CODEBOOK_GUARD}")
    C = codebook.array
    if C.shape[1:] != masks.shape:
        raise InvalidShapeError("codebook signal shape does not match masks")
    y = np.asarray(y, dtype=np.float64)
    out = np.empty(C.shape[0])
    for start in range(0, C.shape[0], _CHUNK):
        block = C[start:start + _CHUNK]
        meas = np.zeros(block.shape[:3])
        for i in range(masks.frames):
            meas += masks.diag[None, :, :, i] * block[..., i]
        r = (y[None] - meas).reshape(len(block), -1)
        out[start:start + _CHUNK] = np.sqrt(np.einsum("ij,ij->i", r, r))
    return out


def csp_recover(codebook, masks, y):
    """Return ``(xhat, residual)`` with the lowest-index minimizer of the residual."""
    res = csp_residuals(codebook, masks, y)
    i = int(np.argmin(res))
    return codebook.array[i].copy(), float(res[i])
