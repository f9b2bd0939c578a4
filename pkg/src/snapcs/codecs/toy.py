"""Enumerable codebooks: exact nearest-codeword projection."""
from __future__ import annotations

import itertools
import math

import numpy as np

from ..exceptions import InvalidCodecError, InvalidParameterError, TooLargeCodebookError
from ..rng import RngSpec, as_generator
from .base import Codec, CodecDescriptor

CODEBOOK_GUARD = 2**20
_CHUNK = 4096


class EnumerableCodebook(Codec):
    """A finite codebook ``C`` whose projection is the exact nearest codeword.

    Parameters
    ----------
    codewords : array, shape (|C|, n_x, n_y, B)
    amplitude_bound : float
        ``rho``; every codeword must satisfy ``max |c| <= rho / 2``.
    distortion_bound : float
        ``delta`` of the code on its signal class.
    rate : float, optional
        Bits per entry; defaults to ``log2 |C| / (nB)``.
    """

    enumerable = True

    def __init__(self, codewords, amplitude_bound=2.0, distortion_bound=0.0, rate=None):
        self.codewords = codewords
        self.amplitude_bound = amplitude_bound
        self.distortion_bound = distortion_bound
        self.rate = rate
        self._validate()

    def _validate(self):
        C = np.asarray(self.codewords, dtype=np.float64)
        if C.ndim == 3:
            C = C[None]
        if C.ndim != 4:
            raise InvalidCodecError(f"codewords must have shape (|C|, n_x, n_y, B), got {C.shape}")
        if C.shape[0] == 0:
            raise InvalidCodecError("empty codebook")
        if C.shape[0] > CODEBOOK_GUARD:
            raise TooLargeCodebookError(f"{C.shape[0]} codewords exceed the guard {CODEBOOK_GUARD}")
        if np.max(np.abs(C)) > self.amplitude_bound / 2 * (1 + 1e-12):
            raise InvalidCodecError("codeword exceeds the amplitude bound rho/2")
        flat = C.reshape(C.shape[0], -1)
        if np.unique(flat, axis=0).shape[0] != flat.shape[0]:
            raise InvalidCodecError("duplicate codewords")
        self._C = C
        self._flat = flat
        nB = flat.shape[1]
        r = math.log2(C.shape[0]) / nB if self.rate is None else float(self.rate)
        if C.shape[0] > 2 ** (nB * r) * (1 + 1e-9):
            raise InvalidCodecError("codebook larger than 2^(nBr)")
        self.descriptor = CodecDescriptor(r, float(self.distortion_bound), float(self.amplitude_bound))

    def __len__(self):
        return self._C.shape[0]

    @property
    def signal_shape(self):
        return self._C.shape[1:]

    @property
    def array(self) -> np.ndarray:
        return self._C

    def distances(self, s) -> np.ndarray:
        """Squared distances ``||s - c||^2`` to every codeword, computed directly."""
        s = np.asarray(s, dtype=np.float64).reshape(-1)
        if s.size != self._flat.shape[1]:
            raise InvalidParameterError("signal shape does not match the codebook")
        out = np.empty(self._flat.shape[0])
        for start in range(0, out.size, _CHUNK):
            diff = self._flat[start:start + _CHUNK] - s
            out[start:start + _CHUNK] = np.einsum("ij,ij->i", diff, diff)
        return out

    def nearest_index(self, s) -> int:
        # argmin returns the first minimum: ties go to the lowest index
        return int(np.argmin(self.distances(s)))

    def project(self, s, iteration=None) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        if not np.all(np.isfinite(s)):
            raise InvalidParameterError("cannot project a non-finite signal")
        return self._C[self.nearest_index(s)].copy()

    def bits_for(self, s) -> float:
        return math.log2(len(self))


def quantization_grid(quant_bits: int, rho: float) -> np.ndarray:
    """Midrise uniform grid of ``2**quant_bits`` levels inside ``[-rho/2, rho/2]``."""
    L = 2 ** int(quant_bits)
    step = rho / L
    return -rho / 2 + step * (np.arange(L) + 0.5)


def build_quantized_sparse_codec(n, B, k, quant_bits, rng=None, rho=2.0, frame_shape=None):
    """Codebook for the shifting-sparse multi-frame model.

    Frame 1 is ``k``-sparse with values on a ``quant_bits``-bit grid.  Frames
    2..B carry the same values at positions given by a fixed random pixel
    permutation per frame (drawn from ``rng``).  The codebook enumerates
    every support of frame 1 and every value tuple, so
    ``|C| = binom(n, k) * 2**(k * quant_bits)``.
    """
    n, B, k, quant_bits = int(n), int(B), int(k), int(quant_bits)
    if not 1 <= k <= n:
        raise InvalidParameterError("need 1 <= k <= n")
    if quant_bits < 1 or B < 1:
        raise InvalidParameterError("need quant_bits >= 1 and B >= 1")
    if frame_shape is None:
        frame_shape = (n, 1)
    if frame_shape[0] * frame_shape[1] != n:
        raise InvalidParameterError("frame_shape does not have n pixels")
    size = math.comb(n, k) * 2 ** (k * quant_bits)
    if size > CODEBOOK_GUARD:
        raise TooLargeCodebookError(f"codebook would have {size} codewords (guard {CODEBOOK_GUARD})")

    gen = as_generator(rng if rng is not None else RngSpec(0, 4))
    perms = [np.arange(n)] + [gen.permutation(n) for _ in range(B - 1)]
    grid = quantization_grid(quant_bits, rho)

    supports = np.array(list(itertools.combinations(range(n), k)), dtype=np.intp)
    values = np.array(list(itertools.product(grid, repeat=k)))
    flat = np.zeros((len(supports), len(values), B, n))
    sup_idx = np.arange(len(supports))[:, None, None]
    val_idx = np.arange(len(values))[None, :, None]
    for i, perm in enumerate(perms):
        pos = perm[supports][:, None, :]
        flat[sup_idx, val_idx, i, pos] = values[None, :, :]
    flat = flat.reshape(size, B, n)
    codewords = np.moveaxis(flat, 1, 2).reshape(size, *frame_shape, B)

    step = rho / 2**quant_bits
    delta = k * step**2 / (4 * n)
    book = EnumerableCodebook(codewords, amplitude_bound=rho, distortion_bound=delta)
    book.permutations = perms
    book.k = k
    return book


def random_codebook(shape, size, rng=None, rho=2.0, distortion_bound=0.0):
    """``size`` codewords drawn uniformly from ``[-rho/2, rho/2]^(nB)``."""
    if size > CODEBOOK_GUARD:
        raise TooLargeCodebookError(f"{size} codewords exceed the guard {CODEBOOK_GUARD}")
    gen = as_generator(rng if rng is not None else RngSpec(0, 4))
    C = gen.uniform(-rho / 2, rho / 2, size=(int(size), *shape))
    return EnumerableCodebook(C, amplitude_bound=rho, distortion_bound=distortion_bound)


class IdentityCodec(Codec):
    """``g(f(s)) = s``; useful for checking the solver algebra."""

    def project(self, s, iteration=None):
        return np.array(s, dtype=np.float64)
