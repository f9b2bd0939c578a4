"""Nonlocal-similarity (NLS) video codec.

Encoder: cut the video into overlapping ``p_x x p_y x B`` blocks on a
stride grid, group each reference block with its ``G`` nearest grid blocks
(l2 distance, inside a search window), take the 4-D DCT of the group and
keep the largest coefficients.  Decoder: inverse DCT per group, put every
block back where it came from and average overlapping pixels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ..exceptions import DecodeError, InvalidParameterError
from ..parallel import ordered_map
from ..transforms import dctn, idctn, top_k_indices
from .base import Codec

COEFF_BITS = 32


@dataclass(frozen=True)
class NlsParams:
    block_w: int = 8
    block_h: int = 8
    stride: int = 4
    group_size: int = 16
    search_window: int = 20
    keep_per_group: Optional[int] = None

    def __post_init__(self):
        if self.block_w < 1 or self.block_h < 1:
            raise InvalidParameterError("block dimensions must be positive")
        if not 1 <= self.stride <= self.block_w:
            raise InvalidParameterError("need 1 <= stride <= block_w")
        if self.group_size < 1:
            raise InvalidParameterError("group_size must be >= 1")
        if self.search_window < 0:
            raise InvalidParameterError("search_window must be >= 0")
        if self.keep_per_group is not None and self.keep_per_group < 0:
            raise InvalidParameterError("keep_per_group must be >= 0")

    def keep_for(self, frames: int) -> int:
        full = self.block_w * self.block_h * frames * self.group_size
        if self.keep_per_group is None:
            return self.block_w * self.block_h * frames
        if self.keep_per_group > full:
            raise InvalidParameterError(f"keep_per_group {self.keep_per_group} exceeds group size {full}")
        return self.keep_per_group


@dataclass
class NlsGroup:
    positions: np.ndarray  # (G, 2) block origins, reference first
    indices: np.ndarray  # flat indices into the (p_x, p_y, B, G) coefficient array
    values: np.ndarray


@dataclass
class NlsCode:
    shape: tuple
    params: NlsParams
    groups: List[NlsGroup] = field(default_factory=list)


def grid_positions(length: int, block: int, stride: int) -> np.ndarray:
    """Block origins along one axis; the last block is clipped to end at the border."""
    if block > length:
        raise InvalidParameterError(f"block size {block} larger than frame size {length}")
    pos = list(range(0, length - block + 1, stride))
    if pos[-1] != length - block:
        pos.append(length - block)
    return np.array(pos, dtype=np.intp)


class _BlockGrid:
    def __init__(self, shape, params: NlsParams):
        n_x, n_y, B = shape
        self.shape = tuple(shape)
        self.params = params
        self.px, self.py = params.block_w, params.block_h
        if self.px > n_x or self.py > n_y:
            raise InvalidParameterError(
                f"block {self.px}x{self.py} larger than frame {n_x}x{n_y}"
            )
        xs = grid_positions(n_x, self.px, params.stride)
        ys = grid_positions(n_y, self.py, params.stride)
        # raster order of block origins
        self.origins = np.array([(x, y) for x in xs for y in ys], dtype=np.intp)

    def extract(self, video: np.ndarray) -> np.ndarray:
        px, py = self.px, self.py
        return np.stack([video[x:x + px, y:y + py, :] for x, y in self.origins])


def match_groups(blocks: np.ndarray, origins: np.ndarray, group_size: int, window: int, threads: int = 1):
    """Member indices (into ``origins``) of every reference block's group.

    Reference first, then the nearest candidates in the window by squared
    l2 distance; ties are broken by raster order.
    """
    flat = blocks.reshape(len(blocks), -1)

    def one(q):
        d_origin = np.abs(origins - origins[q]).max(axis=1)
        cand = np.flatnonzero(d_origin <= window)
        cand = cand[cand != q]
        diff = flat[cand] - flat[q]
        dist = np.einsum("ij,ij->i", diff, diff)
        order = np.lexsort((cand, dist))
        chosen = cand[order[: group_size - 1]]
        return np.concatenate(([q], chosen))

    return ordered_map(one, range(len(blocks)), threads)


class NlsCodec(Codec):
    """NLS projection ``decode(encode(s))``.

    Parameters mirror :class:`NlsParams`.  ``keep_schedule``, if given, maps
    the solver iteration to a ``keep_per_group`` override.
    """

    def __init__(self, block_w=8, block_h=8, stride=4, group_size=16, search_window=20,
                 keep_per_group=None, keep_schedule: Optional[Callable[[int], int]] = None,
                 n_threads=None):
        self.block_w = block_w
        self.block_h = block_h
        self.stride = stride
        self.group_size = group_size
        self.search_window = search_window
        self.keep_per_group = keep_per_group
        self.keep_schedule = keep_schedule
        self.n_threads = n_threads

    @property
    def params(self) -> NlsParams:
        return NlsParams(self.block_w, self.block_h, self.stride, self.group_size,
                         self.search_window, self.keep_per_group)

    def _params_at(self, iteration):
        p = self.params
        if self.keep_schedule is not None and iteration is not None:
            p = NlsParams(p.block_w, p.block_h, p.stride, p.group_size, p.search_window,
                          int(self.keep_schedule(iteration)))
        return p

    # dense path shared by encode and project
    def _groups(self, s, params):
        s = np.asarray(s, dtype=np.float64)
        if s.ndim != 3:
            raise InvalidParameterError(f"expected a (n_x, n_y, B) video, got {s.shape}")
        grid = _BlockGrid(s.shape, params)
        blocks = grid.extract(s)
        members = match_groups(blocks, grid.origins, params.group_size, params.search_window,
                               self.n_threads)
        return grid, blocks, members

    def _threshold(self, blocks, members, keep):
        """Yield (member_idx, kept_indices, coeff) per group."""

        def one(m):
            group = np.moveaxis(blocks[m], 0, -1)  # (p_x, p_y, B, G)
            coeff = dctn(group)
            k = min(keep, coeff.size)
            return m, top_k_indices(coeff, k), coeff

        return ordered_map(one, members, self.n_threads)

    def encode(self, s, iteration=None) -> NlsCode:
        params = self._params_at(iteration)
        s = np.asarray(s, dtype=np.float64)
        grid, blocks, members = self._groups(s, params)
        keep = params.keep_for(s.shape[2])
        code = NlsCode(tuple(s.shape), params)
        for m, idx, coeff in self._threshold(blocks, members, keep):
            idx = np.sort(idx)
            code.groups.append(NlsGroup(grid.origins[m].copy(), idx, coeff.flat[idx].copy()))
        return code

    def decode(self, code: NlsCode, shape=None) -> np.ndarray:
        return nls_decode(code.params, code, code.shape if shape is None else shape)

    def project(self, s, iteration=None) -> np.ndarray:
        params = self._params_at(iteration)
        s = np.asarray(s, dtype=np.float64)
        if not np.all(np.isfinite(s)):
            raise InvalidParameterError("cannot project a non-finite signal")
        grid, blocks, members = self._groups(s, params)
        keep = params.keep_for(s.shape[2])

        def rebuild(item):
            m, idx, coeff = item
            kept = np.zeros_like(coeff)
            kept.flat[idx] = coeff.flat[idx]
            return m, idctn(kept)

        recon = ordered_map(rebuild, self._threshold(blocks, members, keep), self.n_threads)
        # serial scatter in group order keeps the accumulation bit-stable
        origins = [grid.origins[b] for m, _ in recon for b in m]
        pieces = [grp[..., g] for m, grp in recon for g in range(len(m))]
        return aggregate_blocks(s.shape, origins, pieces)

    def bits_for(self, s) -> float:
        return nls_code_bits(self.encode(s))


def _normalize(acc, count):
    out = np.zeros_like(acc)
    np.divide(acc, count[:, :, None], out=out, where=count[:, :, None] > 0)
    return out


def aggregate_blocks(shape, origins, blocks) -> np.ndarray:
    """Average overlapping ``(p_x, p_y, B)`` blocks placed at ``origins``.

    Blocks are added in the given order, then each pixel is divided by the
    number of blocks covering it; uncovered pixels are 0.
    """
    acc = np.zeros(shape)
    count = np.zeros(shape[:2])
    for (x, y), b in zip(origins, blocks):
        px, py = b.shape[:2]
        acc[x:x + px, y:y + py, :] += b
        count[x:x + px, y:y + py] += 1
    return _normalize(acc, count)


def nls_encode(params: NlsParams, x) -> NlsCode:
    c = NlsCodec(params.block_w, params.block_h, params.stride, params.group_size,
                 params.search_window, params.keep_per_group)
    return c.encode(x)


def nls_decode(params: NlsParams, code: NlsCode, shape) -> np.ndarray:
    """Zero-fill, inverse 4-D DCT, scatter and average."""
    shape = tuple(int(v) for v in shape)
    if len(shape) != 3 or tuple(code.shape) != shape:
        raise DecodeError(f"code was produced for shape {code.shape}, not {shape}")
    n_x, n_y, B = shape
    px, py = params.block_w, params.block_h
    origins, pieces = [], []
    for gi, grp in enumerate(code.groups):
        pos = np.asarray(grp.positions, dtype=np.intp).reshape(-1, 2)
        G = len(pos)
        size = px * py * B * G
        idx = np.asarray(grp.indices, dtype=np.intp)
        vals = np.asarray(grp.values, dtype=np.float64)
        if G == 0 or idx.shape != vals.shape or (idx.size and (idx.min() < 0 or idx.max() >= size)):
            raise DecodeError(f"malformed group {gi}")
        if np.any(pos < 0) or np.any(pos[:, 0] + px > n_x) or np.any(pos[:, 1] + py > n_y):
            raise DecodeError(f"group {gi} has a block outside the frame")
        coeff = np.zeros((px, py, B, G))
        coeff.flat[idx] = vals
        grp_pix = idctn(coeff)
        origins.extend(pos)
        pieces.extend(grp_pix[..., g] for g in range(G))
    return aggregate_blocks(shape, origins, pieces)


def nls_code_bits(code: NlsCode) -> float:
    """Bit cost: each kept coefficient pays 32 value bits plus its index; each
    member block pays an index into the block grid."""
    n_x, n_y, B = code.shape
    p = code.params
    n_blocks = len(grid_positions(n_x, p.block_w, p.stride)) * len(grid_positions(n_y, p.block_h, p.stride))
    pos_bits = math.ceil(math.log2(n_blocks)) if n_blocks > 1 else 0
    total = 0.0
    for grp in code.groups:
        G = len(grp.positions)
        index_bits = math.ceil(math.log2(p.block_w * p.block_h * B * G)) if p.block_w * p.block_h * B * G > 1 else 0
        total += len(grp.values) * (COEFF_BITS + index_bits) + G * pos_bits
    return total


class Dct3dCodec(NlsCodec):
    """Blockwise 3-D DCT with top-k per block and no grouping (``G = 1``).

    Defaults to non-overlapping 8x8xB blocks keeping ``p_x p_y`` coefficients.
    """

    def __init__(self, block_w=8, block_h=8, stride=None, keep_per_group=None,
                 keep_schedule=None, n_threads=None):
        super().__init__(block_w, block_h, block_w if stride is None else stride, 1, 0,
                         keep_per_group, keep_schedule, n_threads)

    def get_params(self, deep=True):
        return {k: getattr(self, k) for k in
                ("block_w", "block_h", "stride", "keep_per_group", "keep_schedule", "n_threads")}

    @property
    def params(self) -> NlsParams:
        keep = self.keep_per_group
        if keep is None:
            keep = self.block_w * self.block_h
        return NlsParams(self.block_w, self.block_h, self.stride, 1, 0, keep)
