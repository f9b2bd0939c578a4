"""Frame-sequence loading and synthetic phantom videos."""
from __future__ import annotations

import glob
import math
import os

import numpy as np

from ..exceptions import FormatError, IngestError, InvalidParameterError
from ..rng import PHANTOM_STREAM, RngSpec, as_generator
from ..sensing import MultiFrameSignal
from .containers import read_signal, sniff
from .pgm import read_pgm_normalized

PHANTOMS = ("moving_square", "shifting_sparse", "constant")

# mid-gray contrast keeps the default phantom away from the clip range
SQUARE_DEFAULTS = {"side": 8, "stride": 1, "background": 0.25, "foreground": 0.75,
                   "row": None, "col": None, "axis": 1}


def _expand(path_pattern):
    if isinstance(path_pattern, (list, tuple)):
        return [os.fspath(p) for p in path_pattern]
    p = os.fspath(path_pattern)
    if glob.has_magic(p):
        return sorted(glob.glob(p))
    return [p]


def load_frames(path_pattern) -> MultiFrameSignal:
    """Load a PGM frame sequence (glob pattern or list, sorted by name) or a
    single SCSX container.  PGM pixels are divided by 255 (8-bit) or 65535
    (16-bit) and the result is flagged normalized."""
    paths = _expand(path_pattern)
    if not paths:
        raise IngestError(f"no files match {path_pattern!r}")
    for p in paths:
        if not os.path.isfile(p):
            raise IngestError(f"missing input file {p}")
    kinds = [sniff(p) for p in paths]
    if kinds == ["SCSX"]:
        return read_signal(paths[0])
    if any(k != "P5" for k in kinds):
        raise FormatError("inputs must be P5 PGM frames or one SCSX container")
    frames = [read_pgm_normalized(p) for p in paths]
    first = frames[0].shape
    for p, f in zip(paths, frames):
        if f.shape != first:
            raise IngestError(f"{p}: frame is {f.shape[1]}x{f.shape[0]}, expected {first[1]}x{first[0]}")
    return MultiFrameSignal(np.stack(frames, axis=2), normalized=True)


def make_phantom(kind: str, shape, params=None, rng=None) -> MultiFrameSignal:
    """Synthetic ``(rows, cols, B)`` video.

    ``constant``: ``value`` (0.5).  ``moving_square``: a ``side`` pixel
    square of ``foreground`` on ``background`` moving ``stride`` pixels per
    frame along ``axis`` (1 = columns) from ``(row, col)``; the default
    start centers the trajectory.  ``shifting_sparse``: ``k`` values shared
    by every frame at per-frame random positions, scaled so the first frame
    has unit norm at most.
    """
    params = dict(params or {})
    shape = tuple(int(s) for s in shape)
    if len(shape) != 3 or min(shape) < 1:
        raise InvalidParameterError(f"phantom shape must be (rows, cols, B), got {shape}")
    rows, cols, B = shape
    if kind == "constant":
        return MultiFrameSignal(np.full(shape, float(params.get("value", 0.5))))
    if kind == "moving_square":
        p = {**SQUARE_DEFAULTS, **params}
        side, stride, axis = int(p["side"]), int(p["stride"]), int(p["axis"])
        if side < 1 or stride < 0 or axis not in (0, 1):
            raise InvalidParameterError("need side >= 1, stride >= 0, axis in {0, 1}")
        travel = side + stride * (B - 1)
        extent = (rows, cols)
        start = [p["row"], p["col"]]
        for ax in (0, 1):
            span = travel if ax == axis else side
            if start[ax] is None:
                start[ax] = (extent[ax] - span) // 2
            if start[ax] < 0 or start[ax] + span > extent[ax]:
                raise InvalidParameterError("square leaves the frame; reduce side, stride or B")
        x = np.full(shape, float(p["background"]))
        for t in range(B):
            r0 = start[0] + (stride * t if axis == 0 else 0)
            c0 = start[1] + (stride * t if axis == 1 else 0)
            x[r0:r0 + side, c0:c0 + side, t] = float(p["foreground"])
        return MultiFrameSignal(x)
    if kind == "shifting_sparse":
        k = int(params.get("k", 4))
        n = rows * cols
        if not 1 <= k <= n:
            raise InvalidParameterError("need 1 <= k <= rows * cols")
        gen = as_generator(rng if rng is not None else RngSpec(0, PHANTOM_STREAM))
        vals = gen.standard_normal(k)
        norm = math.sqrt(float(np.dot(vals, vals)))
        if norm > 1.0:
            vals = vals / norm
        x = np.zeros((n, B))
        for t in range(B):
            x[gen.choice(n, size=k, replace=False), t] = vals
        return MultiFrameSignal(x.reshape(rows, cols, B))
    raise InvalidParameterError(f"unknown phantom {kind!r}; choose from {', '.join(PHANTOMS)}")
