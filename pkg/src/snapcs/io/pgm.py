"""Binary (P5) PGM read/write.  Arrays are indexed ``[row, column]``."""
from __future__ import annotations

import re

import numpy as np

from ..exceptions import FormatError

_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*(\S+)")


def _header(raw: bytes, path):
    pos = 0
    vals = []
    for _ in range(4):
        m = _TOKEN.match(raw, pos)
        if not m:
            raise FormatError(f"{path}: truncated PGM header")
        vals.append(m.group(1))
        pos = m.end()
    if vals[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {vals[0]!r})")
    try:
        w, h, maxval = (int(v) for v in vals[1:])
    except ValueError as exc:
        raise FormatError(f"{path}: bad PGM header") from exc
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise FormatError(f"{path}: bad PGM dimensions or maxval")
    # exactly one whitespace byte separates the header from the raster
    return w, h, maxval, pos + 1


def read_pgm(path):
    """Return ``(pixels, maxval)`` with integer pixels of shape ``(height, width)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    w, h, maxval, off = _header(raw, path)
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    need = w * h * dtype.itemsize
    if len(raw) - off < need:
        raise FormatError(f"{path}: raster truncated")
    px = np.frombuffer(raw, dtype=dtype, count=w * h, offset=off).reshape(h, w)
    return px.astype(np.int64), maxval


def read_pgm_normalized(path) -> np.ndarray:
    """Pixels scaled to [0, 1] by the file's maxval (255 or 65535 for 8/16-bit)."""
    px, maxval = read_pgm(path)
    return px / float(maxval)


def quantize(frame, bits: int = 8) -> np.ndarray:
    """Clip to [0, 1] and scale with round-half-up."""
    top = 255 if bits == 8 else 65535
    v = np.clip(np.asarray(frame, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * top + 0.5).astype(np.int64)


def write_pgm(path, frame, bits: int = 8) -> None:
    """Write a [0, 1] frame as an 8- or 16-bit P5 image."""
    if bits not in (8, 16):
        raise FormatError("PGM depth must be 8 or 16 bits")
    q = quantize(frame, bits)
    if q.ndim != 2:
        raise FormatError("PGM frames must be 2-D")
    h, w = q.shape
    top = 255 if bits == 8 else 65535
    data = q.astype("u1" if bits == 8 else ">u2").tobytes()
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n%d\n" % (w, h, top))
        fh.write(data)
