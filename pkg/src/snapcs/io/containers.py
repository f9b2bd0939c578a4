"""Binary containers for masks (SCSM), measurements (SCSY), signals (SCSX)
and NLS codes (SCSC).

Array containers share a 16-byte little-endian header
``magic[4] version:u8 distribution:u8 n_x:u32 n_y:u32 B:u16`` followed by
``n_x * n_y * B`` float64 values, pixel-major and frame-minor (C order of
an ``(n_x, n_y, B)`` array).  Measurements are stored with ``B = 1``.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..codecs.nls import NlsCode, NlsGroup, NlsParams
from ..exceptions import FormatError
from ..sensing import MaskStack, Measurement, MultiFrameSignal

VERSION = 1
HEADER = struct.Struct("<4sBBIIH")
DIST_TAGS = {None: 0, "gaussian": 1, "bernoulli01": 2}
_TAG_DIST = {v: k for k, v in DIST_TAGS.items()}

# SCSC: params block, then the group count
_CODE_HEADER = struct.Struct("<4sBHHHHHiIIHI")
_U32 = struct.Struct("<I")
_PAIR = np.dtype([("index", "<u4"), ("value", "<f8")])


def _write_array(path, magic: bytes, arr: np.ndarray, dist_tag: int = 0) -> None:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    n_x, n_y, B = arr.shape
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(magic, VERSION, dist_tag, n_x, n_y, B))
        fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_array(path, magic: bytes):
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise FormatError(f"{path}: truncated header")
    mg, ver, tag, n_x, n_y, B = HEADER.unpack_from(raw)
    if mg != magic:
        raise FormatError(f"{path}: expected magic {magic!r}, found {mg!r}")
    if ver != VERSION:
        raise FormatError(f"{path}: unsupported version {ver}")
    count = n_x * n_y * B
    if len(raw) != HEADER.size + 8 * count:
        raise FormatError(f"{path}: payload has {len(raw) - HEADER.size} bytes, expected {8 * count}")
    data = np.frombuffer(raw, dtype="<f8", offset=HEADER.size).astype(np.float64)
    return data.reshape(n_x, n_y, B), tag


def write_masks(path, masks: MaskStack) -> None:
    _write_array(path, b"SCSM", masks.diag, DIST_TAGS[masks.distribution])


def read_masks(path) -> MaskStack:
    data, tag = _read_array(path, b"SCSM")
    dist = _TAG_DIST.get(tag)
    if dist is None:
        raise FormatError(f"{path}: mask file has distribution tag {tag}")
    return MaskStack(data, dist)


def write_measurement(path, y) -> None:
    _write_array(path, b"SCSY", np.asarray(y, dtype=np.float64))


def read_measurement(path, noise_sigma: float = 0.0) -> Measurement:
    data, _ = _read_array(path, b"SCSY")
    if data.shape[2] != 1:
        raise FormatError(f"{path}: measurement container must have B = 1")
    return Measurement(data[:, :, 0], noise_sigma)


def write_signal(path, x) -> None:
    _write_array(path, b"SCSX", np.asarray(x, dtype=np.float64))


def read_signal(path, normalized: bool = False) -> MultiFrameSignal:
    data, _ = _read_array(path, b"SCSX")
    return MultiFrameSignal(data, normalized)


def write_code(path, code: NlsCode) -> None:
    p = code.params
    n_x, n_y, B = code.shape
    keep = -1 if p.keep_per_group is None else p.keep_per_group
    with open(path, "wb") as fh:
        fh.write(_CODE_HEADER.pack(b"SCSC", VERSION, p.block_w, p.block_h, p.stride, p.group_size,
                                   p.search_window, keep, n_x, n_y, B, len(code.groups)))
        for g in code.groups:
            pos = np.asarray(g.positions).reshape(-1, 2)
            fh.write(_U32.pack(len(pos)))
            fh.write(np.ascontiguousarray(pos, dtype="<u4").tobytes())
            pairs = np.empty(len(g.indices), dtype=_PAIR)
            pairs["index"] = g.indices
            pairs["value"] = g.values
            fh.write(_U32.pack(len(pairs)))
            fh.write(pairs.tobytes())


def read_code(path) -> NlsCode:
    raw = Path(path).read_bytes()
    try:
        (mg, ver, bw, bh, stride, G, win, keep, n_x, n_y, B, Q) = _CODE_HEADER.unpack_from(raw)
        if mg != b"SCSC" or ver != VERSION:
            raise FormatError(f"{path}: not an SCSC v{VERSION} file")
        params = NlsParams(bw, bh, stride, G, win, None if keep < 0 else keep)
        off = _CODE_HEADER.size
        groups = []
        for _ in range(Q):
            (m,) = _U32.unpack_from(raw, off)
            off += 4
            pos = np.frombuffer(raw, "<u4", 2 * m, off).astype(np.intp).reshape(m, 2)
            off += 8 * m
            (c,) = _U32.unpack_from(raw, off)
            off += 4
            pairs = np.frombuffer(raw, _PAIR, c, off)
            off += _PAIR.itemsize * c
            groups.append(NlsGroup(pos, pairs["index"].astype(np.intp), pairs["value"].astype(np.float64)))
    except (struct.error, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: truncated or malformed code ({exc})") from exc
    if off != len(raw):
        raise FormatError(f"{path}: {len(raw) - off} trailing bytes")
    return NlsCode((n_x, n_y, B), params, groups)


def sniff(path) -> str:
    """Return ``"SCSM"``, ``"SCSY"``, ``"SCSX"``, ``"SCSC"``, ``"P5"`` or raise."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head[:2] == b"P5":
        return "P5"
    if head in (b"SCSM", b"SCSY", b"SCSX", b"SCSC"):
        return head.decode()
    raise FormatError(f"{path}: unrecognized file format")
