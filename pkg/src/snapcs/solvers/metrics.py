from __future__ import annotations

import math

import numpy as np

from ..exceptions import InvalidShapeError


def psnr_from_mse(mse: float, peak: float = 1.0) -> float:
    return math.inf if mse == 0 else 10.0 * math.log10(peak**2 / mse)


def compute_metrics(xhat, x_true, peak: float = 1.0):
    """Return ``(mse, psnr_db, per_frame_psnr)``; zero error gives ``inf``."""
    a = np.asarray(xhat, dtype=np.float64)
    b = np.asarray(x_true, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    d = a - b
    mse = float(np.mean(d * d))
    frames = d.reshape(-1, d.shape[-1]) if d.ndim == 3 else d.reshape(-1, 1)
    per_frame = [psnr_from_mse(float(np.mean(frames[:, i] ** 2)), peak) for i in range(frames.shape[1])]
    return mse, psnr_from_mse(mse, peak), per_frame
