"""Compression-based projected gradient descent (CbPGD) and generalized
alternating projection (CbGAP)."""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, asdict
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions import InvalidParameterError, InvalidShapeError
from ..sensing import DEFAULT_CLAMP_EPS, MaskStack, adjoint_array, forward_array, gram_inverse_array
from .stepsearch import adaptive_step_search


@dataclass
class SolverConfig:
    """Solver settings.

    ``step_mu=None`` selects the per-solver default (``2/B`` for PGD, ``2``
    for GAP).  ``step_bracket=None`` searches ``[0, 4 mu]`` in adaptive mode.
    """

    step_mu: Optional[float] = None
    max_iters: int = 150
    residual_tol: float = 1e-8
    step_mode: str = "fixed"
    clamp_eps: float = DEFAULT_CLAMP_EPS
    init_mode: str = "zero"
    step_bracket: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.step_mu is not None and not self.step_mu > 0:
            raise InvalidParameterError("step_mu must be positive")
        if self.max_iters < 1:
            raise InvalidParameterError("max_iters must be >= 1")
        if not self.residual_tol >= 0:
            raise InvalidParameterError("residual_tol must be >= 0")
        if self.step_mode not in ("fixed", "adaptive"):
            raise InvalidParameterError(f"unknown step_mode {self.step_mode!r}")
        if self.init_mode not in ("zero", "backprojection"):
            raise InvalidParameterError(f"unknown init_mode {self.init_mode!r}")
        if not self.clamp_eps > 0:
            raise InvalidParameterError("clamp_eps must be positive")


@dataclass
class IterationRecord:
    iter: int
    residual_norm: float
    error_to_reference: Optional[float]
    chosen_mu: float
    wall_time: float


@dataclass
class IterationTrace:
    """Per-iteration records; record ``t`` describes the iterate ``x^t``.

    ``final_residual``/``final_error`` describe the returned iterate, which
    has no record of its own when the iteration budget ran out.
    """

    records: List[IterationRecord] = field(default_factory=list)
    final_residual: float = float("nan")
    final_error: Optional[float] = None
    converged: bool = False

    def __len__(self):
        return len(self.records)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual_norm for r in self.records])

    def errors(self) -> np.ndarray:
        """Normalized errors ``e_0, ..., e_T`` including the returned iterate."""
        e = [r.error_to_reference for r in self.records]
        if not self.converged and self.final_error is not None:
            e.append(self.final_error)
        return np.array(e, dtype=np.float64)

    def to_csv(self, path, include_time: bool = True) -> None:
        """Write the trace; ``include_time=False`` blanks the wall-time column
        so the file is reproducible byte for byte."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "residual_norm", "error_to_reference", "chosen_mu", "wall_time_s"])
            for r in self.records:
                err = "" if r.error_to_reference is None else repr(r.error_to_reference)
                w.writerow([r.iter, repr(r.residual_norm), err, repr(r.chosen_mu),
                            repr(r.wall_time) if include_time else ""])


def normalized_error(x, ref) -> float:
    """``(1/sqrt(nB)) ||x - ref||_2``."""
    d = np.asarray(x, dtype=np.float64) - np.asarray(ref, dtype=np.float64)
    return float(np.sqrt(np.vdot(d, d) / d.size))


def backprojection(masks: MaskStack, y, clamp_eps=DEFAULT_CLAMP_EPS) -> np.ndarray:
    """Least-norm measurement-consistent signal ``H^T R^+ y``."""
    r, _ = gram_inverse_array(masks, y, clamp_eps)
    return adjoint_array(masks, r)


def _run(kind, codec, masks, y, config, reference, x0, timer=time.perf_counter):
    y = np.asarray(y, dtype=np.float64)
    if y.shape != masks.shape[:2]:
        raise InvalidShapeError(f"measurement shape {y.shape} does not match masks {masks.shape[:2]}")
    B = masks.frames
    mu = config.step_mu
    if mu is None:
        mu = 2.0 / B if kind == "pgd" else 2.0
    bracket = config.step_bracket or (0.0, 4.0 * mu)
    if reference is not None:
        reference = np.asarray(reference, dtype=np.float64)
        if reference.shape != masks.shape:
            raise InvalidShapeError("reference shape does not match masks")

    if x0 is not None:
        x = np.array(x0, dtype=np.float64)
    elif config.init_mode == "backprojection":
        x = backprojection(masks, y, config.clamp_eps)
    else:
        x = np.zeros(masks.shape)

    trace = IterationTrace()
    start = timer()
    for t in range(config.max_iters):
        e = y - forward_array(masks, x)
        res = float(np.linalg.norm(e))
        err = None if reference is None else normalized_error(x, reference)
        # x^0 is not a codec output, so it never terminates the run on its own
        if t > 0 and res <= config.residual_tol:
            trace.records.append(IterationRecord(t, res, err, 0.0, timer() - start))
            trace.converged = True
            break
        if kind == "pgd":
            direction = adjoint_array(masks, e)
        else:
            direction = adjoint_array(masks, gram_inverse_array(masks, e, config.clamp_eps)[0])
        if config.step_mode == "adaptive":
            step, _ = adaptive_step_search(codec, masks, y, x, bracket, direction=direction,
                                           extra_points=(mu,), iteration=t)
        else:
            step = mu
        x = codec.project(x + step * direction, iteration=t)
        trace.records.append(IterationRecord(t, res, err, float(step), timer() - start))

    trace.final_residual = float(np.linalg.norm(y - forward_array(masks, x)))
    trace.final_error = None if reference is None else normalized_error(x, reference)
    return x, trace


def cbpgd_recover(codec, masks: MaskStack, y, config: Optional[SolverConfig] = None,
                  reference=None, x0=None):
    """CbPGD: ``s = x + mu H^T (y - H x)``, then ``x = g(f(s))``.

    Returns ``(xhat, trace)``.  ``x0`` overrides ``config.init_mode``.
    """
    return _run("pgd", codec, masks, y, config or SolverConfig(), reference, x0)


def cbgap_recover(codec, masks: MaskStack, y, config: Optional[SolverConfig] = None,
                  reference=None, x0=None):
    """CbGAP: ``s = x + mu H^T R^{-1} (y - H x)``, then ``x = g(f(s))``."""
    return _run("gap", codec, masks, y, config or SolverConfig(), reference, x0)
