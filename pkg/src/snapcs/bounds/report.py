"""Bound-versus-empirical records and their CSV export."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List

# one-sided Monte Carlo slack, in standard errors
MC_SIGMAS = 3.0
# absorbs floating-point noise when a frequency sits exactly on its bound
_FP_SLACK = 1e-12

CSV_COLUMNS = ["experiment", "param_json", "threshold", "empirical_freq", "mc_stderr",
               "theoretical_bound", "pass"]


def mc_stderr(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def bound_holds(freq: float, bound: float, stderr: float) -> bool:
    return freq <= bound + MC_SIGMAS * stderr + _FP_SLACK


@dataclass
class TailRecord:
    experiment: str
    params: Dict[str, Any]
    threshold: float
    empirical_freq: float
    mc_stderr: float
    theoretical_bound: float
    passed: bool

    def __post_init__(self):
        if not 0.0 <= self.empirical_freq <= 1.0:
            raise ValueError(f"empirical frequency {self.empirical_freq} outside [0, 1]")


def make_record(experiment, params, threshold, hits, trials, bound, extra_ok=True) -> TailRecord:
    """Build a record from a hit count; ``extra_ok`` lets callers add a
    tolerance of their own on top of the 3-sigma check."""
    p = hits / trials
    se = mc_stderr(p, trials)
    return TailRecord(experiment, dict(params), float(threshold), p, se, float(bound),
                      bool(bound_holds(p, bound, se) and extra_ok))


@dataclass
class TailBoundReport:
    records: List[TailRecord] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.records)

    def extend(self, other: "TailBoundReport") -> "TailBoundReport":
        self.records.extend(other.records)
        self.extras.update(other.extras)
        return self

    def column(self, name: str) -> List[float]:
        return [getattr(r, name) for r in self.records]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in self.records:
                w.writerow([r.experiment, json.dumps(r.params, sort_keys=True), repr(r.threshold),
                            repr(r.empirical_freq), repr(r.mc_stderr), repr(r.theoretical_bound),
                            "true" if r.passed else "false"])
