"""Run manifests (flat ``key=value`` UTF-8 text) and output writing."""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, Optional

import numpy as np

from ..exceptions import FormatError, OutputError
from ..solvers.metrics import compute_metrics
from .containers import write_signal
from .pgm import write_pgm


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the stamp for reproducible manifests
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


def _encode(v: Any) -> str:
    if isinstance(v, str):
        return v
    return json.dumps(v, sort_keys=True)


@dataclass
class RunManifest:
    """What a run did: its command line, inputs, settings, seeds and outputs.

    ``entries`` keeps insertion order; values that are not strings are
    stored as JSON.  ``argv`` is enough to replay the run.
    """

    command: str
    entries: Dict[str, Any] = field(default_factory=dict)
    created: str = field(default_factory=_timestamp)

    def set(self, key: str, value: Any) -> "RunManifest":
        if "=" in key or "\n" in key:
            raise FormatError(f"bad manifest key {key!r}")
        self.entries[key] = value
        return self

    def get(self, key: str, default=None):
        return self.entries.get(key, default)

    def output_dir(self) -> str:
        return self.entries.get("out_dir", ".")

    def check_inputs(self) -> None:
        """Every ``*_path`` entry naming an input must exist."""
        for k, v in self.entries.items():
            if k.startswith("input.") and not os.path.exists(v):
                raise FormatError(f"manifest input {k}={v} does not exist")

    def dumps(self) -> str:
        lines = [f"command={self.command}", f"created={self.created}"]
        lines += [f"{k}={_encode(v)}" for k, v in self.entries.items()]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(self.dumps())
        except OSError as exc:
            raise OutputError(f"cannot write manifest {path}: {exc}") from exc

    @classmethod
    def read(cls, path) -> "RunManifest":
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        raw = {}
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{n}: expected key=value")
            k, v = line.split("=", 1)
            raw[k] = v
        if "command" not in raw:
            raise FormatError(f"{path}: manifest has no command")
        m = cls(raw.pop("command"), created=raw.pop("created", ""))
        for k, v in raw.items():
            try:
                m.entries[k] = json.loads(v)
            except ValueError:
                m.entries[k] = v
        return m


def write_metrics_csv(path, xhat, truth) -> tuple:
    """One row per frame (``frame, mse, psnr_db``); returns ``(mse, psnr)`` overall."""
    a = np.asarray(xhat, dtype=np.float64)
    b = np.asarray(truth, dtype=np.float64)
    mse, psnr, per_psnr = compute_metrics(a, b)
    per_mse = np.mean((a - b) ** 2, axis=(0, 1))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "mse", "psnr_db"])
        for i, (m, p) in enumerate(zip(per_mse, per_psnr)):
            w.writerow([i, repr(float(m)), format_psnr(p)])
    return mse, psnr


def format_psnr(p: float, digits=None) -> str:
    if p == float("inf"):
        return "inf"
    return repr(float(p)) if digits is None else f"{p:.{digits}f}"


def save_outputs(manifest: RunManifest, xhat, trace=None, truth=None, include_time=False):
    """Write the reconstruction (SCSX), trace CSV, metrics CSV and 8-bit PGM
    previews into ``manifest.output_dir()``; returns ``{name: path}`` and
    records each path in the manifest.

    ``truth``, when given, adds the per-frame metrics CSV.
    """
    out = manifest.output_dir()
    paths = {}
    x = np.asarray(xhat, dtype=np.float64)
    try:
        os.makedirs(out, exist_ok=True)
        paths["recon"] = os.path.join(out, "recon.scsx")
        write_signal(paths["recon"], x)
        if trace is not None:
            paths["trace"] = os.path.join(out, "trace.csv")
            trace.to_csv(paths["trace"], include_time=include_time)
        if truth is not None:
            paths["metrics"] = os.path.join(out, "metrics.csv")
            mse, psnr = write_metrics_csv(paths["metrics"], x, truth)
            manifest.set("result.mse", mse).set("result.psnr_db", format_psnr(psnr))
        for t in range(x.shape[2]):
            p = os.path.join(out, f"preview_{t:03d}.pgm")
            write_pgm(p, x[:, :, t])
        paths["previews"] = os.path.join(out, "preview_*.pgm")
    except OSError as exc:
        raise OutputError(f"writing outputs under {out}: {exc}") from exc
    for k, v in paths.items():
        manifest.set(f"output.{k}", v)
    return paths
