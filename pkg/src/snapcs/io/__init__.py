"""Containers, PGM frames, phantoms and run manifests."""
from .containers import (read_code, read_masks, read_measurement, read_signal, sniff, write_code,
                         write_masks, write_measurement, write_signal)
from .frames import PHANTOMS, load_frames, make_phantom
from .manifest import RunManifest, format_psnr, save_outputs, write_metrics_csv
from .pgm import quantize, read_pgm, read_pgm_normalized, write_pgm

__all__ = [
    "PHANTOMS", "RunManifest", "format_psnr", "load_frames", "make_phantom", "quantize", "read_code",
    "read_masks", "read_measurement", "read_pgm", "read_pgm_normalized", "read_signal",
    "save_outputs", "sniff", "write_code", "write_masks", "write_measurement", "write_metrics_csv",
    "write_pgm", "write_signal",
]
