"""Reproducible random streams.

Every stochastic component draws from a ``numpy.random.Generator`` built
from a ``(seed, stream_id)`` pair, so masks, noise and Monte Carlo trials
can be regenerated independently of each other.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# stream ids used by the library; callers may pick any other values
MASK_STREAM = 1
NOISE_STREAM = 2
PHANTOM_STREAM = 3
CODEBOOK_STREAM = 4
TRIAL_STREAM = 1000

_U64 = 2**64


@dataclass(frozen=True)
class RngSpec:
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) < _U64):
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngSpec":
        """Derive a distinct, reproducible stream (e.g. one per trial)."""
        mixed = np.random.SeedSequence(
            entropy=int(self.seed), spawn_key=(int(self.stream_id), int(index))
        ).generate_state(2, dtype=np.uint32)
        return RngSpec(self.seed, int(mixed[0]) | (int(mixed[1]) << 32))

    def with_stream(self, stream_id: int) -> "RngSpec":
        return RngSpec(self.seed, stream_id)


def as_generator(rng) -> np.random.Generator:
    """Accept an RngSpec, a Generator, an int seed or None."""
    if isinstance(rng, RngSpec):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return RngSpec(0 if rng is None else int(rng)).generator()
