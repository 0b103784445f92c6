"""Seeded, portable pseudo-random streams.

Problem generators use a splitmix64 stream so that generated instances are
bitwise reproducible across platforms and implementations (the algorithm is
part of the problem file format).  Simulation-side randomness (trajectory
sampling) uses numpy's counter-based Philox generator keyed per stream so
ensembles are reproducible regardless of worker count or execution order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Minimal splitmix64 stream; state advances by the golden-gamma constant."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_sign(self) -> int:
        """Return +1 or -1 with equal probability."""
        return 1 if (self.next_u64() >> 63) == 0 else -1


def trajectory_rng(seed: int, stream_index: int) -> np.random.Generator:
    """Counter-based RNG for trajectory/grid-point streams.

    Streams with distinct (seed, stream_index) are statistically independent,
    and a stream's output does not depend on how many other streams exist.
    """
    return np.random.Generator(np.random.Philox(key=(seed & _MASK64) ^ (stream_index << 64)))
