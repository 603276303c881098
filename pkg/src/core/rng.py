"""
Deterministic random streams derived from a single 64-bit seed.

Every stochastic operation takes an explicit ``numpy.random.Generator``. Streams
are addressed by purpose plus integer coordinates (seed index, cell index, ...),
so any schedule of work draws the same numbers.
"""

from typing import Dict

import numpy as np

from .exceptions import ValidationError

PURPOSES: Dict[str, int] = {
    "data": 1,
    "adversary": 2,
    "init": 3,
    "attack": 4,
    "train": 5,
    "ablation": 6,
    "selftest": 7,
}


class RngStreams:
    """Fan a root seed out into named, independently addressable streams."""

    def __init__(self, seed: int):
        if not 0 <= int(seed) < 2 ** 64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)

    def stream(self, purpose: str, *coordinates: int) -> np.random.Generator:
        """Generator for ``purpose`` at the given coordinates."""
        try:
            code = PURPOSES[purpose]
        except KeyError:
            raise ValidationError(f"unknown random stream purpose '{purpose}'")
        sequence = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(code,) + tuple(int(c) for c in coordinates)
        )
        return np.random.Generator(np.random.PCG64(sequence))
