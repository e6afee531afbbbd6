"""
SplitMix64 generator.

Documented constants so fixtures can be reproduced outside Python:
    state += 0x9E3779B97F4A7C15
    z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)
All arithmetic is modulo 2**64.
"""

import numpy as np

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
MIX_2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * MIX_1
    z = (z ^ (z >> np.uint64(27))) * MIX_2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Stateful stream; ``next_u64(n)`` yields the next ``n`` outputs."""

    def __init__(self, seed: int = 0):
        self._state = np.uint64(seed % (1 << 64))

    def next_u64(self, count: int) -> np.ndarray:
        steps = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = self._state + steps * GOLDEN_GAMMA
            if count:
                self._state = states[-1]
            return _mix(states)

    def uniform(self, count: int) -> np.ndarray:
        """Doubles in [0, 1) from the top 53 bits."""
        return (self.next_u64(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def half_matrix(self, rows: int, cols: int, low: float = -1.0, high: float = 1.0) -> np.ndarray:
        """A rows×cols half-precision matrix, uniform in [low, high) before rounding."""
        values = low + (high - low) * self.uniform(rows * cols)
        return values.reshape(rows, cols).astype(np.float16)

    def integers(self, count: int, high: int) -> np.ndarray:
        """Integers in [0, high) by modulo reduction (bias is irrelevant for fixtures)."""
        return (self.next_u64(count) % np.uint64(high)).astype(np.int64)
