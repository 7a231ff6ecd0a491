"""Portable seeded random numbers.

Every random draw in the package goes through SplitMix64 so that fixtures
can be regenerated bit-for-bit from any language. The i-th output of a
stream seeded with ``seed`` is ``mix(seed + (i + 1) * GOLDEN)``, which lets
whole blocks be produced with vectorized uint64 arithmetic.
"""

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def mix64(z: int) -> int:
    """Scalar SplitMix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def name_seed(seed: int, name: str) -> int:
    """Derive an independent stream seed for a named parameter (FNV-1a + mix)."""
    h = 0xCBF29CE484222325
    for b in name.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return mix64((seed & MASK64) ^ h)


class SplitMix64:
    """Counter-based SplitMix64 stream."""

    def __init__(self, seed: int = 42):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def u64(self, count: int) -> np.ndarray:
        steps = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GOLDEN)
            out = _mix(z)
        self.state = (self.state + count * GOLDEN) & MASK64
        return out

    def random(self, size) -> np.ndarray:
        """Uniform float64 in [0, 1) from the top 53 bits."""
        shape = (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(shape, dtype=np.int64))
        bits = self.u64(count) >> np.uint64(11)
        return (bits.astype(np.float64) * 2.0**-53).reshape(shape)

    def uniform(self, low, high, size) -> np.ndarray:
        return low + (high - low) * self.random(size)

    def integers(self, low: int, high: int) -> int:
        """One integer in [low, high)."""
        return low + int(self.random(1)[0] * (high - low))
