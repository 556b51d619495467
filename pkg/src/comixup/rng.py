"""Deterministic pseudo-random generator used for every stochastic choice.

SplitMix64 (Steele et al.): state advances by a fixed odd constant and the
output is a finalizer over the state.  The constants below fully define the
stream, so any run is reproducible from its 64-bit seed alone.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def derive(seed: int, stream: int) -> int:
    """Decorrelated child seed for substream `stream` (partitions, bench seeds)."""
    return _mix((seed + (stream + 1) * _GAMMA) & _MASK)


class SplitMix64:
    """Sequential SplitMix64 generator."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return _mix(self._state)

    def next_float(self) -> float:
        # 53 high bits -> uniform double in [0, 1)
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n).  Modulo bias is < 2**-50 for n < 2**14."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]
