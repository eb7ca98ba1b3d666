"""Seedable, portable pseudorandom generator (splitmix64, pinned).

All stochastic experiments in the package draw from this generator so
that trajectories are bit-identical across platforms and releases.
The update and finaliser constants are the reference splitmix64 ones;
any change would be a format break and must bump RNG_VERSION.
"""
from __future__ import annotations

RNG_VERSION = "splitmix64-v1"

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def mix64(x: int) -> int:
    """splitmix64 finaliser; also used to derive independent child seeds."""
    z = x & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Deterministic child seed for stream `index` (parallel trials)."""
    return mix64(mix64(seed) + (index + 1) * _GOLDEN)


class SplitMix64:
    def __init__(self, seed: int):
        self.seed = seed & _MASK
        self._state = seed & _MASK

    def next_uint64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return mix64(self._state)

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_uint64() >> 11) * (2.0 ** -53)

    def uniforms(self, n: int) -> list[float]:
        return [self.uniform() for _ in range(n)]

    def randint(self, n: int) -> int:
        """Integer in [0, n). Rejection-free modulo; fine at desk scale."""
        return self.next_uint64() % n

    def spawn(self, index: int) -> "SplitMix64":
        return SplitMix64(derive_seed(self.seed, index))
