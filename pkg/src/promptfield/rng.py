"""Deterministic random streams used by every stochastic component.

All sampling runs off SplitMix64 so identical seeds reproduce identical
runs bit for bit, with no dependence on platform RNG state. Normal
deviates come from Box-Muller applied to the raw 64-bit stream.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

# 2**-53; scales a 53-bit integer into [0, 1)
_U53 = 1.0 / (1 << 53)


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of raw bytes."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def _scramble(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def mix64(*parts: int) -> int:
    """Fold integers into one well-mixed 64-bit stream-derivation key."""
    h = _GOLDEN
    for p in parts:
        h = _scramble((h + (p & _MASK64)) & _MASK64)
    return h


class SplitMix64:
    """Sequential SplitMix64 stream with vectorized bulk draws.

    Bulk draws consume exactly the same underlying 64-bit outputs as the
    equivalent sequence of scalar calls, so scalar and vectorized use
    interleave freely without changing the stream.
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _scramble(self._state)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * _U53

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n < 1:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def _bulk_u64(self, n: int) -> np.ndarray:
        z = np.arange(1, n + 1, dtype=np.uint64)
        z *= np.uint64(_GOLDEN)
        z += np.uint64(self._state)
        self._state = (self._state + n * _GOLDEN) & _MASK64
        z ^= z >> np.uint64(30)
        z *= np.uint64(_MIX1)
        z ^= z >> np.uint64(27)
        z *= np.uint64(_MIX2)
        z ^= z >> np.uint64(31)
        return z

    def uniforms(self, n: int) -> np.ndarray:
        """n uniforms in [0, 1) as float64."""
        return (self._bulk_u64(n) >> np.uint64(11)).astype(np.float64) * _U53

    def normals(self, n: int) -> np.ndarray:
        """n standard normals via Box-Muller; consumes 2*ceil(n/2) draws."""
        pairs = (n + 1) // 2
        raw = self._bulk_u64(2 * pairs)
        # u1 in (0, 1] so the log never sees zero; u2 in [0, 1)
        u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _U53
        u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * _U53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * math.pi) * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]
