"""Deterministic random stream used everywhere randomness is needed.

The generator is SplitMix64 with its public constants:

    state    <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z = state
    z <- (z xor (z >> 30)) * 0xBF58476D1CE4E5B9   mod 2^64
    z <- (z xor (z >> 27)) * 0x94D049BB133111EB   mod 2^64
    output = z xor (z >> 31)

Because the state advance is a plain counter, the k-th output of a stream
seeded with ``s`` is ``mix(s + k * GAMMA)``; block generation exploits this
to produce bit-identical results whether values are drawn one at a time or
in vectorised batches.

Derived draws are pinned down so that an independent implementation
reproduces them: raw u64 and uniform draws bit for bit, normals to within
one ulp (the trig calls may route through a different libm):

* uniform in [0, 1):   ``(u64 >> 11) * 2^-53``
* standard normals:    Box-Muller, one pair per two consecutive uniforms
  ``u1, u2``: ``r = sqrt(-2 * log1p(-u1))``, ``z0 = r * cos(2*pi*u2)``,
  ``z1 = r * sin(2*pi*u2)``.  Pairs are used in sequence; for an odd count
  the second member of the final pair is discarded.
* integer below n:     ``u64 mod n`` (modulo bias is irrelevant here; the
  contract is determinism, not statistical perfection)
* shuffling:           Fisher-Yates from the top index downward, using
  ``j = u64 mod (i + 1)`` at position ``i``.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["GAMMA", "MIX1", "MIX2", "SplitMix64"]

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

_MASK64 = (1 << 64) - 1
_INV_2_53 = 2.0**-53
_TWO_PI = 2.0 * math.pi


def _mix_block(states: np.ndarray) -> np.ndarray:
    """Finalising mix applied to an array of uint64 states."""
    z = states.copy()
    z ^= z >> np.uint64(30)
    z *= np.uint64(MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(MIX2)
    z ^= z >> np.uint64(31)
    return z


class SplitMix64:
    """Stateful SplitMix64 stream with scalar and vectorised draws."""

    __slots__ = ("_seed", "_count")

    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK64
        self._count = 0

    @property
    def draws_consumed(self) -> int:
        return self._count

    def next_u64(self) -> int:
        self._count += 1
        z = (self._seed + self._count * GAMMA) & _MASK64
        z = ((z ^ (z >> 30)) * MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * MIX2) & _MASK64
        return z ^ (z >> 31)

    def u64_block(self, count: int) -> np.ndarray:
        """Next ``count`` raw outputs as uint64, identical to scalar draws."""
        if count < 0:
            raise ValueError("count must be nonnegative")
        idx = np.arange(self._count + 1, self._count + count + 1, dtype=np.uint64)
        self._count += count
        states = np.uint64(self._seed) + idx * np.uint64(GAMMA)
        return _mix_block(states)

    def next_float(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def uniform_block(self, count: int) -> np.ndarray:
        return (self.u64_block(count) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normal_block(self, count: int) -> np.ndarray:
        """``count`` standard normals via Box-Muller on consecutive uniforms."""
        pairs = (count + 1) // 2
        u = self.uniform_block(2 * pairs)
        r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        angle = _TWO_PI * u[1::2]
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = r * np.cos(angle)
        out[1::2] = r * np.sin(angle)
        return out[:count]

    def next_below(self, n: int) -> int:
        """Integer in [0, n) as ``u64 mod n``."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def shuffled(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of ``arange(n)``."""
        order = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.next_below(i + 1)
            order[i], order[j] = order[j], order[i]
        return order

    def sample_indices(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct indices from [0, n) via partial Fisher-Yates."""
        if k > n:
            raise ValueError("cannot sample more indices than available")
        pool = np.arange(n, dtype=np.int64)
        for i in range(k):
            j = i + self.next_below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k].copy()
