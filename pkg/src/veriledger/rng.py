"""Portable deterministic random number generation.

Simulation randomness must reproduce bit-for-bit across platforms and
language runtimes, so we avoid the host's default generator and use
SplitMix64, a published 64-bit generator fully specified by its constants:

    state = (state + 0x9E3779B97F4A7C15) mod 2^64
    z = state
    z = ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z = ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output = z XOR (z >> 31)

All derived draws (ranges, bytes, sampling) are defined on top of the raw
64-bit stream by the fixed rules below, never via platform libraries.
"""

from __future__ import annotations

import hashlib

_MASK = 2**64 - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix64 stream seeded with a 64-bit integer."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def randrange(self, n: int) -> int:
        """Unbiased draw from [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("randrange needs n > 0")
        limit = (2**64 // n) * n
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def bytes(self, n: int) -> bytes:
        """n pseudo-random bytes; each u64 contributes 8 big-endian bytes."""
        out = bytearray()
        while len(out) < n:
            out += self.next_u64().to_bytes(8, "big")
        return bytes(out[:n])

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), via a partial Fisher-Yates pass.

        Returned in draw order (not sorted), deterministically.
        """
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.randrange(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def derive(self, label: str) -> "SplitMix64":
        """Independent child stream; seed = first 8 bytes of SHA-256(state || label)."""
        material = self._state.to_bytes(8, "big") + label.encode("utf-8")
        sub = hashlib.sha256(material).digest()[:8]
        return SplitMix64(int.from_bytes(sub, "big"))


def derive_seed(seed: int, label: str) -> int:
    """Stable 64-bit sub-seed for a named purpose under a scenario seed."""
    material = (seed & _MASK).to_bytes(8, "big") + label.encode("utf-8")
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")
