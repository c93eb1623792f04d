"""Seeded random sub-streams.

Every stochastic site in a run (a stream's cycle draws, an anomaly's
decisions, a node clock) gets its own PCG64 generator derived from
``(seed, site)``.  Draw order at one site never perturbs another, so event
interleaving cannot change results.
"""
import hashlib

import numpy as np

_BLOCK = 4096


def site_key(*site) -> int:
    text = "/".join(str(s) for s in site).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


def generator(seed: int, *site) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(site_key(*site),))
    return np.random.Generator(np.random.PCG64(ss))


class Substream:
    """Buffered scalar draws from one site's generator."""

    def __init__(self, seed: int, *site):
        self._gen = generator(seed, *site)
        self._buf = None
        self._pos = _BLOCK

    def random(self) -> float:
        if self._pos >= _BLOCK:
            self._buf = self._gen.random(_BLOCK)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)

    def uniform_int(self, lo: int, hi: int) -> int:
        """Integer uniformly drawn from the closed range [lo, hi]."""
        return lo + min(int(self.random() * (hi - lo + 1)), hi - lo)

    def exponential(self, mean: float) -> float:
        return -mean * np.log1p(-self.random())
