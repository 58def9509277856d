"""Seeded random sources.

Every random draw in the package goes through a Philox (counter-based)
bit generator keyed by a :class:`numpy.random.SeedSequence`.  Independent
streams are obtained with ``SeedSequence.spawn``, so parallel chains never
share state.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

# buffered normals across all chains (float64 entries, about 32 MB)
_BUFFER_BUDGET = 1 << 22


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def make_rng(seed) -> np.random.Generator:
    """Philox-backed generator for ``seed`` (an int or a SeedSequence)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed_sequence(seed)))


def split(seed, n: int) -> list[np.random.SeedSequence]:
    """``n`` independent child seed sequences."""
    return seed_sequence(seed).spawn(n)


def _fresh(seq: np.random.SeedSequence) -> np.random.SeedSequence:
    return np.random.SeedSequence(seq.entropy, spawn_key=seq.spawn_key, pool_size=seq.pool_size)


class ChainStreams:
    """Per-chain random streams for a batch of Langevin chains.

    Chain ``k`` owns two Philox generators derived from its own seed
    sequence: one for initial draws and one for the Brownian increments.
    Increments are pulled through a block buffer so that a step costs one
    array slice rather than one call per chain; the values each chain sees
    depend only on its seed, never on the batch it is run with.

    Parameters
    ----------
    seeds : sequence of int or SeedSequence
        One entry per chain.
    block : int, optional
        Number of normals buffered per chain on each refill; by default
        sized so the whole buffer holds about ``2**22`` values.
    """

    def __init__(self, seeds: Sequence, block: int | None = None):
        self.seeds = [seed_sequence(s) for s in seeds]
        if not self.seeds:
            raise ValueError("at least one chain is required")
        # spawn from copies: SeedSequence.spawn advances its receiver, and the
        # streams must depend only on the seed, not on earlier uses of it
        pairs = [_fresh(s).spawn(2) for s in self.seeds]
        self.init_generators = [make_rng(p[0]) for p in pairs]
        self._noise = [make_rng(p[1]) for p in pairs]
        if block is None:
            block = min(4096, max(64, _BUFFER_BUDGET // len(self.seeds)))
        self._block = int(block)
        self._buf = np.empty((len(self.seeds), 0))
        self._pos = 0

    @classmethod
    def from_seed(cls, seed, n_chains: int, block: int | None = None) -> "ChainStreams":
        return cls(split(seed, n_chains), block=block)

    @property
    def n_chains(self) -> int:
        return len(self.seeds)

    def _refill(self, need: int) -> None:
        rest = self._buf.shape[1] - self._pos
        size = max(self._block, need)
        buf = np.empty((self.n_chains, size))
        buf[:, :rest] = self._buf[:, self._pos:]
        for g, row in zip(self._noise, buf):
            g.standard_normal(out=row[rest:])
        self._buf = buf
        self._pos = 0

    def normal(self, k: int) -> np.ndarray:
        """Next ``k`` standard normals of every chain, shape ``(n_chains, k)``."""
        if self._buf.shape[1] - self._pos < k:
            self._refill(k)
        out = self._buf[:, self._pos:self._pos + k]
        self._pos += k
        return out
