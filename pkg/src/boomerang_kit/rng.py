"""Seeded random streams.

Every random draw in the package comes from a ``numpy.random.Generator``
(PCG64 bit generator, ziggurat normals) derived from one root seed and a key
``(purpose, *indices)``.  The same key always yields the same stream, so runs
are bit-reproducible and independent sub-streams never overlap.

Batched chains share a stream per key and take row ``i`` of each draw; since
numpy fills arrays in C order, chain ``i`` sees the same noise regardless of
how many chains are in the batch.
"""

from __future__ import annotations

import zlib

import numpy as np


def _tag(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


class SeedStreams:
    """Factory of reproducible generators keyed by purpose and integer indices."""

    def __init__(self, seed: int):
        seed = int(seed)
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed

    def generator(self, purpose: str, *index: int) -> np.random.Generator:
        key = (_tag(purpose),) + tuple(int(i) for i in index)
        ss = np.random.SeedSequence(self.seed, spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *index: int) -> "SeedStreams":
        """A new root seed derived from this one, e.g. one per experiment cell."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(_tag("child"),) + tuple(index))
        return SeedStreams(int(ss.generate_state(1, dtype=np.uint64)[0]))

    def __repr__(self):
        return f"SeedStreams({self.seed})"


class PinnedNoise:
    """Test double for a generator: every normal draw returns ``value``.

    ``value`` is broadcast to the requested shape, so ``PinnedNoise()`` pins all
    noise to zero.  It also stands in for :class:`SeedStreams` (``generator``
    returns itself).
    """

    def __init__(self, value=0.0):
        self.value = np.asarray(value, dtype=float)

    def standard_normal(self, size=None):
        if size is None:
            return self.value.copy()
        return np.broadcast_to(self.value, size).astype(float)

    def generator(self, purpose: str, *index: int) -> "PinnedNoise":
        return self


def as_streams(rng) -> SeedStreams | PinnedNoise:
    """Accept an int seed, a SeedStreams, or a PinnedNoise."""
    if isinstance(rng, (SeedStreams, PinnedNoise)):
        return rng
    if isinstance(rng, (int, np.integer)):
        return SeedStreams(int(rng))
    raise TypeError(f"expected a seed or SeedStreams, got {type(rng).__name__}")
