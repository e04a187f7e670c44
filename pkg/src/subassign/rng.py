"""Named random streams derived from one 64-bit seed.

A stream is identified by a name plus optional integer indices, e.g.
``stream(seed, "experts", k, c)``.  The name is hashed with CRC-32 and the
resulting key is used as the ``spawn_key`` of a :class:`numpy.random.SeedSequence`,
so the streams are independent of each other and of creation order: adding
a new component never shifts the randomness of the existing ones.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream_key(name: str, *indices: int) -> tuple[int, ...]:
    return (zlib.crc32(name.encode("utf-8")), *(int(i) for i in indices))


def stream(seed: int, name: str, *indices: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=stream_key(name, *indices))
    return np.random.Generator(np.random.PCG64(ss))


class Streams:
    """Factory bound to one seed; ``Streams(7)("colors")`` etc."""

    def __init__(self, seed: int):
        self.seed = int(seed)

    def __call__(self, name: str, *indices: int) -> np.random.Generator:
        return stream(self.seed, name, *indices)
