"""Deterministic counter-based random streams.

Every uniform variate in the lab is addressable by five coordinates:
(seed, purpose, replication, path, order index).  The first four select a
Philox key; the order index selects a block of the counter space.  Philox
emits 4 doubles per 128-bit counter tick, so an index owning B blocks may
consume up to 4*B doubles, and `bulk()` draws for all indices at once are
bit-identical to drawing each index in isolation via `uniforms()`.  That is
what makes any single order reproducible without replaying its neighbours,
and makes output bytes independent of worker scheduling.
"""

import numpy as np
from numpy.random import Generator, Philox

# doubles produced per Philox counter tick
WORDS_PER_BLOCK = 4

# purpose tags keep unrelated experiment stages on disjoint keys
PURPOSES = {
    "instance": 1,
    "population": 2,
    "delta": 3,
    "probe": 4,
    "pilot": 5,
    "dualconv": 6,
    "bootstrap": 7,
    "test": 99,
}

_MASK48 = (1 << 48) - 1
_MASK64 = (1 << 64) - 1


def stream_key(seed, purpose, replication=0, path=0):
    """Pack the branch coordinates into a 2x64-bit Philox key."""
    if isinstance(purpose, str):
        purpose = PURPOSES[purpose]
    if not 0 <= purpose < 256:
        raise ValueError("purpose tag out of range")
    if not 0 <= path < 256:
        raise ValueError("path id out of range")
    if not 0 <= replication <= _MASK48:
        raise ValueError("replication out of range")
    w0 = seed & _MASK64
    w1 = (purpose << 56) | (path << 48) | replication
    return (w0, w1)


class OrderStream:
    """Uniform variates for a sequence of indexed draws.

    Each index owns `blocks` counter blocks (4 doubles per block); `width`
    doubles are actually consumed per index, width <= 4*blocks.
    """

    def __init__(self, seed, purpose, replication=0, path=0, width=2):
        self.key = stream_key(seed, purpose, replication, path)
        self.width = int(width)
        self.blocks = -(-self.width // WORDS_PER_BLOCK)  # ceil

    def uniforms(self, index, k=None):
        """The first k (default: width) doubles of block `index`."""
        k = self.width if k is None else k
        if k > self.blocks * WORDS_PER_BLOCK:
            raise ValueError("k exceeds the counter blocks owned by one index")
        bg = Philox(key=self.key)
        bg.advance(index * self.blocks)
        return Generator(bg).random(k)

    def bulk(self, n):
        """(n, width) matrix; row i equals uniforms(i)."""
        raw = Generator(Philox(key=self.key)).random(n * self.blocks * WORDS_PER_BLOCK)
        return raw.reshape(n, self.blocks * WORDS_PER_BLOCK)[:, : self.width]


def generator_for(seed, purpose, replication=0, path=0):
    """A plain numpy Generator on the keyed stream, for non-indexed draws
    (bootstrap resampling and the like)."""
    return Generator(Philox(key=stream_key(seed, purpose, replication, path)))
