"""
Seeded random streams.

All randomness goes through numpy's PCG64 bit generator seeded from a
SeedSequence, so a (seed, stream key) pair yields the same numbers on
every platform.
"""

import numpy as np

# Stream keys keep independent consumers from sharing draws.
STREAM_INIT = 0
STREAM_SHUFFLE = 1
STREAM_ITEM = 2
STREAM_CORPUS = 3
STREAM_GRADCHECK = 4


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, keys)])))


def item_rng(seed: int, epoch: int, index: int) -> np.random.Generator:
    """Per-utterance stream for weight noise and dropout, derived from (seed, epoch, utterance index)."""
    return make_rng(seed, STREAM_ITEM, epoch, index)
