"""Counter-based random streams.

Every random quantity is addressed by (seed, stream, extra keys, index), so
results never depend on how work is split across threads.  The bit
generator is numpy's Philox; the key is derived from the address with a
SeedSequence and the counter is the item index.
"""
from __future__ import annotations

import numpy as np

# stream tags
POINTS = 0
COUNT = 1
SKELETON = 2
THIN_ORDER = 3
ANNULUS = 4
WALK = 5
ZPROC = 6
MC = 7
BOOT = 8

_MASK64 = (1 << 64) - 1
_TO_UNIT = 2.0 ** -53


def _key(seed: int, stream: int, extra: tuple) -> np.ndarray:
    words = [int(seed) & _MASK64, int(stream)] + [int(e) & _MASK64 for e in extra]
    return np.random.SeedSequence(words).generate_state(2, dtype=np.uint64)


def uniforms(seed: int, stream: int, start: int, count: int, per: int = 2, extra: tuple = ()) -> np.ndarray:
    """Array of shape (count, per) of U[0,1) draws for items start..start+count-1.

    Item i always receives the same draws regardless of ``start``; per <= 4.
    """
    if not 1 <= per <= 4:
        raise ValueError("per must be in 1..4")
    if count <= 0:
        return np.zeros((0, per))
    bg = np.random.Philox(key=_key(seed, stream, extra), counter=int(start))
    raw = bg.random_raw(4 * count).reshape(count, 4)[:, :per]
    return (raw >> np.uint64(11)).astype(np.float64) * _TO_UNIT


def generator(seed: int, stream: int, *extra: int) -> np.random.Generator:
    """A Generator for draws that are not indexed per item (counts, permutations)."""
    return np.random.Generator(np.random.Philox(key=_key(seed, stream, tuple(extra))))


def float_key(x: float) -> int:
    """Stable integer key for a float parameter."""
    return int(np.float64(x).view(np.uint64))
