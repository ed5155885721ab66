"""Deterministic counter-based random streams.

Every stochastic routine in this package takes an integer seed and derives
independent Philox substreams keyed on (seed, path).  Results therefore do
not depend on evaluation order, chunking, or worker count: a work unit's
stream is a pure function of its identity.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix(h: int) -> int:
    h = (h + 0x9E3779B97F4A7C15) & _MASK64
    z = h
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _fold(part: int | str) -> int:
    if isinstance(part, str):
        # FNV-1a over the utf-8 bytes; independent of PYTHONHASHSEED.
        h = 0xCBF29CE484222325
        for b in part.encode("utf-8"):
            h = ((h ^ b) * 0x100000001B3) & _MASK64
        return h
    return part & _MASK64


def substream(seed: int, *path: int | str) -> np.random.Generator:
    """Independent generator identified by (seed, *path).

    The same (seed, path) always yields the same stream; distinct paths give
    statistically independent streams.
    """
    h = 0
    for part in path:
        h = _splitmix(h ^ _fold(part))
    key = np.array([seed & _MASK64, h], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
