"""Seed splitting: one integer seed, many independent named streams.

A stream is keyed by ``(seed, crc32(name), index)`` through
:class:`numpy.random.SeedSequence`, so the draws of one experiment never
depend on which other experiments ran or in what order.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["DEFAULT_SEED", "stream"]

DEFAULT_SEED = 20240611


def stream(seed: int, name: str, index: int = 0) -> np.random.Generator:
    if int(seed) != seed or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed}")
    key = [int(seed), zlib.crc32(name.encode("utf-8")), int(index)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))
