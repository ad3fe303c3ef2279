"""Counter-based random streams keyed by (seed, purpose, index).

Every random entity (an ER row, a replication, a sampled subset batch) gets
its own Philox stream. A stream depends only on its key, so work can be split
across workers in any order and still reproduce bit-for-bit.
"""
from __future__ import annotations

import zlib

import numpy as np


def _tag_word(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_tag_word(tag), int(index)))
    return np.random.Generator(np.random.Philox(ss))
