"""Deterministic random-stream derivation.

All randomness in the package flows from a 64-bit master seed through
named Philox streams (counter-based, so draws for a given stream are
reproducible regardless of execution order across streams).  A stream is
addressed by a registered name plus an optional tuple of integer indices
(replica chunk, epoch, ...), which become the SeedSequence spawn key.
"""

from __future__ import annotations

import numpy as np

# Registry of stream labels.  Order matters: the integer id enters the
# spawn key, so renumbering changes every derived stream.
STREAM_IDS = {
    "shuffle": 1,       # R_t draws of a raw shuffle run
    "rule": 2,          # rule-internal randomness (iid / quenched / memory-2)
    "renewal": 3,       # kernel-frame uniform-card draws
    "moment": 4,        # moment experiment replicas
    "uniform-control": 5,
    "lowerbound": 6,
    "couple": 7,
    "uniform-time": 8,
}

# Replicas are grouped in fixed-size chunks; each chunk owns one stream.
# The chunk size is part of the reproducibility contract and must not
# depend on thread count.
CHUNK = 16384


def stream(seed: int, name: str, *indices: int) -> np.random.Generator:
    """Return the named Philox stream for ``seed``."""
    if name not in STREAM_IDS:
        raise KeyError(f"unknown stream name {name!r}")
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(STREAM_IDS[name], *map(int, indices)))
    return np.random.Generator(np.random.Philox(ss))


def chunk_bounds(total: int, chunk: int = CHUNK) -> list[tuple[int, int]]:
    """Split ``total`` replicas into fixed chunks ``[(start, stop), ...]``."""
    return [(lo, min(lo + chunk, total)) for lo in range(0, total, chunk)]
