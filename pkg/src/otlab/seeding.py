"""Named substreams on top of numpy SeedSequence.

Every random quantity in the package derives from a root seed through a
chain of named keys, so independently seeded components (sampler pairs,
sweep cells, Monte-Carlo metrics) never share or race a stream.
"""

from __future__ import annotations

import hashlib

import numpy as np


def key_int(key) -> int:
    """Map a str/int stream key to a stable uint32 spawn-key entry."""
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFFFFFF
    if isinstance(key, str):
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        return int.from_bytes(digest[:4], "big")
    raise TypeError(f"stream keys must be int or str, got {type(key).__name__}")


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def child(seed, *keys) -> np.random.SeedSequence:
    """Derive a child SeedSequence; independent streams for distinct keys."""
    ss = as_seed_sequence(seed)
    spawn = tuple(ss.spawn_key) + tuple(key_int(k) for k in keys)
    return np.random.SeedSequence(entropy=ss.entropy, spawn_key=spawn)


def rng_from(seed, *keys) -> np.random.Generator:
    return np.random.default_rng(child(seed, *keys) if keys else as_seed_sequence(seed))
