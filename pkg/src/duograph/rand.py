"""Deterministic random streams derived from a single user seed.

Every stochastic component (init, dropout, negative sampling, generators,
k-means restarts) draws from its own child stream so adding a consumer
never shifts the draws of another.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _component_key(part) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("stream path components must be non-negative")
        return int(part)
    digest = hashlib.blake2s(str(part).encode("utf-8"), digest_size=4).digest()
    return int.from_bytes(digest, "little")


def rng_for(seed: int, *path) -> np.random.Generator:
    """Generator for the child stream identified by `path` under `seed`."""
    spawn_key = tuple(_component_key(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=spawn_key))
