"""
Seed derivation for reproducible simulations.

Every consumer of randomness (schedule, each agent, each session) gets its own
numpy Generator derived from the run seed plus a stable key, so adding a
consumer never perturbs the others.
"""

import hashlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _stable_key(key: Key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key)
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def seed_sequence(seed: int, *keys: Key) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), *(_stable_key(k) for k in keys)])


def stream(seed: int, *keys: Key) -> np.random.Generator:
    """Independent generator for (seed, *keys)."""
    return np.random.default_rng(seed_sequence(seed, *keys))


def derive_seed(seed: int, *keys: Key) -> int:
    """64-bit child seed, e.g. for the k-th session of a multi-group run."""
    return int(seed_sequence(seed, *keys).generate_state(1, dtype=np.uint64)[0])
