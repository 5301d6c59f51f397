"""Deterministic random-stream derivation.

All randomness in the package flows from one unsigned 64-bit seed.  Streams
for unrelated purposes (corpus sampling, corpus splitting, projection
directions, experiment trials) are derived by hashing a purpose string and
mixing it with the seed and any counter indices through ``SeedSequence``.
Per-item substreams (one per document, one per projection) are keyed by the
item index, so work can be sharded or reordered without changing results:
stream(seed, "split", m) is the same no matter which worker asks for it.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache

import numpy as np

_MASK64 = (1 << 64) - 1


@lru_cache(maxsize=None)
def _purpose_key(purpose: str) -> int:
    digest = hashlib.sha256(purpose.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def seed_sequence(seed: int, purpose: str, *indices: int) -> np.random.SeedSequence:
    """SeedSequence for (seed, purpose, indices), stable across runs and platforms."""
    entropy = [int(seed) & _MASK64, _purpose_key(purpose)]
    entropy.extend(int(i) & _MASK64 for i in indices)
    return np.random.SeedSequence(entropy)


def stream(seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """A PCG64 generator for (seed, purpose, indices)."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, purpose, *indices)))
