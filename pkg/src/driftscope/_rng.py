"""Deterministic seed derivation and hash-based noise streams.

Every sampling operation derives its own numpy Generator from the master
seed plus a string scope, so results depend only on (inputs, seed) and
never on call order. The splitmix64 mix gives the synthetic backend a
vectorizable per-occurrence noise source that is stable across platforms
and numpy versions.
"""

from __future__ import annotations

import hashlib

import numpy as np

_U64 = np.uint64


def derive_seed(*parts: object) -> int:
    """64-bit seed hashed from arbitrary string/int parts."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def generator(*parts: object) -> np.random.Generator:
    """Independent Generator for the given scope."""
    return np.random.default_rng(derive_seed(*parts))


def splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer over uint64 input."""
    z = x + _U64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


def uniform01(bits: np.ndarray) -> np.ndarray:
    """Map uint64 words to floats strictly inside (0, 1)."""
    return ((bits >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53


def gumbel_matrix(seeds: np.ndarray, width: int) -> np.ndarray:
    """One row of standard Gumbel noise per seed, ``width`` columns.

    Row ``i`` depends only on ``seeds[i]``, so the noise attached to an
    occurrence is independent of how occurrences are batched.
    """
    cols = (np.arange(1, width + 1, dtype=np.uint64)) * _U64(0x9E3779B97F4A7C15)
    bits = splitmix64(seeds[:, None].astype(np.uint64) ^ cols[None, :])
    u = uniform01(bits)
    return -np.log(-np.log(u))
