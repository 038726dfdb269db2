"""Counter-based random streams for order-independent, bit-reproducible draws.

Every stochastic draw in this package is a pure function of (seed, point
index, draw index).  That makes results independent of chunking, thread
count, and processing order, which the weather simulation and the batch
pipeline rely on.  The generator is a splitmix64-style avalanche hash; it
is not cryptographic and does not need to be.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(value: int) -> int:
    """One splitmix64 step: advance by the golden gamma and finalize."""
    z = (value + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix_seeds(a: int, b: int) -> int:
    """Combine two 64-bit values into a new well-avalanched seed."""
    return splitmix64((a & _MASK64) ^ splitmix64(b & _MASK64))


def path_hash(relpath: str) -> int:
    """Stable 64-bit hash of a relative path (little-endian blake2b-8)."""
    digest = hashlib.blake2b(relpath.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def frame_seed(global_seed: int, relpath: str) -> int:
    """Per-frame seed: splitmix of the global seed and the path hash.

    Adding or removing frames from a job never perturbs the seed of any
    other frame.
    """
    return mix_seeds(global_seed, path_hash(relpath))


def _fmix64(z: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer over a uint64 array."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def point_uniforms(seed: int, n_points: int, n_draws: int,
                   offset: int = 0) -> np.ndarray:
    """Per-point uniform variates in [0, 1), shaped (n_draws, n_points).

    Draw (j, i) depends only on (seed, offset + i, j): the stream for a
    point is keyed by an avalanche hash of its absolute index, so any
    subset of points can be evaluated in any order, in any number of
    chunks, and produce the same values.
    """
    idx = np.arange(offset, offset + n_points, dtype=np.uint64)
    key = _fmix64(idx * np.uint64(_GOLDEN) + np.uint64(1)) ^ np.uint64(seed & _MASK64)
    out = np.empty((n_draws, n_points), dtype=np.float64)
    for j in range(n_draws):
        state = key + np.uint64(((j + 1) * _GOLDEN) & _MASK64)
        # top 53 bits -> float64 in [0, 1)
        out[j] = (_fmix64(state) >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return out
