"""Keyed, splittable random streams.

Every random draw in the package comes from a Philox (counter-based) generator
whose key is derived from ``(seed, *path)``.  Two calls with the same seed and
path produce the same stream; distinct paths produce statistically independent
streams.  Path components may be ints, strings, floats or tuples of these.
"""

from __future__ import annotations

import zlib

import numpy as np

MAX_SEED = 2**64 - 1


def _component(part) -> int:
    if isinstance(part, (int, np.integer)) and not isinstance(part, bool) and part >= 0:
        return int(part)
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if isinstance(part, (tuple, float)):
        return zlib.crc32(repr(part).encode("utf-8"))
    raise ValueError(f"unsupported stream key component {part!r}")


def stream(seed: int, *path) -> np.random.Generator:
    """Return the generator keyed by ``seed`` and ``path``."""
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(_component(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def random_signs(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform +/-1 as float64."""
    return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0
