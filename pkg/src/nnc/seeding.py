"""Deterministic derivation of independent random streams from one master seed."""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _avalanche(x: int) -> int:
    # splitmix64 finalizer: full-avalanche 64-bit mix
    x &= _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def derive_seed(master_seed: int, *path: int) -> int:
    """Mix a master seed and an index path into one 64-bit stream seed.

    Each path element is absorbed with an avalanche round, so seeds derived
    from distinct paths (e.g. trial 3 of run A vs. trial 3 of a bootstrap
    column) are unrelated even when the integers coincide.
    """
    state = _avalanche(master_seed)
    for v in path:
        state = _avalanche(state ^ ((int(v) * _GOLDEN) & _MASK64))
    return state


def make_rng(master_seed: int, *path: int) -> np.random.Generator:
    """PCG64 generator seeded by ``derive_seed(master_seed, *path)``."""
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, *path)))
