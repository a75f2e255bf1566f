"""Seeded random streams.

Every stochastic operation in the engine draws from a Philox4x64
counter-based generator keyed by ``(seed, context)``.  Distinct context
tags give statistically independent streams from one user-facing seed,
and the (seed, tags) -> draws mapping is stable across platforms.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def fold(*parts: int) -> int:
    """Fold integer tags into one 64-bit word (order-sensitive)."""
    h = 0
    for p in parts:
        h = _splitmix64(h ^ (int(p) & _MASK64))
    return h


def stream(seed: int, *tags: int) -> np.random.Generator:
    """Generator keyed by ``seed`` and a tuple of context tags."""
    key = np.array([int(seed) & _MASK64, fold(*tags)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed: int, *tags: int) -> int:
    """Deterministic sub-seed for APIs that take a plain integer seed."""
    return fold(int(seed) & _MASK64, *tags) & ((1 << 63) - 1)
