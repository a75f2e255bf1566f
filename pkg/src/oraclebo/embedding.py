"""Random linear embedding between the high-dimensional search box and R^d.

A seeded projection matrix ``B`` (d x N, standard-normal entries, columns
scaled to unit length) maps the box [-1, 1]^N into R^d.  Candidates live in
the low space and are pushed back up through the pseudo-inverse ``B``-dagger;
the set of low points whose up-projection stays inside the box is a convex
polytope, sampled here by hit-and-run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .rng import stream

log = logging.getLogger(__name__)

_TAG_MATRIX = 0x01
_TAG_WALK = 0x02

FEASIBILITY_TOL = 1e-12
_IDENTITY_TOL = 1e-8
_BURN_IN_STEPS = 50


@dataclass(frozen=True)
class EmbeddingSpec:
    """Immutable projection pair: ``matrix_b`` (d x N) and its pseudo-inverse (N x d)."""

    n_high: int
    n_low: int
    matrix_b: np.ndarray
    pseudo_inverse: np.ndarray
    seed: int

    def __post_init__(self):
        ident = self.matrix_b @ self.pseudo_inverse
        err = np.max(np.abs(ident - np.eye(self.n_low)))
        if err > _IDENTITY_TOL:
            raise NumericalError(f"B @ pinv(B) deviates from identity by {err:.3e}")


def from_matrix(matrix_b: np.ndarray, seed: int) -> EmbeddingSpec:
    """Build a spec around an existing projection matrix (e.g. a column subset)."""
    matrix_b = np.asarray(matrix_b, dtype=float)
    n_low, n_high = matrix_b.shape
    pinv = np.linalg.solve(matrix_b @ matrix_b.T, matrix_b).T
    return EmbeddingSpec(n_high, n_low, matrix_b, pinv, seed)


def make_embedding(n_high: int, n_low: int, seed: int) -> EmbeddingSpec:
    """Draw a seeded embedding matrix with unit-norm columns.

    On (vanishingly unlikely) rank deficiency the seed is bumped by one and
    the substitution logged.
    """
    if not 1 <= n_low <= n_high:
        raise ValueError(f"need 1 <= n_low <= n_high, got d={n_low}, N={n_high}")
    attempt_seed = seed
    for _ in range(16):
        gen = stream(attempt_seed, _TAG_MATRIX)
        b = gen.standard_normal((n_low, n_high))
        b /= np.linalg.norm(b, axis=0, keepdims=True)
        gram = b @ b.T
        try:
            pinv = np.linalg.solve(gram, b).T  # B^T (B B^T)^-1
        except np.linalg.LinAlgError:
            pinv = None
        if pinv is not None and np.max(np.abs(b @ pinv - np.eye(n_low))) <= _IDENTITY_TOL:
            if attempt_seed != seed:
                log.warning("embedding seed %d was rank deficient; used %d", seed, attempt_seed)
            return EmbeddingSpec(n_high, n_low, b, pinv, attempt_seed)
        attempt_seed += 1
    raise NumericalError(f"no full-rank embedding found starting from seed {seed}")


def project_up(spec: EmbeddingSpec, y: np.ndarray) -> np.ndarray:
    """Map a low-space point to the full space (no clipping)."""
    y = np.asarray(y, dtype=float)
    if y.shape != (spec.n_low,):
        raise ValueError(f"expected shape ({spec.n_low},), got {y.shape}")
    return spec.pseudo_inverse @ y


def is_feasible(spec: EmbeddingSpec, y: np.ndarray) -> bool:
    """True iff the up-projection stays inside [-1, 1]^N."""
    return bool(np.max(np.abs(project_up(spec, y))) <= 1.0 + FEASIBILITY_TOL)


def sample_polytope(spec: EmbeddingSpec, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` feasible low-space points.

    Each point is the endpoint of an independent hit-and-run chain started
    at the origin (always feasible) and advanced 50 steps; all chains are
    stepped together so the call is a handful of vectorized passes.
    Returns an array of shape (count, d).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    gen = stream(seed, _TAG_WALK)
    p = spec.pseudo_inverse  # (N, d) constraint rows
    x = np.zeros((count, spec.n_low))
    px = np.zeros((count, spec.n_high))
    for _ in range(_BURN_IN_STEPS):
        u = gen.standard_normal((count, spec.n_low))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        pu = u @ p.T
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = (-1.0 - px) / pu
            hi = (1.0 - px) / pu
        inert = np.abs(pu) < 1e-300
        t_hi = np.where(inert, np.inf, np.maximum(lo, hi)).min(axis=1)
        t_lo = np.where(inert, -np.inf, np.minimum(lo, hi)).max(axis=1)
        t = t_lo + gen.uniform(size=count) * (t_hi - t_lo)
        t = np.where(t_hi > t_lo, t, 0.0)
        x += t[:, None] * u
        px += t[:, None] * pu
    return x
