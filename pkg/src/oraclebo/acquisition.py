"""Expected improvement and the batch proposal step.

A proposal draws a pool of feasible low-space candidates, ranks them by
closed-form single-point EI, carves the ranking into q overlapping size-q
sets, scores each set by Monte-Carlo joint EI, and returns the winning set.
Searching all size-q subsets exactly is intractable; ranked windows over a
seeded pool keep the proposal deterministic and cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import gpr
from .embedding import EmbeddingSpec, is_feasible, project_up, sample_polytope
from .rng import derive_seed, stream

_TAG_POOL = 0x11
_TAG_PERTURB = 0x12
_TAG_SET = 0x13

_PERTURB_STEP = 0.05
_DEGENERATE_STD = 1e-12


@dataclass(frozen=True)
class CandidateBatch:
    """q proposed points in both spaces with their joint-EI scores."""

    points_low: np.ndarray   # (q, d)
    points_high: np.ndarray  # (q, N)
    qei_scores: np.ndarray   # (q,)

    def __post_init__(self):
        q = self.points_low.shape[0]
        if not (q >= 1 and self.points_high.shape[0] == q and self.qei_scores.shape[0] == q):
            raise ValueError("batch members must have equal length >= 1")

    def __len__(self) -> int:
        return self.points_low.shape[0]


def expected_improvement(model: gpr.PosteriorModel, y: np.ndarray, best_f: float) -> float:
    """Closed-form E[(best_f - f(y))^+] under the posterior."""
    return float(_ei_vector(model, np.atleast_2d(np.asarray(y, dtype=float)), best_f)[0])


def _ei_vector(model: gpr.PosteriorModel, points: np.ndarray, best_f: float) -> np.ndarray:
    mean, var = gpr.predict(model, points)
    s = np.sqrt(var)
    gap = best_f - mean
    ei = np.maximum(gap, 0.0)
    live = s > _DEGENERATE_STD
    if np.any(live):
        z = gap[live] / s[live]
        ei[live] = gap[live] * norm.cdf(z) + s[live] * norm.pdf(z)
    return np.maximum(ei, 0.0)


def qei_scores(
    model: gpr.PosteriorModel,
    batch: np.ndarray,
    best_f: float,
    n_mc: int,
    seed: int,
) -> np.ndarray:
    """Per-member improvement marginalized under joint posterior draws.

    score_i = mean over joint samples of (best_f - f_i)^+ with all q members
    drawn together, so correlated candidates share their improvement mass.
    """
    batch = np.atleast_2d(np.asarray(batch, dtype=float))
    if n_mc < 1:
        raise ValueError("n_mc must be >= 1")
    samples = gpr.sample_joint(model, batch, n_mc, seed)
    return np.mean(np.maximum(best_f - samples, 0.0), axis=0)


def argmax_ei(
    model: gpr.PosteriorModel,
    spec: EmbeddingSpec,
    best_f: float,
    n_raw: int = 512,
    n_local: int = 10,
    seed: int = 0,
) -> np.ndarray:
    """Single-point EI maximization over a feasible candidate pool.

    The pool mixes ``n_raw`` polytope samples with ``n_local`` perturbations
    of the incumbent at each of several step scales, standing in for the
    usual multi-start local optimization of EI.
    """
    pool = sample_polytope(spec, n_raw, derive_seed(seed, _TAG_POOL))
    best_idx, _ = model.observations.best()
    incumbent = model.observations.points[best_idx]
    gen = stream(seed, _TAG_PERTURB)
    local = [incumbent.copy()]
    for scale in (4.0, 1.0, 0.25, 0.0625):
        for _ in range(n_local):
            direction = gen.standard_normal(spec.n_low)
            direction /= np.linalg.norm(direction)
            step = _PERTURB_STEP * scale
            cand = incumbent + step * direction
            while not is_feasible(spec, cand) and step > 1e-9:
                step *= 0.5
                cand = incumbent + step * direction
            if is_feasible(spec, cand):
                local.append(cand)
    pool = np.vstack([pool, np.array(local)])
    ei = _ei_vector(model, pool, best_f)
    return pool[int(np.argmax(ei))]


def propose_batch(
    model: gpr.PosteriorModel,
    spec: EmbeddingSpec,
    q: int,
    best_f: float,
    n_raw: int = 512,
    n_mc: int = 256,
    seed: int = 0,
    set_score: str = "max",
) -> CandidateBatch:
    """Propose q jointly-scored feasible candidates.

    Pool = ``n_raw`` polytope samples plus 2q small perturbations of the best
    observed point (step 0.05, shrunk toward the incumbent until feasible).
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if n_raw < q:
        raise ValueError("n_raw must be >= q")
    if set_score not in ("max", "sum"):
        raise ValueError("set_score must be 'max' or 'sum'")

    pool = sample_polytope(spec, n_raw, derive_seed(seed, _TAG_POOL))
    best_idx, _ = model.observations.best()
    incumbent = model.observations.points[best_idx]
    gen = stream(seed, _TAG_PERTURB)
    local = []
    for _ in range(2 * q):
        direction = gen.standard_normal(spec.n_low)
        direction /= np.linalg.norm(direction)
        step = _PERTURB_STEP
        cand = incumbent + step * direction
        while not is_feasible(spec, cand) and step > 1e-9:
            step *= 0.5
            cand = incumbent + step * direction
        local.append(cand if is_feasible(spec, cand) else incumbent.copy())
    pool = np.vstack([pool, np.array(local)])

    ei = _ei_vector(model, pool, best_f)
    order = np.argsort(-ei, kind="stable")

    # q candidate sets = consecutive windows down the EI ranking; window k
    # holds ranks [k, k+q)
    best_set = None
    best_set_score = -np.inf
    best_set_qei = None
    for k in range(q):
        members = pool[order[k : k + q]]
        scores = qei_scores(model, members, best_f, n_mc, derive_seed(seed, _TAG_SET, k))
        agg = float(np.max(scores)) if set_score == "max" else float(np.sum(scores))
        if agg > best_set_score:
            best_set, best_set_score, best_set_qei = members, agg, scores

    high = np.array([project_up(spec, y) for y in best_set])
    return CandidateBatch(best_set, high, best_set_qei)
