"""Dimension-matched selection from a candidate batch.

Each batch member's joint-EI score is combined (in log space) with Gaussian
likelihoods centered at the revealed minimizer coordinates; the best-matching
member becomes the next query.  Log space keeps 30 revealed coordinates from
underflowing the product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .acquisition import CandidateBatch

QEI_WEIGHT_SINGLE = "single"
QEI_WEIGHT_PER_DIMENSION = "per-dimension"


@dataclass(frozen=True)
class DimensionFact:
    """One revealed coordinate of the true minimizer, normalized units."""

    index: int
    value: float

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("index must be nonnegative")
        if abs(self.value) > 1.0 + 1e-9:
            raise ValueError(f"fact value {self.value} outside [-1, 1]")


@dataclass(frozen=True)
class DmsConfig:
    sigma: float = 1.0
    qei_exponent: str = QEI_WEIGHT_SINGLE

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.qei_exponent not in (QEI_WEIGHT_SINGLE, QEI_WEIGHT_PER_DIMENSION):
            raise ValueError(f"unknown qei_exponent {self.qei_exponent!r}")


def dms_select(
    batch: CandidateBatch,
    facts: list[DimensionFact],
    cfg: DmsConfig = DmsConfig(),
) -> tuple[np.ndarray, np.ndarray, float]:
    """Pick the batch member maximizing qEI times the dimension likelihoods.

    Score_i = w log qEI_i + sum_j log N(h_i[j]; fact_j, sigma^2), with w = 1
    by default or w = |facts| under the per-dimension weighting.  Ties break
    to the lowest batch index; with no facts the max-qEI member wins; if every
    qEI is zero only the Gaussian terms rank.
    Returns (chosen_high, chosen_low, log_likelihood).
    """
    q = len(batch)
    if q == 0:
        raise ValueError("batch must be nonempty")

    qei = np.asarray(batch.qei_scores, dtype=float)
    if not facts:
        idx = int(np.argmax(qei))
        with np.errstate(divide="ignore"):
            score = float(np.log(qei[idx])) if qei[idx] > 0 else -np.inf
        return batch.points_high[idx], batch.points_low[idx], score

    seen = set()
    for fact in facts:
        if fact.index in seen:
            raise ValueError(f"duplicate fact index {fact.index}")
        seen.add(fact.index)

    weight = 1.0 if cfg.qei_exponent == QEI_WEIGHT_SINGLE else float(len(facts))
    all_zero = bool(np.all(qei <= 0.0))
    with np.errstate(divide="ignore"):
        log_qei = np.where(qei > 0.0, np.log(np.maximum(qei, 1e-300)), -np.inf)
    base = np.zeros(q) if all_zero else weight * log_qei

    var = cfg.sigma**2
    norm_const = -0.5 * np.log(2.0 * np.pi * var)
    gauss = np.zeros(q)
    for fact in facts:
        delta = batch.points_high[:, fact.index] - fact.value
        gauss += norm_const - delta**2 / (2.0 * var)

    scores = base + gauss
    idx = int(np.argmax(scores))
    return batch.points_high[idx], batch.points_low[idx], float(scores[idx])
