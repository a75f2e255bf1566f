"""Audio personalization sessions over the hybrid-query engine.

One scene = one listener (clip + corruption) plus an engine budget split
between audiogram-style dimension queries and listening ratings.  The same
stepping logic backs the scripted simulated-listener runs and the live HTTP
service, so a replayed score sequence reproduces a scripted run exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import audio
from .dms import DimensionFact, DmsConfig
from .optimizer import BudgetLedger, OracleBoEngine, Proposal, RunConfig


@dataclass(frozen=True)
class SceneConfig:
    """Everything needed to reconstruct a personalization session."""

    clip_id: str = "speechish"
    n_bins: int = 500
    budget: int = 30
    l_count: int = 5
    seed: int = 0
    corruption_kind: str = "random"          # "random" | "profile"
    corruption_seed: int = 0
    corruption_knots: int | None = None      # None: per-bin roughness
    profile_path: str | None = None
    d0: float = 10.0
    n_low: int = 4
    q: int = 5
    n_mc: int = 128
    n_raw: int = 256
    r_init: int = 5
    sigma: float = 1.0
    mle_restarts: int = 1

    def __post_init__(self):
        if self.l_count > 7:
            raise ValueError("at most 7 dimension queries exist (the clinical frequencies)")
        if self.budget < self.l_count:
            raise ValueError("budget must cover the dimension queries")
        if self.corruption_kind not in ("random", "profile"):
            raise ValueError(f"unknown corruption kind {self.corruption_kind!r}")
        if self.corruption_kind == "profile" and not self.profile_path:
            raise ValueError("profile corruption needs profile_path")

    @property
    def f_evals(self) -> int:
        return self.budget - self.l_count


def build_listener(scene: SceneConfig) -> audio.ListenerModel:
    clip = audio.builtin_clip(scene.clip_id)
    if scene.corruption_kind == "profile":
        profile = audio.load_profile(scene.profile_path)
        corruption = audio.corruption_from_profile(profile, scene.n_bins)
    else:
        corruption = audio.random_corruption(scene.n_bins, scene.corruption_seed, scene.corruption_knots)
    return audio.ListenerModel(clip, corruption, scene.d0)


def scene_facts(scene: SceneConfig, listener: audio.ListenerModel) -> list[DimensionFact]:
    """The L lowest clinical frequencies, revealed audiogram-style."""
    bins = audio.clinical_bin_indices(scene.n_bins)
    return [audio.dimension_query_audio(listener, j) for j in bins[: scene.l_count]]


def engine_config(scene: SceneConfig) -> RunConfig:
    return RunConfig(
        n_high=scene.n_bins,
        n_low=scene.n_low,
        f_evals=scene.f_evals,
        r_init=min(scene.r_init, scene.f_evals),
        q=scene.q,
        n_mc=scene.n_mc,
        n_raw=scene.n_raw,
        dms=DmsConfig(sigma=scene.sigma),
        l_count=scene.l_count,
        l_selection="random",  # facts are supplied explicitly, unused
        seed=scene.seed,
        total_budget=scene.budget,
        mle_restarts=scene.mle_restarts,
    )


@dataclass
class SessionStep:
    iteration: int
    gains_db: np.ndarray
    score: float
    best_score: float
    filter_queries_used: int
    dimension_queries_used: int


@dataclass
class SessionTrace:
    scene: SceneConfig
    facts: list[DimensionFact]
    steps: list[SessionStep] = field(default_factory=list)

    @property
    def best_score(self) -> float:
        return max((s.score for s in self.steps), default=0.0)

    @property
    def best_gains_db(self) -> np.ndarray | None:
        best = None
        for s in self.steps:
            if best is None or s.score > best.score:
                best = s
        return None if best is None else best.gains_db


def candidate_filter(proposal: Proposal) -> audio.SpectralFilter:
    """A proposed point, clipped into the filter's dB range."""
    return audio.SpectralFilter.from_normalized(np.clip(proposal.h_high, -1.0, 1.0))


def run_scripted_session(scene: SceneConfig, listener: audio.ListenerModel | None = None) -> SessionTrace:
    """Drive a full session with the simulated listener supplying every score."""
    listener = listener or build_listener(scene)
    facts = scene_facts(scene, listener)
    ledger = BudgetLedger(scene.budget)
    for _ in facts:
        ledger.charge_dimension()
    engine = OracleBoEngine(engine_config(scene), facts)
    trace = SessionTrace(scene, facts)
    best = -np.inf
    while engine.queries < scene.f_evals and ledger.remaining >= 1:
        proposal = engine.propose()
        filt = candidate_filter(proposal)
        score = audio.simulated_score(listener, filt)
        ledger.charge_filter()
        engine.observe(proposal, -score)  # engine minimizes; listeners maximize
        best = max(best, score)
        trace.steps.append(
            SessionStep(
                iteration=engine.queries,
                gains_db=filt.gains_db,
                score=score,
                best_score=best,
                filter_queries_used=ledger.filter_queries_used,
                dimension_queries_used=ledger.dimension_queries_used,
            )
        )
    return trace


def baseline_score(scene: SceneConfig, listener: audio.ListenerModel) -> float:
    """Score of the classic 7-point interpolated audiogram compensation."""
    profile = audio.measured_profile(listener.corruption)
    return audio.simulated_score(listener, audio.audiogram_baseline(profile, scene.n_bins))


def corrupted_score(scene: SceneConfig, listener: audio.ListenerModel) -> float:
    """Score with no compensation at all."""
    return audio.simulated_score(listener, audio.SpectralFilter(np.zeros(scene.n_bins)))
