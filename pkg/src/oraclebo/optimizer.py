"""Hybrid-query optimization loops.

Two loop flavors over one budget ledger: the hybrid engine spends L
dimension queries up front, seeds the surrogate with a few random feasible
evaluations, then iterates batch-propose / dimension-match / evaluate /
update.  The reduced-space baseline instead pins the revealed coordinates
and runs plain single-point EI over an embedding of the remaining ones.

Both engines expose propose/observe stepping so a live session (scores
arriving over HTTP) drives exactly the same code path as a batch run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import gpr
from .acquisition import argmax_ei, propose_batch
from .dms import DimensionFact, DmsConfig, dms_select
from .embedding import from_matrix, make_embedding, project_up, sample_polytope
from .errors import UnsupportedStrategyError
from .rng import derive_seed, stream

MODE_ORACLEBO = "oraclebo"
MODE_ALEBO_L = "alebo_l"
MODE_ALEBO_PLAIN = "alebo_plain"
MODES = (MODE_ORACLEBO, MODE_ALEBO_L, MODE_ALEBO_PLAIN)

_TAG_RINIT = 0x21
_TAG_BATCH = 0x22
_TAG_MLE = 0x23
_TAG_SELECT = 0x24
_TAG_FACT_NOISE = 0x25


class BudgetExceededError(RuntimeError):
    pass


@dataclass
class BudgetLedger:
    """Joint counter for both query types; Q_f + Q_d never exceeds the total."""

    total_budget: int
    filter_queries_used: int = 0
    dimension_queries_used: int = 0

    @property
    def used(self) -> int:
        return self.filter_queries_used + self.dimension_queries_used

    @property
    def remaining(self) -> int:
        return self.total_budget - self.used

    def charge_filter(self, cost: int = 1) -> None:
        if self.used + cost > self.total_budget:
            raise BudgetExceededError("filter query would exceed the budget")
        self.filter_queries_used += cost

    def charge_dimension(self, cost: int = 1) -> None:
        if self.used + cost > self.total_budget:
            raise BudgetExceededError("dimension query would exceed the budget")
        self.dimension_queries_used += cost


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; two runs with equal configs produce equal traces."""

    n_high: int
    n_low: int = 4
    f_evals: int = 50
    r_init: int = 5
    q: int = 5
    n_mc: int = 256
    n_raw: int = 512
    dms: DmsConfig = field(default_factory=DmsConfig)
    l_count: int = 0
    l_selection: str | tuple[int, ...] = "random"
    seed: int = 0
    mode: str = MODE_ORACLEBO
    total_budget: int | None = None      # defaults to l_count + f_evals
    noise_variance: float = 1e-6
    kernel_variant: str = gpr.VARIANT_MAHALANOBIS
    mle_restarts: int = 1
    batch_set_score: str = "max"
    fact_noise_std: float = 0.0          # optional corruption of revealed coordinates
    dimension_cost: int = 1

    def __post_init__(self):
        if self.r_init > self.f_evals:
            raise ValueError("r_init must not exceed f_evals")
        if self.l_count > self.n_high:
            raise ValueError("l_count must not exceed n_high")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def budget(self) -> int:
        if self.total_budget is not None:
            return self.total_budget
        return self.l_count * self.dimension_cost + self.f_evals


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    queried_h: np.ndarray
    observed_f: float
    best_so_far: float
    regret: float | None
    filter_queries_used: int
    dimension_queries_used: int
    total_budget: int


@dataclass
class RegretTrace:
    config: RunConfig
    facts: list[DimensionFact] = field(default_factory=list)
    records: list[TraceRecord] = field(default_factory=list)
    error: str | None = None

    @property
    def best_so_far(self) -> float:
        return self.records[-1].best_so_far if self.records else np.inf

    @property
    def final_regret(self) -> float | None:
        return self.records[-1].regret if self.records else None


@dataclass(frozen=True)
class Proposal:
    y_low: np.ndarray | None  # None when the point is fully determined
    h_high: np.ndarray


class OracleBoEngine:
    """Stepping core of the hybrid loop.

    State is the observation set alone, so an engine rebuilt from a stored
    (y, f) history proposes exactly what the original would have.
    """

    def __init__(self, cfg: RunConfig, facts: list[DimensionFact]):
        self.cfg = cfg
        self.facts = list(facts)
        self.spec = make_embedding(cfg.n_high, cfg.n_low, cfg.seed)
        self.obs = gpr.ObservationSet.empty(cfg.n_low)
        self.queries = 0
        self._init_points = (
            sample_polytope(self.spec, cfg.r_init, derive_seed(cfg.seed, _TAG_RINIT))
            if cfg.r_init > 0
            else np.zeros((0, cfg.n_low))
        )

    def propose(self) -> Proposal:
        cfg = self.cfg
        if self.queries < cfg.r_init:
            y = self._init_points[self.queries]
            return Proposal(y, project_up(self.spec, y))
        kernel = gpr.fit_kernel_mle(
            self.obs,
            variant=cfg.kernel_variant,
            restarts=cfg.mle_restarts,
            seed=derive_seed(cfg.seed, _TAG_MLE, self.queries),
            noise_variance=cfg.noise_variance,
        )
        model = gpr.fit_posterior(self.obs, kernel)
        _, best_f = self.obs.best()
        batch = propose_batch(
            model,
            self.spec,
            cfg.q,
            best_f,
            n_raw=cfg.n_raw,
            n_mc=cfg.n_mc,
            seed=derive_seed(cfg.seed, _TAG_BATCH, self.queries),
            set_score=cfg.batch_set_score,
        )
        h, y, _ = dms_select(batch, self.facts, cfg.dms)
        return Proposal(y, h)

    def observe(self, proposal: Proposal, value: float) -> None:
        self.obs = self.obs.with_observation(proposal.y_low, value)
        self.queries += 1


class AleboEngine:
    """Reduced-space baseline: revealed coordinates pinned, plain EI on the rest.

    The reduced projection reuses the seeded full matrix with the revealed
    columns dropped, so a run with L = 0 is bit-identical to the plain
    baseline and runs at different L share their embedding luck (paired
    comparisons measure the reduction, not a fresh matrix draw).
    """

    def __init__(self, cfg: RunConfig, fixed: dict[int, float]):
        self.cfg = cfg
        self.fixed = dict(fixed)
        self.free = np.array([j for j in range(cfg.n_high) if j not in self.fixed], dtype=int)
        self._template = np.zeros(cfg.n_high)
        for j, v in self.fixed.items():
            self._template[j] = v
        n_free = self.free.shape[0]
        if n_free == 0:
            self.spec = None
            self.obs = None
            self._init_points = None
        elif n_free >= cfg.n_low:
            full = make_embedding(cfg.n_high, cfg.n_low, cfg.seed)
            self.spec = from_matrix(full.matrix_b[:, self.free], cfg.seed)
        else:
            self.spec = make_embedding(n_free, n_free, cfg.seed)
        if n_free:
            d = self.spec.n_low
            self.obs = gpr.ObservationSet.empty(d)
            self._init_points = (
                sample_polytope(self.spec, cfg.r_init, derive_seed(cfg.seed, _TAG_RINIT))
                if cfg.r_init > 0
                else np.zeros((0, d))
            )
        self.queries = 0

    def _assemble(self, y: np.ndarray | None) -> np.ndarray:
        h = self._template.copy()
        if y is not None:
            h[self.free] = project_up(self.spec, y)
        return h

    def propose(self) -> Proposal:
        cfg = self.cfg
        if self.spec is None:  # every coordinate revealed
            return Proposal(None, self._template.copy())
        if self.queries < cfg.r_init:
            y = self._init_points[self.queries]
            return Proposal(y, self._assemble(y))
        kernel = gpr.fit_kernel_mle(
            self.obs,
            variant=cfg.kernel_variant,
            restarts=cfg.mle_restarts,
            seed=derive_seed(cfg.seed, _TAG_MLE, self.queries),
            noise_variance=cfg.noise_variance,
        )
        model = gpr.fit_posterior(self.obs, kernel)
        _, best_f = self.obs.best()
        y = argmax_ei(
            model,
            self.spec,
            best_f,
            n_raw=cfg.n_raw,
            n_local=2 * cfg.q,
            seed=derive_seed(cfg.seed, _TAG_BATCH, self.queries),
        )
        return Proposal(y, self._assemble(y))

    def observe(self, proposal: Proposal, value: float) -> None:
        if self.spec is not None:
            self.obs = self.obs.with_observation(proposal.y_low, value)
        self.queries += 1


def select_dimensions(objective, count: int, strategy: str, seed: int) -> list[int]:
    """Choose which coordinates to reveal.

    ``random`` samples uniformly without replacement.  ``top`` sweeps each
    coordinate over 21 points (others held at the domain midpoint), ranks by
    the variance of the objective along the sweep, and keeps the largest;
    this reads the objective directly so it only applies to synthetic ones.
    """
    n = objective.n_high
    if count > n:
        raise ValueError("count must not exceed the objective dimension")
    if count == n:
        return list(range(n))
    if strategy == "random":
        gen = stream(seed, _TAG_SELECT)
        return sorted(int(j) for j in gen.choice(n, size=count, replace=False))
    if strategy == "top":
        if not getattr(objective, "supports_sweep", False):
            raise UnsupportedStrategyError("objective cannot be swept per-coordinate")
        grid = np.linspace(-1.0, 1.0, 21)
        variances = np.zeros(n)
        h = np.zeros(n)
        for j in range(n):
            vals = np.empty(grid.shape[0])
            for i, g in enumerate(grid):
                h[j] = g
                vals[i] = objective.evaluate(h)
            h[j] = 0.0
            variances[j] = np.var(vals)
        order = np.argsort(-variances, kind="stable")
        return sorted(int(j) for j in order[:count])
    raise ValueError(f"unknown strategy {strategy!r}")


def _gather_facts(objective, dim_oracle, cfg: RunConfig, ledger: BudgetLedger) -> list[DimensionFact]:
    if cfg.l_count == 0:
        return []
    if isinstance(cfg.l_selection, (tuple, list)):
        dims = [int(j) for j in cfg.l_selection[: cfg.l_count]]
    else:
        dims = select_dimensions(objective, cfg.l_count, cfg.l_selection, derive_seed(cfg.seed, _TAG_SELECT))
    noise_gen = stream(cfg.seed, _TAG_FACT_NOISE) if cfg.fact_noise_std > 0 else None
    facts = []
    for j in dims:
        if ledger.remaining < cfg.dimension_cost:
            break  # budget exhausted mid-stage: clean stop
        fact = dim_oracle.query(j)
        if noise_gen is not None:
            noisy = fact.value + cfg.fact_noise_std * noise_gen.standard_normal()
            fact = DimensionFact(fact.index, float(np.clip(noisy, -1.0, 1.0)))
        ledger.charge_dimension(cfg.dimension_cost)
        facts.append(fact)
    return facts


def _drive(engine, objective, cfg: RunConfig, ledger: BudgetLedger, trace: RegretTrace) -> RegretTrace:
    known_min = getattr(objective, "known_minimum", None)
    best = np.inf
    while engine.queries < cfg.f_evals and ledger.remaining >= 1:
        proposal = engine.propose()
        try:
            value = float(objective.evaluate(proposal.h_high))
        except Exception as exc:  # objective failure truncates the trace
            trace.error = f"objective evaluation failed: {exc}"
            break
        ledger.charge_filter()
        engine.observe(proposal, value)
        best = min(best, value)
        assert ledger.used <= ledger.total_budget
        trace.records.append(
            TraceRecord(
                iteration=engine.queries,
                queried_h=proposal.h_high,
                observed_f=value,
                best_so_far=best,
                regret=None if known_min is None else best - known_min,
                filter_queries_used=ledger.filter_queries_used,
                dimension_queries_used=ledger.dimension_queries_used,
                total_budget=ledger.total_budget,
            )
        )
    return trace


def run_oraclebo(objective, dim_oracle, cfg: RunConfig) -> RegretTrace:
    """Hybrid loop: dimension queries first, then batch-propose-and-match."""
    if objective.n_high != cfg.n_high:
        raise ValueError("objective dimension does not match the config")
    ledger = BudgetLedger(cfg.budget)
    trace = RegretTrace(cfg)
    trace.facts = _gather_facts(objective, dim_oracle, cfg, ledger)
    engine = OracleBoEngine(cfg, trace.facts)
    return _drive(engine, objective, cfg, ledger, trace)


def run_alebo_l(objective, dim_oracle, cfg: RunConfig) -> RegretTrace:
    """Baseline: spend the same L queries, then search only the unrevealed coordinates."""
    if objective.n_high != cfg.n_high:
        raise ValueError("objective dimension does not match the config")
    ledger = BudgetLedger(cfg.budget)
    trace = RegretTrace(cfg)
    trace.facts = _gather_facts(objective, dim_oracle, cfg, ledger)
    engine = AleboEngine(cfg, {f.index: f.value for f in trace.facts})
    return _drive(engine, objective, cfg, ledger, trace)


def run(objective, dim_oracle, cfg: RunConfig) -> RegretTrace:
    """Dispatch on ``cfg.mode`` (the plain mode forces L = 0)."""
    if cfg.mode == MODE_ORACLEBO:
        return run_oraclebo(objective, dim_oracle, cfg)
    if cfg.mode == MODE_ALEBO_L:
        return run_alebo_l(objective, dim_oracle, cfg)
    if cfg.mode == MODE_ALEBO_PLAIN:
        return run_alebo_l(objective, dim_oracle, replace(cfg, l_count=0))
    raise ValueError(f"unknown mode {cfg.mode!r}")
