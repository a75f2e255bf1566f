"""Hybrid-query black-box optimization with an audio personalization application."""

from .acquisition import CandidateBatch, expected_improvement, propose_batch, qei_scores
from .dms import DimensionFact, DmsConfig, dms_select
from .embedding import EmbeddingSpec, is_feasible, make_embedding, project_up, sample_polytope
from .gpr import (
    KernelParams,
    ObservationSet,
    PosteriorModel,
    fit_kernel_mle,
    fit_posterior,
    kernel_eval,
    predict,
    prior_predict,
    sample_joint,
)
from .objectives import ObjectiveAdapter, ObjectiveSpec, dimension_query, evaluate, make_objective, regret
from .optimizer import (
    BudgetLedger,
    OracleBoEngine,
    RegretTrace,
    RunConfig,
    run,
    run_alebo_l,
    run_oraclebo,
    select_dimensions,
)

__all__ = [
    "CandidateBatch",
    "DimensionFact",
    "DmsConfig",
    "EmbeddingSpec",
    "KernelParams",
    "ObjectiveAdapter",
    "ObjectiveSpec",
    "ObservationSet",
    "OracleBoEngine",
    "PosteriorModel",
    "BudgetLedger",
    "RegretTrace",
    "RunConfig",
    "dimension_query",
    "dms_select",
    "evaluate",
    "expected_improvement",
    "fit_kernel_mle",
    "fit_posterior",
    "is_feasible",
    "kernel_eval",
    "make_embedding",
    "make_objective",
    "predict",
    "prior_predict",
    "project_up",
    "propose_batch",
    "qei_scores",
    "regret",
    "run",
    "run_alebo_l",
    "run_oraclebo",
    "sample_joint",
    "sample_polytope",
    "select_dimensions",
]

__version__ = "0.1.0"
