"""cevlab: explicit positivity-preserving simulation of the mean-reverting
CEV process, with a coupled Monte Carlo harness for strong-order, moment,
and tail diagnostics."""

__version__ = "0.1.0"

from .brownian import IncrementArray, StreamKey, coarsen, sample_increments
from .errors import (
    CevlabError,
    CouplingError,
    GridMismatch,
    InfeasibleLevel,
    InsufficientPoints,
    NegativeInner,
    NonDivisibleFactor,
    NonPositiveValue,
    ParseError,
    ValidationError,
)
from .config import RunConfig, parse_config
from .experiments import (
    BatchStats,
    ConvergenceReport,
    LevelRecord,
    LevelSpec,
    MomentReport,
    NegativityStats,
    PayoffKind,
    PayoffSpec,
    fit_order,
    moment_check,
    negativity_stats,
    price_payoff,
    simulate_paths_batch,
    strong_error,
)
from .model import (
    AssumptionAReport,
    CevParams,
    TimeGrid,
    analytic_mean,
    inner_value,
    inner_value_with_flag,
    max_stable_step,
    normal_cdf,
    step_negativity_prob,
    validate_assumption_a,
)
from .schemes import (
    PathResult,
    SchemeId,
    StepFlags,
    euler_step,
    semidiscrete_step,
    simulate_path,
)

__all__ = [
    "__version__",
    # model
    "CevParams",
    "TimeGrid",
    "AssumptionAReport",
    "validate_assumption_a",
    "max_stable_step",
    "inner_value",
    "inner_value_with_flag",
    "analytic_mean",
    "step_negativity_prob",
    "normal_cdf",
    # brownian
    "StreamKey",
    "IncrementArray",
    "sample_increments",
    "coarsen",
    # schemes
    "SchemeId",
    "StepFlags",
    "PathResult",
    "semidiscrete_step",
    "euler_step",
    "simulate_path",
    # experiments
    "LevelSpec",
    "LevelRecord",
    "ConvergenceReport",
    "MomentReport",
    "PayoffKind",
    "PayoffSpec",
    "NegativityStats",
    "BatchStats",
    "strong_error",
    "fit_order",
    "moment_check",
    "negativity_stats",
    "price_payoff",
    "simulate_paths_batch",
    # config
    "RunConfig",
    "parse_config",
    # errors
    "CevlabError",
    "ValidationError",
    "ParseError",
    "NegativeInner",
    "NonDivisibleFactor",
    "GridMismatch",
    "InfeasibleLevel",
    "InsufficientPoints",
    "NonPositiveValue",
    "CouplingError",
]
