"""Adaptive subspace search for l0-criterion variable selection in linear
regression: exact best-subset sub-solvers, the adaptive stochastic search,
synthetic convergence oracles, a data simulator, and an experiment harness.
"""

__version__ = "1.0.0"

from .criteria import AIC, BIC, CUSTOM, EBIC, CriterionSpec, CriterionValue
from .data import DataError, Dataset, FitResult, fit_subset, load_dataset, predict
from .engine import AdaSubConfig, AdaSubResult, run, top_k_model
from .evaluation import (
    ExperimentPlan,
    Metrics,
    forward_stepwise,
    parse_plan,
    run_experiment,
    score_selection,
    sensitivity_sweep,
)
from .oracles import (
    FINITE_SAMPLE_PF,
    MINIMAL_OIP,
    OracleSpec,
    SpeedResult,
    expected_best_time_infinite_k,
    expected_first_consideration,
    expected_threshold_time,
    oracle_select,
    run_oracle,
    run_oracle_many,
)
from .simulate import CorrelationSpec, SimConfig, SimulatedData, build_sigma, simulate
from .solver import (
    BRANCH_AND_BOUND,
    EXHAUSTIVE,
    SolverBudgetError,
    SolverConfig,
    SubProblemSolution,
    full_search,
    solve,
)

__all__ = [
    "AIC", "BIC", "CUSTOM", "EBIC", "CriterionSpec", "CriterionValue",
    "DataError", "Dataset", "FitResult", "fit_subset", "load_dataset", "predict",
    "AdaSubConfig", "AdaSubResult", "run", "top_k_model",
    "ExperimentPlan", "Metrics", "forward_stepwise", "parse_plan",
    "run_experiment", "score_selection", "sensitivity_sweep",
    "FINITE_SAMPLE_PF", "MINIMAL_OIP", "OracleSpec", "SpeedResult",
    "expected_best_time_infinite_k", "expected_first_consideration",
    "expected_threshold_time", "oracle_select", "run_oracle", "run_oracle_many",
    "CorrelationSpec", "SimConfig", "SimulatedData", "build_sigma", "simulate",
    "BRANCH_AND_BOUND", "EXHAUSTIVE", "SolverBudgetError", "SolverConfig",
    "SubProblemSolution", "full_search", "solve",
    "__version__",
]
