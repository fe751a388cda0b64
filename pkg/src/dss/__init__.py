"""Sample-efficient hyperparameter search with dynamic surrogate switching.

The optimizer re-selects its surrogate model from a pool at every iteration
(by cross-validated explained variance), ranks uniformly generated candidate
configurations with the winner, and splits each evaluation batch between
exploitation and memory-guided exploration under a fixed evaluation budget.
"""

from .acquisition import (
    AllocatedBatch,
    ExplorationMemory,
    RankedCandidates,
    allocate_batch,
    cell_key,
    generate_candidates,
    rank_candidates,
)
from .harness import BenchmarkTable, Strategy, run_benchmark
from .optimizer import (
    AnomalyReport,
    BudgetPolicy,
    EvalRecord,
    OptimizerOptions,
    RunResult,
    TrialDatabase,
    best,
    run,
    update_trials,
)
from .space import (
    ConfigSpace,
    Configuration,
    ParamSpec,
    SpaceError,
    decode,
    encode,
    encode_batch,
    latin_hypercube_init,
    parse_space,
    sample_uniform,
)
from .surrogates import (
    FittedSurrogate,
    SurrogateRanking,
    SurrogateSpec,
    cv_residual_variance_ratio,
    default_pool,
    select_surrogate,
)

__version__ = "0.1.0"

__all__ = [
    "AllocatedBatch",
    "AnomalyReport",
    "BenchmarkTable",
    "BudgetPolicy",
    "ConfigSpace",
    "Configuration",
    "EvalRecord",
    "ExplorationMemory",
    "FittedSurrogate",
    "OptimizerOptions",
    "ParamSpec",
    "RankedCandidates",
    "RunResult",
    "SpaceError",
    "Strategy",
    "SurrogateRanking",
    "SurrogateSpec",
    "TrialDatabase",
    "allocate_batch",
    "best",
    "cell_key",
    "cv_residual_variance_ratio",
    "decode",
    "default_pool",
    "encode",
    "encode_batch",
    "generate_candidates",
    "latin_hypercube_init",
    "parse_space",
    "rank_candidates",
    "run",
    "run_benchmark",
    "sample_uniform",
    "select_surrogate",
    "update_trials",
]
