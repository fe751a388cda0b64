"""Surrogate regressors and the explained-variance selection rule."""

from .cart import RegressionTree
from .ensembles import GradientBoosting, RandomForest
from .errors import FitError, SelectionError, SurrogateError
from .gp import GaussianProcess
from .pool import (
    FAMILIES,
    FittedSurrogate,
    SurrogateSpec,
    default_pool,
    fit,
    load_pool_file,
    parse_pool,
    register_family,
    unregister_family,
)
from .selection import (
    RankEntry,
    SurrogateRanking,
    cv_residual_variance_ratio,
    population_variance,
    select_surrogate,
    spec_cv_seed,
)

__all__ = [
    "FAMILIES",
    "FitError",
    "FittedSurrogate",
    "GaussianProcess",
    "GradientBoosting",
    "RandomForest",
    "RankEntry",
    "RegressionTree",
    "SelectionError",
    "SurrogateError",
    "SurrogateRanking",
    "SurrogateSpec",
    "cv_residual_variance_ratio",
    "default_pool",
    "fit",
    "load_pool_file",
    "parse_pool",
    "population_variance",
    "register_family",
    "select_surrogate",
    "spec_cv_seed",
    "unregister_family",
]
