"""The surrogate pool: parametrized model specs and the fit dispatch.

A :class:`SurrogateSpec` names a model family plus its settings; fitting one
yields a :class:`FittedSurrogate` whose predictions are deterministic given
(spec, data, seed). Families are registered in a dispatch table so tests and
users can plug additional regressors into the selection machinery.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .ensembles import GradientBoosting, RandomForest
from .errors import FitError
from .gp import GaussianProcess

FAMILIES = ("random_forest", "gaussian_process", "gradient_boosting")


@dataclass(frozen=True)
class SurrogateSpec:
    """One pool member: a model family and its hyperparameter assignment."""

    family: str
    hyper: Mapping[str, Any] = field(default_factory=dict)
    pool_index: int = 0

    def __post_init__(self):
        if self.family not in _BUILDERS:
            raise ValueError(f"unknown surrogate family {self.family!r}")
        validator = _VALIDATORS.get(self.family)
        if validator is not None:
            validator(dict(self.hyper))

    def summary(self) -> str:
        """Compact ``key=value`` rendering of the hyperparameters."""
        return " ".join(f"{k}={self.hyper[k]}" for k in sorted(self.hyper))


@dataclass(frozen=True)
class FittedSurrogate:
    """A trained pool member; ``predict`` is pure and thread-safe."""

    spec: SurrogateSpec
    model: Any
    train_size: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.model.predict(np.asarray(X, dtype=np.float64))


# ---------------------------------------------------------------------------
# family registry


def _positive_int(hyper, key, default=None):
    v = hyper.get(key, default)
    if v is None:
        raise ValueError(f"missing hyperparameter {key!r}")
    if int(v) != v or v < 1:
        raise ValueError(f"{key} must be a positive integer, got {v!r}")
    return int(v)


def _validate_rf(hyper):
    _positive_int(hyper, "n_trees")
    if hyper.get("max_depth") is not None:
        _positive_int(hyper, "max_depth")
    _positive_int(hyper, "min_leaf", 2)


def _validate_gp(hyper):
    if not hyper.get("rbf_length_scale", 0) > 0:
        raise ValueError("rbf_length_scale must be > 0")
    if not hyper.get("signal_variance", 1.0) > 0:
        raise ValueError("signal_variance must be > 0")
    if not hyper.get("noise_variance", 0.0) >= 0:
        raise ValueError("noise_variance must be >= 0")


def _validate_gbm(hyper):
    _positive_int(hyper, "n_rounds")
    lr = hyper.get("learning_rate")
    if lr is None or not 0.0 < lr <= 1.0:
        raise ValueError(f"learning_rate must be in (0, 1], got {lr!r}")
    _positive_int(hyper, "max_depth", 3)
    _positive_int(hyper, "min_leaf", 2)


def _build_rf(hyper):
    return RandomForest(
        n_trees=int(hyper["n_trees"]),
        max_depth=None if hyper.get("max_depth") is None else int(hyper["max_depth"]),
        min_leaf=int(hyper.get("min_leaf", 2)),
    )


def _build_gp(hyper):
    return GaussianProcess(
        length_scale=float(hyper["rbf_length_scale"]),
        signal_variance=float(hyper.get("signal_variance", 1.0)),
        noise_variance=float(hyper.get("noise_variance", 1e-6)),
    )


def _build_gbm(hyper):
    return GradientBoosting(
        n_rounds=int(hyper["n_rounds"]),
        learning_rate=float(hyper["learning_rate"]),
        max_depth=int(hyper.get("max_depth", 3)),
        min_leaf=int(hyper.get("min_leaf", 2)),
    )


_BUILDERS: dict[str, Callable[[Mapping[str, Any]], Any]] = {
    "random_forest": _build_rf,
    "gaussian_process": _build_gp,
    "gradient_boosting": _build_gbm,
}
_VALIDATORS: dict[str, Callable[[dict], None]] = {
    "random_forest": _validate_rf,
    "gaussian_process": _validate_gp,
    "gradient_boosting": _validate_gbm,
}


def register_family(name: str, builder: Callable[[Mapping[str, Any]], Any],
                    validator: Callable[[dict], None] | None = None) -> None:
    """Add a custom surrogate family (builder returns an object with
    fit(X, y, rng) and predict(X))."""
    _BUILDERS[name] = builder
    if validator is not None:
        _VALIDATORS[name] = validator


def unregister_family(name: str) -> None:
    if name in FAMILIES:
        raise ValueError(f"cannot unregister built-in family {name!r}")
    _BUILDERS.pop(name, None)
    _VALIDATORS.pop(name, None)


# ---------------------------------------------------------------------------
# fitting


def fit(spec: SurrogateSpec, X: np.ndarray, y: np.ndarray, seed: int = 0) -> FittedSurrogate:
    """Fit one pool member. Raises FitError when the model cannot be trained."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d array of feature vectors")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"got {X.shape[0]} feature vectors for {y.shape[0]} targets")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 observations to fit a surrogate")
    model = _BUILDERS[spec.family](spec.hyper)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1)))
    try:
        model.fit(X, y, rng)
    except FitError:
        raise
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        raise FitError(f"{spec.family} fit failed: {exc}") from exc
    return FittedSurrogate(spec=spec, model=model, train_size=X.shape[0])


# ---------------------------------------------------------------------------
# default pool and pool parsing


def default_pool() -> list[SurrogateSpec]:
    """Desk-scale stand-in for a large production pool: forests, GPs, and
    boosting machines over a small hyperparameter grid."""
    specs: list[SurrogateSpec] = []

    def add(family, **hyper):
        specs.append(SurrogateSpec(family=family, hyper=hyper, pool_index=len(specs)))

    for n_trees in (64, 256):
        for max_depth in (None, 8):
            add("random_forest", n_trees=n_trees, max_depth=max_depth, min_leaf=2)
    for length_scale in (0.1, 0.3, 1.0):
        for noise_variance in (1e-6, 1e-2):
            add("gaussian_process", rbf_length_scale=length_scale,
                signal_variance=1.0, noise_variance=noise_variance)
    for n_rounds in (100, 300):
        for learning_rate in (0.05, 0.1):
            add("gradient_boosting", n_rounds=n_rounds, learning_rate=learning_rate,
                max_depth=3)
    return specs


def parse_pool(obj: Any) -> list[SurrogateSpec]:
    """Build a pool from the JSON ``pool`` section: a list of objects with a
    ``family`` key and that family's hyperparameters."""
    if not isinstance(obj, list) or not obj:
        raise ValueError("pool must be a non-empty list of surrogate specs")
    specs = []
    for i, entry in enumerate(obj):
        if not isinstance(entry, dict) or "family" not in entry:
            raise ValueError(f"pool[{i}]: expected an object with a 'family' key")
        hyper = {k: v for k, v in entry.items() if k != "family"}
        try:
            specs.append(SurrogateSpec(family=entry["family"], hyper=hyper, pool_index=i))
        except ValueError as exc:
            raise ValueError(f"pool[{i}]: {exc}") from None
    return specs


def load_pool_file(path: str) -> list[SurrogateSpec]:
    """Read a pool from a JSON file holding either a bare list or an object
    with a ``pool`` key (e.g. a space file with a sibling pool section)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        doc = doc.get("pool")
    return parse_pool(doc)
