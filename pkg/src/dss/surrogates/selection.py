"""Per-iteration surrogate selection by residual variance ratio.

Each pool member is scored with Var(y - s(D)) / Var(y), where s(D) are
cross-validated out-of-fold predictions and Var is the population variance.
A ratio of 0 means the surrogate explains all target variance, 1 means none;
the pool is ranked ascending and the winner is refitted on all data.

Held-out (rather than in-sample) predictions are used so that flexible
memorizers do not win by construction.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from ..rng import spawn_rng, spawn_seed
from .errors import FitError, SelectionError
from .pool import FittedSurrogate, SurrogateSpec, fit

DEGENERATE_VARIANCE = 1e-12


def population_variance(y: np.ndarray) -> float:
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean((y - np.mean(y)) ** 2))


def fold_indices(n: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffle 0..n-1 and split into k folds (first folds absorb remainders)."""
    perm = rng.permutation(n)
    return np.array_split(perm, k)


def spec_cv_seed(seed: int, pool_index: int) -> int:
    """Seed of the CV stream a pool member receives inside select_surrogate."""
    return spawn_seed(seed, "cv", pool_index)


def cv_residual_variance_ratio(
    spec: SurrogateSpec,
    X: np.ndarray,
    y: np.ndarray,
    k: int = 3,
    seed: int = 0,
) -> float:
    """Var(y - s(D)) / Var(y) with s(D) assembled from k-fold out-of-fold
    predictions. Returns 1.0 when the target variance is degenerate."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n < 2 * k:
        raise ValueError(f"need at least {2 * k} observations for {k}-fold CV, got {n}")
    var_y = population_variance(y)
    if var_y < DEGENERATE_VARIANCE:
        return 1.0
    folds = fold_indices(n, k, spawn_rng(seed, "folds"))
    preds = np.empty(n)
    for j, fold in enumerate(folds):
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        model = fit(spec, X[mask], y[mask], seed=spawn_seed(seed, "fold", j))
        preds[fold] = model.predict(X[fold])
    return population_variance(y - preds) / var_y


@dataclass(frozen=True)
class RankEntry:
    pool_index: int
    family: str
    ratio: float  # +inf sentinel when the fit failed
    failed: bool


@dataclass(frozen=True)
class SurrogateRanking:
    """Pool members sorted ascending by ratio, ties broken by pool index."""

    entries: tuple[RankEntry, ...]

    @property
    def winner(self) -> RankEntry:
        return self.entries[0]

    def to_csv(self, pool: list[SurrogateSpec]) -> str:
        by_index = {s.pool_index: s for s in pool}
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["pool_index", "family", "hyper", "ratio", "selected"])
        for rank, e in enumerate(self.entries):
            ratio = "failed" if e.failed else repr(e.ratio)
            writer.writerow(
                [e.pool_index, e.family, by_index[e.pool_index].summary(), ratio,
                 int(rank == 0 and not e.failed)]
            )
        return buf.getvalue()


def select_surrogate(
    pool: list[SurrogateSpec],
    X: np.ndarray,
    y: np.ndarray,
    k: int = 3,
    seed: int = 0,
) -> tuple[SurrogateRanking, FittedSurrogate]:
    """Rank the pool by CV residual variance ratio and refit the winner on
    all data.

    Every member gets an independent stream derived from (seed, pool_index),
    so the ranking can be recomputed member by member. Members whose fit
    fails get a +inf sentinel and are never selected unless the whole pool
    fails, which raises SelectionError.
    """
    if not pool:
        raise ValueError("surrogate pool is empty")
    entries = []
    for spec in pool:
        try:
            ratio = cv_residual_variance_ratio(spec, X, y, k, seed=spec_cv_seed(seed, spec.pool_index))
            failed = False
        except FitError:
            ratio = math.inf
            failed = True
        entries.append(RankEntry(spec.pool_index, spec.family, ratio, failed))
    entries.sort(key=lambda e: (e.ratio, e.pool_index))
    ranking = SurrogateRanking(entries=tuple(entries))
    if ranking.winner.failed:
        raise SelectionError("every surrogate in the pool failed to fit")
    winner_spec = next(s for s in pool if s.pool_index == ranking.winner.pool_index)
    model = fit(winner_spec, X, y, seed=spawn_seed(seed, "refit", winner_spec.pool_index))
    return ranking, model
