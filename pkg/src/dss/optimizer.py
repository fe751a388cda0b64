"""The optimization loop: initialize, evaluate, update, select, acquire.

One run: a Latin hypercube design seeds the trial database, then iterations
alternate between ingesting results (with an anomaly check on the score
distribution), re-selecting the best-explaining surrogate on all valid data,
ranking fresh candidates with it, and spending the next batch of evaluation
slots on a mix of top-ranked and random configurations. The loop stops after
a fixed number of engine evaluations.

Scores are minimized. Objectives are callables ``(config, seed) -> score``
or ``(config, seed) -> (score, meta)``; exceptions and non-finite scores
become failed records that consume budget but never feed the surrogates.

Every random stream is derived from the master seed plus a structural key
(iteration, evaluation index), so a run is reproducible bit for bit and
independent of how many evaluation workers execute it.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .acquisition import (
    AllocatedBatch,
    ExplorationMemory,
    RankedCandidates,
    allocate_batch,
    cell_key,
    default_max_attempts,
    generate_candidates,
    rank_candidates,
)
from .rng import spawn_rng, spawn_seed
from .space import ConfigSpace, Configuration, encode_batch, latin_hypercube_init
from .surrogates import SurrogateSpec, fit, select_surrogate

Objective = Callable[[Configuration, int], "float | tuple[float, dict]"]


class RunAborted(RuntimeError):
    """Raised when an entire evaluation batch fails."""


@dataclass
class EvalRecord:
    config: Configuration
    score: float
    iteration: int
    role: str  # init | exploit | explore
    wall_time_ms: float
    failed: bool = False
    engine_meta: dict[str, Any] = field(default_factory=dict)


@dataclass
class TrialDatabase:
    """Append-only store of engine evaluations."""

    space: ConfigSpace
    records: list[EvalRecord] = field(default_factory=list)

    def append(self, record: EvalRecord) -> None:
        self.space.validate(record.config)
        self.records.append(record)

    def valid_records(self) -> list[EvalRecord]:
        return [r for r in self.records if not r.failed]

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, y) over non-failed records, for surrogate fitting."""
        valid = self.valid_records()
        X = encode_batch(self.space, [r.config for r in valid])
        y = np.array([r.score for r in valid])
        return X, y


@dataclass(frozen=True)
class BudgetPolicy:
    max_engine_evals: int

    def __post_init__(self):
        if self.max_engine_evals < 1:
            raise ValueError("budget must be >= 1")


@dataclass(frozen=True)
class AnomalyReport:
    flagged: bool
    duplicate_fraction: float
    message: str


@dataclass(frozen=True)
class OptimizerOptions:
    parallel_slots: int = 4
    exploit_fraction: float = 0.75
    cv_folds: int = 3
    resolution: int = 16
    batch_size: int = 512
    n_batches: int = 10
    max_attempts: int | None = None  # default: 50 * batch_size
    epsilon: float = 1e-9
    dup_threshold: float = 0.8
    surrogate_mode: str = "switching"  # switching | fixed | none
    fixed_spec: SurrogateSpec | None = None

    def __post_init__(self):
        if self.parallel_slots < 1:
            raise ValueError("parallel_slots must be >= 1")
        if not 0.0 <= self.exploit_fraction <= 1.0:
            raise ValueError("exploit_fraction must be in [0, 1]")
        if self.surrogate_mode not in ("switching", "fixed", "none"):
            raise ValueError(f"unknown surrogate_mode {self.surrogate_mode!r}")
        if self.surrogate_mode == "fixed" and self.fixed_spec is None:
            raise ValueError("fixed surrogate_mode needs fixed_spec")
        if not 0.0 < self.dup_threshold <= 1.0:
            raise ValueError("dup_threshold must be in (0, 1]")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")

    @property
    def attempts(self) -> int:
        return self.max_attempts if self.max_attempts is not None else default_max_attempts(self.batch_size)


@dataclass(frozen=True)
class IterationSummary:
    iteration: int
    anomaly_flagged: bool
    duplicate_fraction: float
    selected_pool_index: int | None
    selected_family: str | None
    selected_ratio: float | None
    n_exploit: int
    n_explore: int
    incumbent_best: float


@dataclass
class RunResult:
    best: EvalRecord
    trace: list[IterationSummary]
    db: TrialDatabase
    memory: ExplorationMemory

    def eval_rows(self) -> list[dict[str, Any]]:
        """Per-evaluation trace rows in canonical order."""
        by_iter = {s.iteration: s for s in self.trace}
        rows = []
        incumbent = math.inf
        for i, r in enumerate(self.db.records):
            if not r.failed and r.score < incumbent:
                incumbent = r.score
            s = by_iter.get(r.iteration)
            rows.append({
                "iteration": r.iteration,
                "eval_index": i,
                "score": r.score if not r.failed else math.nan,
                "incumbent_best": incumbent if incumbent < math.inf else math.nan,
                "selected_family": s.selected_family if s and s.selected_family else "",
                "selected_ratio": s.selected_ratio if s and s.selected_ratio is not None else None,
                "batch_role": r.role,
                "wall_time_ms": r.wall_time_ms,
            })
        return rows

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "eval_index", "score", "incumbent_best",
                         "selected_family", "selected_ratio", "batch_role", "wall_time_ms"])
        for row in self.eval_rows():
            writer.writerow([
                row["iteration"], row["eval_index"], repr(row["score"]),
                repr(row["incumbent_best"]), row["selected_family"],
                "" if row["selected_ratio"] is None else repr(row["selected_ratio"]),
                row["batch_role"], repr(row["wall_time_ms"]),
            ])
        return buf.getvalue()

    def to_json(self) -> dict[str, Any]:
        space = self.db.space
        return {
            "best": {
                "config": space.named(self.best.config),
                "score": self.best.score,
                "iteration": self.best.iteration,
            },
            "n_evaluations": len(self.db.records),
            "iterations": [
                {
                    "iteration": s.iteration,
                    "anomaly_flagged": s.anomaly_flagged,
                    "duplicate_fraction": s.duplicate_fraction,
                    "selected_pool_index": s.selected_pool_index,
                    "selected_family": s.selected_family,
                    "selected_ratio": s.selected_ratio,
                    "n_exploit": s.n_exploit,
                    "n_explore": s.n_explore,
                    "incumbent_best": s.incumbent_best,
                }
                for s in self.trace
            ],
            "evaluations": [
                {
                    "eval_index": i,
                    "iteration": r.iteration,
                    "config": space.named(r.config),
                    "score": None if r.failed else r.score,
                    "failed": r.failed,
                    "batch_role": r.role,
                    "wall_time_ms": r.wall_time_ms,
                    "engine_meta": r.engine_meta,
                }
                for i, r in enumerate(self.db.records)
            ],
        }


# ---------------------------------------------------------------------------
# trial-database update and anomaly check


def _largest_epsilon_cluster(scores: np.ndarray, epsilon: float) -> int:
    """Size of the largest set of scores pairwise within epsilon (a window
    of width epsilon over the sorted scores)."""
    if len(scores) == 0:
        return 0
    s = np.sort(scores)
    best = 1
    lo = 0
    for hi in range(len(s)):
        while s[hi] - s[lo] > epsilon:
            lo += 1
        best = max(best, hi - lo + 1)
    return best


def update_trials(db: TrialDatabase, new_records: list[EvalRecord],
                  epsilon: float = 1e-9, dup_threshold: float = 0.8) -> AnomalyReport:
    """Append records and check the score distribution for anomalies.

    Non-finite scores are marked failed (stored, budget-consuming, excluded
    from surrogate data). duplicate_fraction is the size of the largest
    epsilon-cluster of valid scores over the total database size.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if not 0.0 < dup_threshold <= 1.0:
        raise ValueError("dup_threshold must be in (0, 1]")
    for r in new_records:
        if not math.isfinite(r.score):
            r.failed = True
        db.append(r)
    scores = np.array([r.score for r in db.records if not r.failed])
    cluster = _largest_epsilon_cluster(scores, epsilon)
    fraction = cluster / len(db.records) if db.records else 0.0
    flagged = fraction >= dup_threshold
    message = (
        f"{cluster} of {len(db.records)} scores within epsilon={epsilon:g}"
        if flagged else ""
    )
    return AnomalyReport(flagged=flagged, duplicate_fraction=fraction, message=message)


def best(db: TrialDatabase) -> EvalRecord:
    """Record with the minimal score; earliest record wins ties."""
    winner = None
    for r in db.records:
        if r.failed:
            continue
        if winner is None or r.score < winner.score:
            winner = r
    if winner is None:
        raise ValueError("database holds no successful evaluation")
    return winner


# ---------------------------------------------------------------------------
# the loop


def initial_design_size(space: ConfigSpace) -> int:
    return max(2 * len(space), 8)


def _call_objective(objective: Objective, config: Configuration, seed: int
                    ) -> tuple[float, dict, bool]:
    try:
        result = objective(config, seed)
    except Exception as exc:  # failure marker, not a run abort
        return math.nan, {"error": f"{type(exc).__name__}: {exc}"}, True
    if isinstance(result, tuple):
        score, meta = result
    else:
        score, meta = result, {}
    score = float(score)
    return score, dict(meta), not math.isfinite(score)


def _evaluate_batch(objective: Objective, configs, roles, iteration: int,
                    eval_offset: int, master_seed: int, parallel_slots: int
                    ) -> list[EvalRecord]:
    def one(i_config):
        i, config = i_config
        seed = spawn_seed(master_seed, "eval", eval_offset + i)
        start = time.perf_counter()
        score, meta, failed = _call_objective(objective, config, seed)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        return EvalRecord(config=config, score=score, iteration=iteration,
                          role=roles[i], wall_time_ms=elapsed_ms, failed=failed,
                          engine_meta=meta)

    items = list(enumerate(configs))
    if parallel_slots > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=parallel_slots) as pool:
            records = list(pool.map(one, items))
    else:
        records = [one(item) for item in items]
    return records


def run(objective: Objective, space: ConfigSpace,
        pool: list[SurrogateSpec] | None, budget: BudgetPolicy,
        options: OptimizerOptions = OptimizerOptions(),
        master_seed: int = 0) -> RunResult:
    """Execute one fixed-budget optimization run.

    Algorithm per iteration: ingest the previous batch (anomaly check on all
    data); on an anomaly or while fewer than 2 * cv_folds valid records
    exist, explore purely; otherwise select / fit the surrogate on all valid
    data, generate and rank candidates, and allocate the next batch between
    exploitation and exploration. Stops when the budget is spent, or early
    if the exploration memory exhausts the space.
    """
    n_init = initial_design_size(space)
    if budget.max_engine_evals < n_init:
        raise ValueError(
            f"budget {budget.max_engine_evals} is below the initial design size {n_init}"
        )
    if options.surrogate_mode == "switching" and not pool:
        raise ValueError("switching mode needs a non-empty surrogate pool")

    db = TrialDatabase(space=space)
    memory = ExplorationMemory(resolution=options.resolution)
    trace: list[IterationSummary] = []

    init_configs = latin_hypercube_init(space, n_init, spawn_rng(master_seed, "init"))
    pending = _evaluate_batch(objective, init_configs, ["init"] * n_init, 0, 0,
                              master_seed, options.parallel_slots)
    if all(r.failed for r in pending):
        raise RunAborted("every evaluation of the initial design failed")
    for config in init_configs:
        memory.add(cell_key(space, config, options.resolution))
    evals_done = n_init

    incumbent = math.inf
    for r in pending:
        if not r.failed:
            incumbent = min(incumbent, r.score)

    iteration = 0
    while evals_done < budget.max_engine_evals:
        report = update_trials(db, pending, options.epsilon, options.dup_threshold)
        pending = []
        iteration += 1

        valid = db.valid_records()
        exploit_fraction = options.exploit_fraction
        ranking = None
        model = None
        if options.surrogate_mode == "none" or report.flagged:
            exploit_fraction = 0.0
        elif len(valid) < 2 * options.cv_folds:
            exploit_fraction = 0.0
        else:
            X, y = db.matrices()
            select_seed = spawn_seed(master_seed, "select", iteration)
            if options.surrogate_mode == "switching":
                ranking, model = select_surrogate(pool, X, y, options.cv_folds, select_seed)
            else:
                model = fit(options.fixed_spec, X, y, seed=select_seed)

        if model is not None and exploit_fraction > 0.0:
            candidates = generate_candidates(
                space, memory, options.batch_size, options.n_batches,
                options.attempts, spawn_rng(master_seed, "candidates", iteration))
            ranked = (rank_candidates(model, space, candidates, options.batch_size)
                      if candidates else RankedCandidates.empty())
        else:
            ranked = RankedCandidates.empty()

        n_slots = min(options.parallel_slots, budget.max_engine_evals - evals_done)
        batch: AllocatedBatch = allocate_batch(
            ranked, space, memory, n_slots, exploit_fraction,
            spawn_rng(master_seed, "allocate", iteration), options.attempts)
        if len(batch) == 0:
            break  # space exhausted at this resolution

        pending = _evaluate_batch(objective, batch.configs, batch.roles, iteration,
                                  evals_done, master_seed, options.parallel_slots)
        if all(r.failed for r in pending):
            raise RunAborted(f"every evaluation in iteration {iteration} failed")
        evals_done += len(pending)
        for r in pending:
            if not r.failed:
                incumbent = min(incumbent, r.score)

        winner = ranking.winner if ranking is not None else None
        trace.append(IterationSummary(
            iteration=iteration,
            anomaly_flagged=report.flagged,
            duplicate_fraction=report.duplicate_fraction,
            selected_pool_index=(winner.pool_index if winner is not None
                                 else (options.fixed_spec.pool_index
                                       if model is not None and options.surrogate_mode == "fixed"
                                       else None)),
            selected_family=(winner.family if winner is not None
                             else (options.fixed_spec.family
                                   if model is not None and options.surrogate_mode == "fixed"
                                   else None)),
            selected_ratio=winner.ratio if winner is not None else None,
            n_exploit=sum(1 for role in batch.roles if role == "exploit"),
            n_explore=sum(1 for role in batch.roles if role == "explore"),
            incumbent_best=incumbent,
        ))

    update_trials(db, pending, options.epsilon, options.dup_threshold)
    return RunResult(best=best(db), trace=trace, db=db, memory=memory)


def write_json(result: RunResult, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.to_json(), fh, indent=2)
        fh.write("\n")
