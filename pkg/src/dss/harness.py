"""Benchmark runner: surrogate switching vs fixed-surrogate and random search.

Every (strategy, seed) cell runs the same optimization loop with the same
budget; the master seed fixes the initial design identically across
strategies, so differences are attributable to the acquisition policy alone.
Cells export to a long CSV (one row per evaluation) and aggregate into a
per-strategy summary using lower medians.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .optimizer import BudgetPolicy, Objective, OptimizerOptions, RunAborted, RunResult, run
from .space import ConfigSpace
from .surrogates import SurrogateSpec

STRATEGY_KINDS = ("dss", "fixed_rf", "fixed_gp", "fixed_gbm", "random")


@dataclass(frozen=True)
class Strategy:
    """One acquisition policy under benchmark.

    dss re-selects from the pool every iteration; fixed_* always fits its
    single spec; random explores uniformly with no surrogate.
    """

    kind: str
    spec: SurrogateSpec | None = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}")
        if self.kind.startswith("fixed_") and self.spec is None:
            raise ValueError(f"strategy {self.kind} needs a surrogate spec")

    @staticmethod
    def from_name(name: str) -> "Strategy":
        if name == "fixed_rf":
            spec = SurrogateSpec("random_forest",
                                 {"n_trees": 256, "max_depth": None, "min_leaf": 2})
        elif name == "fixed_gp":
            spec = SurrogateSpec("gaussian_process",
                                 {"rbf_length_scale": 0.3, "signal_variance": 1.0,
                                  "noise_variance": 1e-2})
        elif name == "fixed_gbm":
            spec = SurrogateSpec("gradient_boosting",
                                 {"n_rounds": 300, "learning_rate": 0.1, "max_depth": 3})
        else:
            spec = None
        return Strategy(kind=name, spec=spec)

    def options(self, base: OptimizerOptions) -> OptimizerOptions:
        if self.kind == "dss":
            return OptimizerOptions(**{**base.__dict__, "surrogate_mode": "switching",
                                       "fixed_spec": None})
        if self.kind == "random":
            return OptimizerOptions(**{**base.__dict__, "surrogate_mode": "none",
                                       "fixed_spec": None})
        return OptimizerOptions(**{**base.__dict__, "surrogate_mode": "fixed",
                                   "fixed_spec": self.spec})


@dataclass(frozen=True)
class TraceRow:
    eval_index: int
    score: float
    incumbent_best: float
    selected_family: str
    batch_role: str


@dataclass
class BenchmarkRow:
    strategy: str
    objective: str
    seed: int
    budget: int
    best_score: float
    evals_to_best: int
    trace: tuple[TraceRow, ...]
    wall_time_ms: float = field(default=0.0, compare=False)
    failed: bool = False
    result: RunResult | None = field(default=None, compare=False, repr=False)


@dataclass
class BenchmarkTable:
    rows: list[BenchmarkRow] = field(default_factory=list)

    def row(self, strategy: str, seed: int) -> BenchmarkRow:
        for r in self.rows:
            if r.strategy == strategy and r.seed == seed:
                return r
        raise KeyError(f"no row for ({strategy!r}, {seed})")


def _row_from_result(strategy: str, objective_name: str, seed: int, budget: int,
                     result: RunResult, wall_time_ms: float) -> BenchmarkRow:
    trace = []
    best_score = math.inf
    evals_to_best = 0
    for row in result.eval_rows():
        score = row["score"]
        if not math.isnan(score) and score < best_score:
            best_score = score
            evals_to_best = row["eval_index"] + 1
        trace.append(TraceRow(
            eval_index=row["eval_index"],
            score=score,
            incumbent_best=row["incumbent_best"],
            selected_family=row["selected_family"],
            batch_role=row["batch_role"],
        ))
    return BenchmarkRow(strategy=strategy, objective=objective_name, seed=seed,
                        budget=budget, best_score=best_score,
                        evals_to_best=evals_to_best, trace=tuple(trace),
                        wall_time_ms=wall_time_ms, result=result)


def run_benchmark(strategies: list[Strategy], objective: Objective,
                  objective_name: str, space: ConfigSpace,
                  budget: BudgetPolicy, seeds: list[int],
                  options: OptimizerOptions = OptimizerOptions(),
                  pool: list[SurrogateSpec] | None = None) -> BenchmarkTable:
    """Run every (strategy, seed) cell under an identical budget.

    A cell whose run aborts is recorded as a failed row; the table survives.
    """
    if not strategies or not seeds:
        raise ValueError("need at least one strategy and one seed")
    from .surrogates import default_pool

    pool = pool if pool is not None else default_pool()
    table = BenchmarkTable()
    for strategy in strategies:
        cell_options = strategy.options(options)
        for seed in seeds:
            start = time.perf_counter()
            try:
                result = run(objective, space, pool, budget, cell_options, master_seed=seed)
            except RunAborted:
                table.rows.append(BenchmarkRow(
                    strategy=strategy.kind, objective=objective_name, seed=seed,
                    budget=budget.max_engine_evals, best_score=math.nan,
                    evals_to_best=0, trace=(), failed=True))
                continue
            elapsed_ms = (time.perf_counter() - start) * 1000.0
            table.rows.append(_row_from_result(
                strategy.kind, objective_name, seed, budget.max_engine_evals,
                result, elapsed_ms))
    return table


# ---------------------------------------------------------------------------
# CSV schemas

_TRACE_HEADER = ["strategy", "objective", "seed", "budget", "eval_index",
                 "score", "incumbent_best", "selected_family", "batch_role"]


def table_to_csv(table: BenchmarkTable) -> str:
    """Long-format trace CSV; failed cells are omitted (they have no trace)."""
    if not table.rows:
        raise ValueError("benchmark table is empty")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_TRACE_HEADER)
    for row in table.rows:
        if row.failed:
            continue
        for t in row.trace:
            writer.writerow([row.strategy, row.objective, row.seed, row.budget,
                             t.eval_index, repr(t.score), repr(t.incumbent_best),
                             t.selected_family, t.batch_role])
    return buf.getvalue()


def export_csv(table: BenchmarkTable, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(table_to_csv(table))


def read_csv(path_or_text: str, is_text: bool = False) -> BenchmarkTable:
    """Rebuild a table from the long CSV (wall times are not serialized)."""
    if is_text:
        text = path_or_text
    else:
        with open(path_or_text, "r", encoding="utf-8") as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != _TRACE_HEADER:
        raise ValueError("unexpected benchmark CSV header")
    cells: dict[tuple[str, str, int, int], list[TraceRow]] = {}
    for row in reader:
        if not row:
            continue
        strategy, objective, seed, budget = row[0], row[1], int(row[2]), int(row[3])
        cells.setdefault((strategy, objective, seed, budget), []).append(TraceRow(
            eval_index=int(row[4]), score=float(row[5]),
            incumbent_best=float(row[6]), selected_family=row[7], batch_role=row[8]))
    table = BenchmarkTable()
    for (strategy, objective, seed, budget), trace in cells.items():
        trace.sort(key=lambda t: t.eval_index)
        best_score = math.inf
        evals_to_best = 0
        for t in trace:
            if not math.isnan(t.score) and t.score < best_score:
                best_score = t.score
                evals_to_best = t.eval_index + 1
        table.rows.append(BenchmarkRow(
            strategy=strategy, objective=objective, seed=seed, budget=budget,
            best_score=best_score, evals_to_best=evals_to_best, trace=tuple(trace)))
    return table


def lower_median(values: list[float]) -> float:
    """Median that returns the lower of the two middle elements for even
    counts (deterministic, always an observed value)."""
    if not values:
        raise ValueError("no values")
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def summarize(table: BenchmarkTable) -> list[dict]:
    """Per (strategy, objective) medians over seeds; failed rows excluded."""
    groups: dict[tuple[str, str], list[BenchmarkRow]] = {}
    for row in table.rows:
        if row.failed:
            continue
        groups.setdefault((row.strategy, row.objective), []).append(row)
    out = []
    for (strategy, objective), rows in sorted(groups.items()):
        bests = [r.best_score for r in rows]
        q1, q3 = np.percentile(bests, [25, 75], method="lower")
        out.append({
            "strategy": strategy,
            "objective": objective,
            "median_best": lower_median(bests),
            "iqr_best": float(q3 - q1),
            "median_evals_to_best": lower_median([float(r.evals_to_best) for r in rows]),
        })
    return out


def summary_to_csv(table: BenchmarkTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["strategy", "objective", "median_best", "iqr_best",
                     "median_evals_to_best"])
    for row in summarize(table):
        writer.writerow([row["strategy"], row["objective"], repr(row["median_best"]),
                         repr(row["iqr_best"]), repr(row["median_evals_to_best"])])
    return buf.getvalue()
