"""Command-line surface: optimize, benchmark, landscape, gen-data, report.

Exit codes: 0 success, 1 usage error, 2 runtime failure. Output files are
written atomically (temp file in the target directory, then rename). The
DSS_LOG environment variable (error|info|debug) controls stderr logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile

from . import ffm, harness, objectives, optimizer
from .space import ConfigSpace, SpaceError, parse_space
from .surrogates import default_pool, load_pool_file, parse_pool

log = logging.getLogger("dss")

DEFAULT_BUDGET_SYNTHETIC = 40
DEFAULT_BUDGET_FFM = 20


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".dss-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _configure_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("DSS_LOG", "error"), logging.ERROR)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dss", description="surrogate-switching hyperparameter search")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--parallel-slots", type=int, default=4,
                       help="evaluation slots per iteration (default 4)")
        p.add_argument("--exploit-fraction", type=float, default=0.75,
                       help="share of each batch spent on top-ranked candidates (default 0.75)")
        p.add_argument("--cv-folds", type=int, default=3,
                       help="folds for surrogate scoring (default 3)")
        p.add_argument("--resolution", type=int, default=16,
                       help="exploration-memory cells per dimension (default 16)")
        p.add_argument("--pool", help="JSON file with a surrogate pool")
        p.add_argument("--space", help="JSON search-space file (overrides the canonical space)")
        p.add_argument("--objective", default="branin",
                       help="branin | styblinski | ffm | grid:PATH (default branin)")
        p.add_argument("--budget", type=int,
                       help=f"engine evaluations (default {DEFAULT_BUDGET_SYNTHETIC} synthetic,"
                            f" {DEFAULT_BUDGET_FFM} ffm)")
        p.add_argument("--data-seed", type=int, default=0,
                       help="generator seed for the synthetic ffm data (default 0)")
        p.add_argument("--train-file", help="libffm training data for --objective ffm")
        p.add_argument("--valid-file", help="libffm validation data for --objective ffm")

    p_opt = sub.add_parser("optimize", help="run one optimization")
    common(p_opt)
    p_opt.add_argument("--out", required=True, help="per-evaluation trace CSV")
    p_opt.add_argument("--out-json", help="full run result as JSON")
    p_opt.add_argument("--dump-memory", help="write visited cells as CSV")

    p_bench = sub.add_parser("benchmark", help="compare strategies over seeds")
    common(p_bench)
    p_bench.add_argument("--strategy", default="dss,random",
                         help="comma list of dss,fixed_rf,fixed_gp,fixed_gbm,random")
    p_bench.add_argument("--seeds", default="0,1,2",
                         help="comma list of master seeds (default 0,1,2)")
    p_bench.add_argument("--out", required=True, help="long trace CSV")
    p_bench.add_argument("--summary-out", help="also write the per-strategy summary CSV")

    p_land = sub.add_parser("landscape", help="export an objective surface as CSV")
    p_land.add_argument("--objective", default="branin")
    p_land.add_argument("--resolution", type=int, default=101)
    p_land.add_argument("--out", required=True)

    p_gen = sub.add_parser("gen-data", help="generate synthetic CTR data (libffm format)")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--train", type=int, default=50_000)
    p_gen.add_argument("--valid", type=int, default=10_000)
    p_gen.add_argument("--fields", type=int, default=5)
    p_gen.add_argument("--features-per-field", type=int, default=20)
    p_gen.add_argument("--noise", type=float, default=0.5)
    p_gen.add_argument("--out-dir", required=True)

    p_rep = sub.add_parser("report", help="summarize a benchmark trace CSV")
    p_rep.add_argument("trace", help="long trace CSV from 'benchmark'")
    p_rep.add_argument("--out", required=True, help="summary CSV")

    return parser


def _load_space_file(path: str) -> ConfigSpace:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_space(fh.read())


def _resolve_problem(args):
    """(objective, name, space, default_budget) for the optimize/benchmark commands."""
    name = args.objective
    if name == "ffm":
        if args.train_file and args.valid_file:
            train_data = ffm.parse_dataset(open(args.train_file, encoding="utf-8").read())
            valid_data = ffm.parse_dataset(open(args.valid_file, encoding="utf-8").read())
        elif args.train_file or args.valid_file:
            raise UsageError("--train-file and --valid-file must be given together")
        else:
            log.info("generating synthetic ffm data (data seed %d)", args.data_seed)
            train_data, valid_data, _ = ffm.generate_ctr_data(args.data_seed, 50_000, 10_000)
        space = _load_space_file(args.space) if args.space else ffm.ffm_search_space()
        missing = [n for n in ffm.FFM_PARAM_NAMES
                   if all(p.name != n for p in space.params)]
        if missing:
            raise UsageError(f"ffm space must declare parameters {list(ffm.FFM_PARAM_NAMES)};"
                             f" missing {missing}")
        objective = ffm.ffm_objective(train_data, valid_data, space)
        return objective, "ffm", space, DEFAULT_BUDGET_FFM
    obj = objectives.by_name(name)
    space = _load_space_file(args.space) if args.space else obj.space
    if args.space:
        _check_space_compatible(space, obj.space)
    return obj, obj.name, space, DEFAULT_BUDGET_SYNTHETIC


def _check_space_compatible(space: ConfigSpace, canonical: ConfigSpace) -> None:
    if len(space) != len(canonical):
        raise UsageError("space file must declare the same parameters as the objective")
    for given, expected in zip(space.params, canonical.params):
        if given.kind != expected.kind:
            raise UsageError(f"parameter {given.name!r} must have kind {expected.kind}")
        if given.kind != "categorical":
            if given.low < expected.low or given.high > expected.high:
                raise UsageError(
                    f"parameter {given.name!r} bounds exceed the objective domain"
                )


def _options(args, mode="switching", fixed_spec=None) -> optimizer.OptimizerOptions:
    return optimizer.OptimizerOptions(
        parallel_slots=args.parallel_slots,
        exploit_fraction=args.exploit_fraction,
        cv_folds=args.cv_folds,
        resolution=args.resolution,
        surrogate_mode=mode,
        fixed_spec=fixed_spec,
    )


def _load_pool(args):
    """--pool wins; otherwise a 'pool' section in the space file; else default."""
    if args.pool:
        return load_pool_file(args.pool)
    if getattr(args, "space", None):
        with open(args.space, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if isinstance(doc, dict) and "pool" in doc:
            return parse_pool(doc["pool"])
    return default_pool()


def cmd_optimize(args) -> int:
    objective, name, space, default_budget = _resolve_problem(args)
    budget = optimizer.BudgetPolicy(args.budget or default_budget)
    result = optimizer.run(objective, space, _load_pool(args), budget,
                           _options(args), master_seed=args.seed)
    atomic_write(args.out, result.trace_csv())
    if args.out_json:
        atomic_write(args.out_json, json.dumps(result.to_json(), indent=2) + "\n")
    if args.dump_memory:
        atomic_write(args.dump_memory, result.memory.to_csv())
    named = result.db.space.named(result.best.config)
    print(json.dumps({"objective": name, "best_score": result.best.score,
                      "best_config": named, "evaluations": len(result.db.records)}))
    return 0


def cmd_benchmark(args) -> int:
    objective, name, space, default_budget = _resolve_problem(args)
    budget = optimizer.BudgetPolicy(args.budget or default_budget)
    strategies = [harness.Strategy.from_name(s.strip())
                  for s in args.strategy.split(",") if s.strip()]
    if not strategies:
        raise UsageError("--strategy must name at least one strategy")
    try:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError:
        raise UsageError("--seeds must be a comma list of integers") from None
    if not seeds:
        raise UsageError("--seeds must name at least one seed")
    table = harness.run_benchmark(strategies, objective, name, space, budget,
                                  seeds, _options(args), pool=_load_pool(args))
    atomic_write(args.out, harness.table_to_csv(table))
    if args.summary_out:
        atomic_write(args.summary_out, harness.summary_to_csv(table))
    for line in harness.summarize(table):
        print(json.dumps(line))
    return 0


def cmd_landscape(args) -> int:
    obj = objectives.by_name(args.objective)
    atomic_write(args.out, objectives.landscape_csv(obj, args.resolution))
    return 0


def cmd_gen_data(args) -> int:
    train_data, valid_data, _ = ffm.generate_ctr_data(
        args.seed, args.train, args.valid, args.fields,
        args.features_per_field, args.noise)
    os.makedirs(args.out_dir, exist_ok=True)
    atomic_write(os.path.join(args.out_dir, "train.ffm"), train_data.to_text())
    atomic_write(os.path.join(args.out_dir, "valid.ffm"), valid_data.to_text())
    log.info("wrote %d train and %d valid instances", len(train_data), len(valid_data))
    return 0


def cmd_report(args) -> int:
    table = harness.read_csv(args.trace)
    atomic_write(args.out, harness.summary_to_csv(table))
    return 0


_COMMANDS = {
    "optimize": cmd_optimize,
    "benchmark": cmd_benchmark,
    "landscape": cmd_landscape,
    "gen-data": cmd_gen_data,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SpaceError, ValueError, OSError, optimizer.RunAborted) as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
