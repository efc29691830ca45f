"""
Command-line entry point.

``run`` executes one experiment, ``bench`` compares several methods on the
same data and seeds, and ``simulate`` dumps generator output as CSV. A
``--sim`` choice starts from the scenario preset of the same name; any flag
given explicitly overrides the preset.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io as csv_io
from .core import Method, RngSeed
from .errors import SpciError
from .evaluation import (
    DATA_STREAM,
    ExperimentConfig,
    bench_table,
    run_bench,
    run_experiment,
    scenario_preset,
    simulation_columns,
    summary_dict,
    write_artifacts,
    write_bench,
)
from .simulation import SimulationKind

__all__ = ["main", "build_parser", "config_from_args"]

log = logging.getLogger("spci")

METHODS = [m.value for m in Method]
SIMS = [k.value for k in SimulationKind]


def _seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _columns(text: str) -> tuple[str, ...]:
    return tuple(c.strip() for c in text.split(",") if c.strip())


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", metavar="CSV", help="headed CSV, rows in time order")
    src.add_argument("--sim", choices=SIMS, help="simulate data with this generator (uses its preset)")
    p.add_argument("--target-col", default=None, help="target column name or 0-based index (default: y)")
    p.add_argument("--exog-cols", type=_columns, default=None, help="comma-separated exogenous columns")
    p.add_argument("--lags", type=int, default=None, help="lagged targets per row (default 20; 0 with --exog-cols)")
    p.add_argument("--length", type=int, default=None, help="simulated series length")
    p.add_argument("--alpha", type=float, default=None, help="miscoverage level (default 0.1)")
    p.add_argument("--train-frac", type=float, default=None, help="training fraction (default 0.8)")
    p.add_argument("--train-size", type=int, default=None, help="training rows (overrides --train-frac)")
    p.add_argument("--bootstrap", type=int, default=None, metavar="B", help="bootstrap models (default 25)")
    p.add_argument("--aggregator", choices=["mean", "median"], default=None)
    p.add_argument("--point-model", choices=["forest", "ls", "ewls"], default=None)
    p.add_argument("--point-trees", type=int, default=None, help="trees per bootstrap forest (default 10)")
    p.add_argument("--point-depth", type=int, default=None, help="depth of point-forest trees (default unbounded)")
    p.add_argument("--decay", type=float, default=None, help="exponential weight decay (default 0.99)")
    p.add_argument("--trees", type=int, default=None, help="quantile-forest trees (default 50)")
    p.add_argument("--min-leaf", type=int, default=None, help="quantile-forest minimum leaf size (default 5)")
    p.add_argument("--tree-jobs", type=int, default=None, help="threads for quantile-forest fitting")
    p.add_argument("--window", type=int, default=None, metavar="W", help="lagged residuals per row (default 20)")
    p.add_argument("--horizon", type=int, default=None, metavar="S", help="block length for multistep-spci")
    p.add_argument("--beta-grid", type=int, default=None, help="beta grid points (default 21)")
    p.add_argument("--refit-stride", type=int, default=None, help="refit quantile model every k steps (default 1)")
    p.add_argument("--residual-capacity", type=int, default=None, help="residual window length")
    p.add_argument("--normalize", action="store_true", default=None, help="scale-normalize SPCI residuals")
    p.add_argument("--rolling-refit", type=int, default=None, metavar="T0", help="refit point model on the last T0 rows")
    p.add_argument("--gamma", type=float, default=None, help="AdaptiveCI step size (default 0.005)")
    p.add_argument("--rolling-window", type=int, default=None, help="rolling metric window (default 100 or 50)")
    p.add_argument("--seeds", type=_seeds, default=None, help='comma-separated seeds (default "0,1,2")')
    p.add_argument("--jobs", type=int, default=None, help="trials run in parallel processes")
    p.add_argument("--out", default="spci_results", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spci", description="Sequential conformal prediction intervals for time series.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--method", choices=METHODS, default="spci")
    _add_data_flags(run)

    bench = sub.add_parser("bench", help="compare methods on the same data and seeds")
    bench.add_argument("--methods", type=_columns, default=("spci", "enbpi"), help="comma-separated methods")
    bench.add_argument("--method", dest="methods", type=_columns, help=argparse.SUPPRESS)
    _add_data_flags(bench)

    sim = sub.add_parser("simulate", help="write generator output as CSV")
    sim.add_argument("--sim", choices=SIMS, required=True)
    sim.add_argument("--length", type=int, default=None)
    sim.add_argument("--lags", type=int, default=20, help="nstat autoregressive order")
    sim.add_argument("--seeds", type=_seeds, default=(0,))
    sim.add_argument("--out", default="spci_data", help="output directory")
    return parser


_FLAG_TO_FIELD = {
    "alpha": "alpha",
    "target_col": "target_col",
    "exog_cols": "exog_cols",
    "lags": "lags",
    "length": "sim_length",
    "train_size": "train_size",
    "bootstrap": "B",
    "aggregator": "aggregator",
    "point_model": "point_model",
    "point_trees": "point_trees",
    "point_depth": "point_depth",
    "decay": "decay",
    "window": "w",
    "horizon": "horizon",
    "beta_grid": "beta_grid",
    "refit_stride": "refit_stride",
    "residual_capacity": "residual_capacity",
    "normalize": "normalize",
    "rolling_refit": "rolling_refit",
    "gamma": "gamma",
    "rolling_window": "rolling_window",
    "seeds": "seeds",
    "jobs": "n_jobs",
}


def config_from_args(args: argparse.Namespace, method: str = "spci") -> ExperimentConfig:
    """Preset (for ``--sim``) or plain defaults (for ``--data``), then explicit flags."""
    if args.sim is not None:
        base = scenario_preset(args.sim, method=method)
    else:
        base = ExperimentConfig(method=method, data_path=args.data, seeds=(0, 1, 2))
    changes = {}
    for flag, name in _FLAG_TO_FIELD.items():
        v = getattr(args, flag, None)
        if v is not None:
            changes[name] = v
    if args.train_frac is not None:
        changes["train_frac"] = args.train_frac
        changes.setdefault("train_size", None)
    forest = {}
    if args.trees is not None:
        forest["n_trees"] = args.trees
    if args.min_leaf is not None:
        forest["min_leaf_size"] = args.min_leaf
    if args.tree_jobs is not None:
        forest["n_jobs"] = args.tree_jobs
    if forest:
        changes["forest"] = dataclasses.replace(base.forest, **forest)
    return base.replace(**changes)


def _cmd_run(args) -> int:
    config = config_from_args(args, args.method)
    result = run_experiment(config)
    paths = write_artifacts(result, args.out)
    summary = summary_dict(result)
    print(json.dumps({"method": summary["method"], **summary["display"]}))
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return 0


def _cmd_bench(args) -> int:
    methods = [Method(m) for m in args.methods]
    # validate against the multistep method so --horizon is accepted
    lead = Method.MULTISTEP_SPCI if Method.MULTISTEP_SPCI in methods else methods[0]
    config = config_from_args(args, lead.value)
    results = run_bench(config, methods)
    write_bench(results, args.out)
    print(bench_table(results))
    return 0


def _cmd_simulate(args) -> int:
    out = Path(args.out)
    for seed in args.seeds:
        cols = simulation_columns(args.sim, args.length, RngSeed(seed, DATA_STREAM), lags=args.lags)
        path = csv_io.write_columns(out / f"{args.sim}_seed{seed}.csv", cols)
        print(path)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": _cmd_run, "bench": _cmd_bench, "simulate": _cmd_simulate}
    try:
        return handlers[args.command](args)
    except (SpciError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
