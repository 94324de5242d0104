"""Command-line harness.

Verbs: ``list-problems``, ``diagnose``, ``run``, ``sweep``, ``prox-check``.
Exit codes: 0 success, 1 usage or configuration error, 2 diagnostics
failure, 3 schedule hypothesis violation, 4 inner-solver convergence
failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import diagnostics, envelope, harness, problems
from .config import OUT_DIR_ENV, ExperimentConfig
from .errors import (ConfigurationError, ConvergenceFailureError,
                     DiagnosticsError, DomainError, HiddenConvexError,
                     ScheduleError)
from .rng import RandomSource

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIAGNOSTICS = 2
EXIT_SCHEDULE = 3
EXIT_INNER_SOLVER = 4


def _parse_problem_params(name: str, tokens: list[str]) -> dict:
    entry = problems.CATALOG.get(name)
    if entry is None:
        raise ConfigurationError(f"unknown problem {name!r}; known: {sorted(problems.CATALOG)}")
    params = {}
    for tok in tokens:
        if "=" not in tok:
            raise ConfigurationError(f"expected key=value, got {tok!r}")
        key, value = tok.split("=", 1)
        kind = entry.schema.get(key)
        if kind is None:
            raise ConfigurationError(
                f"unknown parameter {key!r} for {name!r}; known: {sorted(entry.schema)}")
        if kind is list:
            params[key] = [float(v) for v in value.split(",")]
        elif kind is bool:
            params[key] = value.lower() in ("true", "1", "yes", "on")
        else:
            params[key] = kind(value)
    return params


def _cmd_list_problems(args) -> int:
    for name in sorted(problems.CATALOG):
        entry = problems.CATALOG[name]
        print(f"{name}: {entry.doc}")
        print(f"  parameters: {sorted(entry.schema)}")
        print(f"  defaults:   {entry.defaults}")
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    params = _parse_problem_params(args.problem, args.params)
    problem = problems.build(args.problem, **params)
    report = diagnostics.run_all(problem, RandomSource(args.seed))
    for e in report.entries:
        status = "pass" if e.passed else "FAIL"
        extra = f" ({e.note})" if e.note else ""
        print(f"{status}  {e.name}: worst residual {e.worst_residual:.3e}, "
              f"{e.n_samples} samples{extra}")
    est, issues = diagnostics.estimate_constants(problem, rs=RandomSource(args.seed, 99))
    print("empirical constants:", json.dumps(est, sort_keys=True))
    for issue in issues:
        print("INCONSISTENT:", issue)
    if not report.passed or issues:
        return EXIT_DIAGNOSTICS
    return EXIT_OK


def _cmd_prox_check(args) -> int:
    params = _parse_problem_params(args.problem, args.params)
    problem = problems.build(args.problem, **params)
    c = problem.constants
    rhos = [2.0 * c.ell] if c.L is None else [2.0 * c.ell, 4.0 * c.L]
    rng = RandomSource(args.seed).generator
    from . import geometry
    worst = 0.0
    for rho in rhos:
        if not rho > c.ell:
            continue
        for _ in range(args.points):
            x = geometry.sample_uniform(problem.feasible_set, rng)
            res = envelope.prox(problem, x, rho, inner_tol=args.tol)
            worst = max(worst, res.fixed_point_residual)
        print(f"rho = {rho:.6g}: worst projected fixed-point residual so far "
              f"{worst:.3e}")
    print(f"overall worst residual: {worst:.3e} (inner tol {args.tol:.1e})")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    cfg = _apply_common_flags(cfg, args)
    summary = harness.run_experiment(cfg)
    if args.format == "json":
        print(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
    else:
        agg = summary.aggregates
        print("metric,mean,median,stderr")
        for key, stats in agg.items():
            if stats is None:
                continue
            print(f"{key},{stats['mean']!r},{stats['median']!r},{stats['stderr']!r}")
    print(f"outputs written to {cfg.out_dir}", file=sys.stderr)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    cfg = _apply_common_flags(cfg, args)
    result = harness.sweep_epsilon(cfg)
    if args.format == "json":
        print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    else:
        print("epsilon,T,median_metric")
        for row in result.rows:
            print(f"{row['epsilon']!r},{row['T']},{row['median_metric']!r}")
        print(f"slope,{result.slope!r}")
    print(f"outputs written to {cfg.out_dir}", file=sys.stderr)
    return EXIT_OK


def _apply_common_flags(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.out_dir:
        cfg.out_dir = args.out_dir
    if args.skip_diagnostics:
        cfg.skip_diagnostics = True
    if args.seed is not None:
        cfg.seeds_base = args.seed
        cfg.seeds_list = None
    if args.seeds is not None:
        cfg.seeds_count = args.seeds
        cfg.seeds_list = None
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hiddenconvex",
        description="Projected stochastic gradient methods under hidden convexity.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list-problems", help="show the built-in problem catalog")

    p = sub.add_parser("diagnose", help="run structural certification on a problem")
    p.add_argument("problem")
    p.add_argument("params", nargs="*", help="key=value problem parameters")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("prox-check", help="verify the projected fixed-point identity")
    p.add_argument("problem")
    p.add_argument("params", nargs="*", help="key=value problem parameters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", type=int, default=25)
    p.add_argument("--tol", type=float, default=1e-8)

    for verb in ("run", "sweep"):
        p = sub.add_parser(verb, help=f"{verb} an experiment config")
        p.add_argument("config")
        p.add_argument("--seed", type=int, default=None, help="override base seed")
        p.add_argument("--seeds", type=int, default=None, help="override seed count")
        p.add_argument("--out-dir", default="",
                       help=f"output directory (default: ${OUT_DIR_ENV} or ./out)")
        p.add_argument("--skip-diagnostics", action="store_true")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "list-problems": _cmd_list_problems,
        "diagnose": _cmd_diagnose,
        "prox-check": _cmd_prox_check,
        "run": _cmd_run,
        "sweep": _cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except DiagnosticsError as exc:
        print(f"diagnostics failure: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    except ScheduleError as exc:
        print(f"schedule hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_SCHEDULE
    except ConvergenceFailureError as exc:
        print(f"inner solver failure: {exc}", file=sys.stderr)
        return EXIT_INNER_SOLVER
    except (ConfigurationError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HiddenConvexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
