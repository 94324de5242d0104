"""Experiment orchestration: seeded runs, CSV/JSON output, rate fitting.

One experiment = one problem instance, one algorithm, one schedule, many
seeds.  Each seed owns an independent substream and produces one trajectory
CSV; the aggregate summary is recomputable from the per-seed rows.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import algorithms, diagnostics, geometry, problems
from .algorithms import MANUAL, Schedule, make_schedule
from .config import ExperimentConfig
from .core import HiddenConvexProblem, IterationRecord
from .errors import ConfigurationError, DomainError
from .rng import RandomSource

CSV_COLUMNS = ("run_id", "seed", "t", "samples", "f_gap", "dist_sq",
               "lyapunov", "grad_err_sq")

# Metric that the schedule's regime drives below epsilon.
TARGET_METRIC = {
    "sm_convex": "lyapunov",
    "sm_strongly_convex": "lyapunov",
    "psgd_convex": "lyapunov",
    "psgd_strongly_convex": "lyapunov",
    "psgdm_convex": "f_gap",
    "psgdm_strongly_convex": "f_gap",
}


@dataclass
class SeedResult:
    run_id: str
    seed_label: int
    x_final: np.ndarray
    records: list[IterationRecord]

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]


@dataclass
class RunSummary:
    problem: str
    algorithm: str
    schedule: Schedule
    per_seed: list[dict]
    aggregates: dict
    diagnostics_digest: dict | None
    target_metric: str | None

    def to_dict(self) -> dict:
        sched = dataclasses.asdict(self.schedule)
        return {
            "problem": self.problem,
            "algorithm": self.algorithm,
            "schedule": sched,
            "target_metric": self.target_metric,
            "per_seed": self.per_seed,
            "aggregates": self.aggregates,
            "diagnostics": self.diagnostics_digest,
        }


@dataclass
class SweepResult:
    problem: str
    algorithm: str
    theorem: str
    rows: list[dict]          # epsilon, T, eta, alpha, beta, median metric
    slope: float
    intercept: float
    max_residual: float

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "algorithm": self.algorithm,
            "theorem": self.theorem,
            "rows": self.rows,
            "fit": {"slope": self.slope, "intercept": self.intercept,
                    "max_residual": self.max_residual},
        }


def fit_rate(pairs) -> tuple[float, float, float]:
    """Least-squares slope of ``log T`` against ``log(1/epsilon)``.

    Returns (slope, intercept, max absolute log-residual).  At least two
    pairs are needed; a single pair is underdetermined.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise DomainError("rate fitting needs at least two (epsilon, T) pairs")
    x = np.log([1.0 / float(e) for e, _ in pairs])
    y = np.log([float(t) for _, t in pairs])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    return float(slope), float(intercept), resid


def _initial_gap_bound(problem: HiddenConvexProblem, x0_policy: str) -> float:
    """Upper bound on the initial certificate: the envelope never exceeds
    the objective, so F(x0) - F* works for a fixed start; for random starts
    use the sampled worst gap over the box with a safety margin."""
    if x0_policy == "fixed":
        return problem.objective(problem.x0_default) - problem.constants.F_star
    rng = np.random.default_rng(0)
    X = geometry.sample_uniform(problem.feasible_set, rng, 4096)
    worst = max(problem.objective(x) for x in X)
    return 1.1 * (worst - problem.constants.F_star)


def build_schedule(cfg: ExperimentConfig, problem: HiddenConvexProblem) -> Schedule:
    if cfg.theorem == MANUAL:
        ov = dict(cfg.schedule_overrides)
        if "eta" not in ov or "T" not in ov:
            raise ConfigurationError("manual schedules need schedule.eta and schedule.T")
        c = problem.constants
        rho = ov.get("rho")
        if rho is None:
            rho = 2.0 * c.ell if cfg.algorithm == "sm" else (
                4.0 * c.L if c.L is not None else 2.0 * c.ell)
        return Schedule(
            theorem=MANUAL,
            eta=float(ov["eta"]),
            alpha=float(ov.get("alpha", 0.0)),
            rho=float(rho),
            T=int(ov["T"]),
            beta=float(ov["beta"]) if "beta" in ov else (1.0 if cfg.algorithm == "psgdm" else None),
            batch=int(ov.get("batch", 1)),
            post_batch=int(ov["post_batch"]) if "post_batch" in ov else None,
            epsilon=cfg.epsilon,
        )
    if cfg.epsilon is None:
        raise ConfigurationError("regime schedules need 'epsilon'")
    lyap0 = _initial_gap_bound(problem, cfg.x0_policy)
    sched = make_schedule(cfg.theorem, problem.constants, cfg.epsilon, lyap0)
    if cfg.schedule_overrides:
        kw = {k: (int(v) if k in ("T", "batch", "post_batch") else float(v))
              for k, v in cfg.schedule_overrides.items()}
        sched = replace(sched, **kw)
    return sched


def _run_seeds(problem, cfg, schedule) -> list[SeedResult]:
    """Seeds are independent tasks; the compiled kernels release the GIL, so
    a small thread pool runs them concurrently.  Results keep seed order and
    all file writes happen afterwards."""
    workers = min(len(cfg.seeds), int(os.environ.get("HIDDENCONVEX_WORKERS",
                                                     os.cpu_count() or 1)))
    if workers <= 1:
        return [_run_one_seed(problem, cfg, schedule, s, i) for s, i in cfg.seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(
            lambda si: _run_one_seed(problem, cfg, schedule, si[0], si[1]),
            cfg.seeds))


def _run_one_seed(problem, cfg, schedule, seed, run_index) -> SeedResult:
    rs = RandomSource(seed, run_index)
    label = seed if run_index is None else run_index
    run_id = f"{problem.name}-{cfg.algorithm}-{schedule.theorem}-s{label}"
    x0 = None
    if cfg.x0_policy == "uniform":
        x0 = geometry.sample_uniform(problem.feasible_set, rs.generator)
    common = dict(checkpoints=cfg.checkpoint_count,
                  lyapunov_at_checkpoints=cfg.checkpoint_lyapunov, x0=x0)
    if cfg.algorithm == "sm":
        x, records = algorithms.run_sm(problem, schedule, rs,
                                       inner_tol=cfg.inner_tol, **common)
    elif cfg.algorithm == "psgd":
        x, records = algorithms.run_psgd(problem, schedule, rs,
                                         inner_tol=cfg.inner_tol, **common)
    else:
        x, _, records = algorithms.run_psgdm(problem, schedule, rs, **common)
    return SeedResult(run_id=run_id, seed_label=label, x_final=x, records=records)


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _write_seed_csv(path: str, problem, result: SeedResult) -> None:
    f_star = problem.constants.F_star
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in result.records:
            writer.writerow([
                result.run_id, result.seed_label, rec.t, rec.wall_samples,
                _fmt(rec.f_value - f_star), _fmt(rec.dist_to_opt_sq),
                _fmt(rec.lyapunov), _fmt(rec.grad_err_sq),
            ])


def _aggregate(values: list[float | None]) -> dict | None:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    arr = np.asarray(vals, dtype=float)
    stderr = float(np.std(arr, ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return {"mean": float(np.mean(arr)), "median": float(np.median(arr)),
            "stderr": stderr, "n": int(arr.size)}


def summarize(problem, cfg, schedule, results, digest) -> RunSummary:
    f_star = problem.constants.F_star
    per_seed = []
    for r in results:
        fin = r.final
        per_seed.append({
            "run_id": r.run_id,
            "seed": r.seed_label,
            "f_gap": fin.f_value - f_star,
            "dist_sq": fin.dist_to_opt_sq,
            "lyapunov": fin.lyapunov,
            "grad_err_sq": fin.grad_err_sq,
            "samples": fin.wall_samples,
        })
    aggregates = {
        key: _aggregate([row[key] for row in per_seed])
        for key in ("f_gap", "dist_sq", "lyapunov", "grad_err_sq", "samples")
    }
    return RunSummary(
        problem=problem.name,
        algorithm=cfg.algorithm,
        schedule=schedule,
        per_seed=per_seed,
        aggregates=aggregates,
        diagnostics_digest=digest,
        target_metric=TARGET_METRIC.get(schedule.theorem),
    )


def run_experiment(cfg: ExperimentConfig, write_files: bool = True) -> RunSummary:
    """Run all seeds of one configured experiment.

    Diagnostics run first unless skipped and must pass; the schedule is
    validated against its regime before any iteration.  Outputs: one
    trajectory CSV per seed, an aggregate CSV, and a JSON summary.
    """
    problem = problems.build(cfg.problem_name, **cfg.problem_params)
    digest = None
    if not cfg.skip_diagnostics:
        report = diagnostics.run_all(problem, RandomSource(cfg.seeds_base))
        diagnostics.require_pass(report)
        digest = {
            "passed": report.passed,
            "worst_residuals": {e.name: e.worst_residual for e in report.entries},
        }
    schedule = build_schedule(cfg, problem)
    algorithms.validate_schedule(schedule, problem.constants)

    results = _run_seeds(problem, cfg, schedule)
    summary = summarize(problem, cfg, schedule, results, digest)

    if write_files:
        os.makedirs(cfg.out_dir, exist_ok=True)
        for r in results:
            _write_seed_csv(os.path.join(cfg.out_dir, f"{r.run_id}.csv"), problem, r)
        agg_path = os.path.join(cfg.out_dir, "summary.csv")
        with open(agg_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run_id", "seed", "f_gap", "dist_sq", "lyapunov",
                             "grad_err_sq", "samples"])
            for row in summary.per_seed:
                writer.writerow([row["run_id"], row["seed"], _fmt(row["f_gap"]),
                                 _fmt(row["dist_sq"]), _fmt(row["lyapunov"]),
                                 _fmt(row["grad_err_sq"]), row["samples"]])
        with open(os.path.join(cfg.out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return summary


def sweep_epsilon(cfg: ExperimentConfig, write_files: bool = True) -> SweepResult:
    """Run the experiment over an accuracy grid and fit the sample-
    complexity slope of ``log T`` against ``log(1/epsilon)``."""
    if cfg.epsilon_grid is None or len(cfg.epsilon_grid) < 3:
        raise ConfigurationError("sweeps need epsilon.grid with at least 3 points")
    if cfg.theorem == MANUAL:
        raise ConfigurationError("sweeps need a regime-tagged schedule")
    problem = problems.build(cfg.problem_name, **cfg.problem_params)
    digest = None
    if not cfg.skip_diagnostics:
        report = diagnostics.run_all(problem, RandomSource(cfg.seeds_base))
        diagnostics.require_pass(report)

    metric = TARGET_METRIC[cfg.theorem]
    rows = []
    for eps in cfg.epsilon_grid:
        eps_cfg = dataclasses.replace(cfg, epsilon=float(eps), epsilon_grid=None)
        schedule = build_schedule(eps_cfg, problem)
        algorithms.validate_schedule(schedule, problem.constants)
        results = _run_seeds(problem, eps_cfg, schedule)
        vals = [getattr(r.final, "lyapunov" if metric == "lyapunov" else "f_value")
                for r in results]
        if metric == "f_gap":
            vals = [v - problem.constants.F_star for v in vals]
        rows.append({
            "epsilon": float(eps),
            "T": schedule.T,
            "eta": schedule.eta,
            "alpha": schedule.alpha,
            "beta": schedule.beta,
            "median_metric": float(np.median([v for v in vals if v is not None])),
            "metric": metric,
        })
    slope, intercept, resid = fit_rate([(row["epsilon"], row["T"]) for row in rows])
    result = SweepResult(problem=problem.name, algorithm=cfg.algorithm,
                         theorem=cfg.theorem, rows=rows, slope=slope,
                         intercept=intercept, max_residual=resid)
    if write_files:
        os.makedirs(cfg.out_dir, exist_ok=True)
        with open(os.path.join(cfg.out_dir, "sweep.csv"), "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epsilon", "T", "eta", "alpha", "beta",
                             "median_metric", "metric"])
            for row in rows:
                writer.writerow([_fmt(row["epsilon"]), row["T"], _fmt(row["eta"]),
                                 _fmt(row["alpha"]), _fmt(row["beta"]),
                                 _fmt(row["median_metric"]), row["metric"]])
        with open(os.path.join(cfg.out_dir, "sweep.json"), "w", encoding="utf-8") as fh:
            json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return result
