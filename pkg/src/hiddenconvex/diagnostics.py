"""Runtime certification of a problem instance's structural conditions.

Each check samples the feasible set with a seeded stream, measures the
worst-case residual of one structural inequality against the instance's
declared constants, and records pass/fail.  Reports are deterministic per
seed and serialize to plain dictionaries for the harness JSON output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import envelope, geometry
from .core import HiddenConvexProblem
from .errors import DiagnosticsError
from .rng import RandomSource


@dataclass
class CheckRecord:
    name: str
    n_samples: int
    worst_residual: float
    declared: float | None
    certified: float | None
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DiagnosticsReport:
    problem_name: str
    seed: int
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, name: str) -> CheckRecord:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem_name,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [e.to_dict() for e in self.entries],
        }


def _sample_points(problem, rng, n):
    return geometry.sample_uniform(problem.feasible_set, rng, n)


def check_map_expansion(problem: HiddenConvexProblem, n_pairs: int = 10_000,
                        rs: RandomSource | None = None) -> CheckRecord:
    """Certify the two-point expansion bound of the transformation map:
    the sampled minimum of ``||c(x) - c(y)|| / ||x - y||`` must not fall
    below the declared ``mu_c`` (slack 1e-9)."""
    rng = (rs or RandomSource(0)).generator
    X = _sample_points(problem, rng, n_pairs)
    Y = _sample_points(problem, rng, n_pairs)
    ratios = []
    for x, y in zip(X, Y):
        dx = float(np.linalg.norm(x - y))
        if dx < 1e-12:
            continue
        du = float(np.linalg.norm(problem.forward_map(x) - problem.forward_map(y)))
        ratios.append(du / dx)
    certified = float(np.min(ratios))
    declared = problem.constants.mu_c
    return CheckRecord(
        name="map_expansion",
        n_samples=len(ratios),
        worst_residual=max(0.0, declared - certified),
        declared=declared,
        certified=certified,
        passed=certified >= declared - 1e-9,
    )


def check_reformulation_convexity(problem: HiddenConvexProblem,
                                  n_segments: int = 10_000,
                                  rs: RandomSource | None = None) -> CheckRecord:
    """Midpoint convexity of the reformulation at its declared strong
    convexity: ``H(mid) <= (H(u) + H(v))/2 - mu_H/8 ||u - v||^2`` with
    slack 1e-9 on sampled segments (endpoints are images of feasible
    points, so midpoints stay in the image's convex hull)."""
    rng = (rs or RandomSource(0)).generator
    X = _sample_points(problem, rng, n_segments)
    Y = _sample_points(problem, rng, n_segments)
    mu_H = problem.constants.mu_H
    worst = -math.inf
    for x, y in zip(X, Y):
        u = problem.forward_map(x)
        v = problem.forward_map(y)
        gap = (problem.reformulation((u + v) / 2.0)
               - 0.5 * problem.reformulation(u) - 0.5 * problem.reformulation(v)
               + mu_H / 8.0 * float(np.sum((u - v) ** 2)))
        worst = max(worst, gap)
    return CheckRecord(
        name="reformulation_convexity",
        n_samples=n_segments,
        worst_residual=worst,
        declared=mu_H,
        certified=mu_H,
        passed=worst <= 1e-9,
    )


def check_blend_bounds(problem: HiddenConvexProblem, n_samples: int = 1000,
                       rs: RandomSource | None = None) -> CheckRecord:
    """Interpolation inequalities of the transformed blend toward the
    optimum: objective decrease at the declared ``mu_H`` and displacement
    bounded by ``alpha / mu_c`` times the transformed distance, both with
    slack 1e-8."""
    rng = (rs or RandomSource(0)).generator
    X = _sample_points(problem, rng, n_samples)
    alphas = rng.random(n_samples)
    c = problem.constants
    xs = c.x_star
    u_star = problem.forward_map(xs)
    f_star = c.F_star
    worst = -math.inf
    for x, a in zip(X, alphas):
        xa = envelope.blend_with_optimum(problem, x, xs, a)
        du = float(np.linalg.norm(problem.forward_map(x) - u_star))
        res1 = (problem.objective(xa)
                - (1.0 - a) * problem.objective(x) - a * f_star
                + (1.0 - a) * a * c.mu_H / 2.0 * du * du)
        res2 = float(np.linalg.norm(xa - x)) - a / c.mu_c * du
        worst = max(worst, res1, res2)
    return CheckRecord(
        name="blend_bounds",
        n_samples=n_samples,
        worst_residual=worst,
        declared=None,
        certified=None,
        passed=worst <= 1e-8,
    )


def check_gradient_domination(problem: HiddenConvexProblem, n_samples: int = 1000,
                              rs: RandomSource | None = None) -> CheckRecord:
    """Stationarity-measure lower bounds by the optimality gap: the weak
    form scaled by ``mu_c / D_U`` on bounded images, and the squared form
    scaled by ``2 mu_H mu_c^2`` under strong convexity (slack 1e-8).
    Skipped (not failed) for non-smooth problems or non-box sets."""
    if not problem.is_smooth:
        return CheckRecord("gradient_domination", 0, 0.0, None, None, True,
                           note="skipped: needs a differentiable objective")
    if problem.feasible_set.kind not in geometry.BOX_KINDS:
        return CheckRecord("gradient_domination", 0, 0.0, None, None, True,
                           note="skipped: stationarity measure needs a box set")
    rng = (rs or RandomSource(0)).generator
    X = _sample_points(problem, rng, n_samples)
    c = problem.constants
    worst = -math.inf
    for x in X:
        s = geometry.stationarity_measure(problem.feasible_set, x,
                                          problem.det_gradient(x))
        gap = problem.objective(x) - c.F_star
        if math.isfinite(c.D_U):
            worst = max(worst, (c.mu_c / c.D_U) * gap - s)
        if c.mu_H > 0:
            worst = max(worst, 2.0 * c.mu_H * c.mu_c ** 2 * gap - s * s)
    return CheckRecord(
        name="gradient_domination",
        n_samples=n_samples,
        worst_residual=worst,
        declared=None,
        certified=None,
        passed=worst <= 1e-8,
    )


def check_gradient_finite_diff(problem: HiddenConvexProblem, n_points: int = 64,
                               fd_step: float = 1e-6,
                               rs: RandomSource | None = None) -> CheckRecord:
    """Central finite differences against the analytic gradient at interior
    points, relative error at most 1e-5.  Skipped for non-smooth problems."""
    if not problem.is_smooth:
        return CheckRecord("gradient_finite_diff", 0, 0.0, None, None, True,
                           note="skipped: needs a differentiable objective")
    rng = (rs or RandomSource(0)).generator
    s = problem.feasible_set
    margin = 10.0 * fd_step * (1.0 + float(np.max(np.abs(s.upper))))
    lo, hi = s.lower + margin, s.upper - margin
    X = lo + rng.random((n_points, problem.dim)) * (hi - lo)
    worst = 0.0
    for x in X:
        g = problem.det_gradient(x)
        fd = np.empty_like(g)
        h = fd_step * (1.0 + np.abs(x))
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = h[i]
            fd[i] = (problem.objective(x + e) - problem.objective(x - e)) / (2 * h[i])
        rel = float(np.linalg.norm(fd - g)) / (1.0 + float(np.linalg.norm(g)))
        worst = max(worst, rel)
    return CheckRecord(
        name="gradient_finite_diff",
        n_samples=n_points,
        worst_residual=worst,
        declared=None,
        certified=None,
        passed=worst <= 1e-5,
    )


def check_composition_roundtrip(problem: HiddenConvexProblem, n_points: int = 10_000,
                                rs: RandomSource | None = None) -> CheckRecord:
    """Two identities that define the transformation: the inverse undoes
    the map, and the objective equals the reformulation of the image,
    both to relative tolerance 1e-10."""
    rng = (rs or RandomSource(0)).generator
    X = _sample_points(problem, rng, n_points)
    worst = 0.0
    for x in X:
        u = problem.forward_map(x)
        back = problem.inverse_map(u)
        r1 = float(np.linalg.norm(back - x)) / (1.0 + float(np.linalg.norm(x)))
        f = problem.objective(x)
        r2 = abs(f - problem.reformulation(u)) / (1.0 + abs(f))
        worst = max(worst, r1, r2)
    return CheckRecord(
        name="composition_roundtrip",
        n_samples=n_points,
        worst_residual=worst,
        declared=None,
        certified=None,
        passed=worst <= 1e-10,
    )


def check_oracle_unbiased(problem: HiddenConvexProblem, n_draws: int = 10_000,
                          n_points: int = 5,
                          rs: RandomSource | None = None) -> CheckRecord:
    """Oracle sample means within five standard errors of the deterministic
    (sub-)gradient at random feasible points."""
    rng = (rs or RandomSource(0)).generator
    X = _sample_points(problem, rng, n_points)
    c = problem.constants
    scale = c.sigma if (c.sigma is not None and c.sigma > 0) else c.G_F
    worst = 0.0
    for x in X:
        acc = np.zeros(problem.dim)
        for _ in range(n_draws):
            acc += problem.stochastic_oracle(x, rng)
        err = float(np.linalg.norm(acc / n_draws - problem.det_gradient(x)))
        if scale is None or scale == 0:
            worst = max(worst, err)  # deterministic oracle must match exactly
        else:
            worst = max(worst, err / (5.0 * scale / math.sqrt(n_draws)))
    passed = worst <= (1e-12 if not scale else 1.0)
    return CheckRecord(
        name="oracle_unbiased",
        n_samples=n_points * n_draws,
        worst_residual=worst,
        declared=scale,
        certified=None,
        passed=passed,
        note="residual is ||mean - grad|| over five standard errors" if scale else "",
    )


def estimate_constants(problem: HiddenConvexProblem, n_samples: int = 2000,
                       rs: RandomSource | None = None) -> tuple[dict, list[str]]:
    """Empirical constant estimates with consistency flags.

    Returns a dict of sampled estimates (same symbols as the constant
    bundle) and a list of inconsistency messages: declared upper bounds
    (L, ell, sigma, G_F, D_U) must not be exceeded and declared lower
    bounds (mu_c) must not overshoot the sampled values.
    """
    rng = (rs or RandomSource(0)).generator
    c = problem.constants
    X = _sample_points(problem, rng, n_samples)
    Y = _sample_points(problem, rng, n_samples)
    est: dict[str, float] = {}
    issues: list[str] = []

    ratios, du_all = [], []
    for x, y in zip(X, Y):
        dx = float(np.linalg.norm(x - y))
        du = float(np.linalg.norm(problem.forward_map(x) - problem.forward_map(y)))
        du_all.append(du)
        if dx > 1e-12:
            ratios.append(du / dx)
    est["mu_c"] = float(np.min(ratios))
    est["D_U"] = float(np.max(du_all))

    grads = np.stack([problem.det_gradient(x) for x in X])
    gy = np.stack([problem.det_gradient(y) for y in Y])
    if problem.is_smooth:
        num = np.linalg.norm(grads - gy, axis=1)
        den = np.linalg.norm(X - Y, axis=1)
        keep = den > 1e-12
        est["L"] = float(np.max(num[keep] / den[keep]))
    inner = np.sum((grads - gy) * (X - Y), axis=1)
    den2 = np.sum((X - Y) ** 2, axis=1)
    keep = den2 > 1e-24
    est["ell"] = float(max(0.0, -np.min(inner[keep] / den2[keep])))

    sq_norms, sq_errs = [], []
    for x in X[:20]:
        for _ in range(200):
            g = problem.stochastic_oracle(x, rng)
            sq_norms.append(float(np.sum(g * g)))
            diff = g - problem.det_gradient(x)
            sq_errs.append(float(np.sum(diff * diff)))
    sq_norms = np.asarray(sq_norms)
    sq_errs = np.asarray(sq_errs)
    est["G_F"] = math.sqrt(float(np.mean(sq_norms)))
    est["sigma"] = math.sqrt(float(np.mean(sq_errs)))
    # Monte Carlo estimates of the squared moments carry sampling noise, so
    # declared bounds are flagged only on five-standard-error exceedance.
    se_err = float(np.std(sq_errs, ddof=1)) / math.sqrt(sq_errs.size)
    se_norm = float(np.std(sq_norms, ddof=1)) / math.sqrt(sq_norms.size)

    tol = 1.0 + 1e-6
    if est["mu_c"] < c.mu_c - 1e-9:
        issues.append(f"declared mu_c {c.mu_c} exceeds sampled minimum {est['mu_c']}")
    if "L" in est and c.L is not None and est["L"] > c.L * tol:
        issues.append(f"sampled gradient ratio {est['L']} exceeds declared L {c.L}")
    if est["ell"] > c.ell * tol + 1e-9:
        issues.append(f"sampled weak-convexity {est['ell']} exceeds declared ell {c.ell}")
    if c.sigma is not None and float(np.mean(sq_errs)) > c.sigma ** 2 + 5 * se_err + 1e-12:
        issues.append(f"sampled noise level {est['sigma']} exceeds declared sigma {c.sigma}")
    if c.G_F is not None and float(np.mean(sq_norms)) > c.G_F ** 2 + 5 * se_norm:
        issues.append(f"sampled second moment {est['G_F']} exceeds declared G_F {c.G_F}")
    if math.isfinite(c.D_U) and est["D_U"] > c.D_U * tol:
        issues.append(f"sampled image diameter {est['D_U']} exceeds declared D_U {c.D_U}")
    return est, issues


def run_all(problem: HiddenConvexProblem, rs: RandomSource | None = None,
            n_pairs: int = 10_000, n_segments: int = 10_000,
            n_blend: int = 1000, n_grad: int = 64) -> DiagnosticsReport:
    """Full certification sweep; deterministic given the seed."""
    rs = rs or RandomSource(0)
    report = DiagnosticsReport(problem_name=problem.name, seed=rs.seed)
    report.entries.append(check_map_expansion(problem, n_pairs, RandomSource(rs.seed, 1)))
    report.entries.append(check_reformulation_convexity(problem, n_segments,
                                                        RandomSource(rs.seed, 2)))
    report.entries.append(check_blend_bounds(problem, n_blend, RandomSource(rs.seed, 3)))
    report.entries.append(check_gradient_domination(problem, n_blend,
                                                    RandomSource(rs.seed, 4)))
    report.entries.append(check_gradient_finite_diff(problem, n_grad,
                                                     rs=RandomSource(rs.seed, 5)))
    report.entries.append(check_composition_roundtrip(problem, n_pairs,
                                                      RandomSource(rs.seed, 6)))
    return report


def require_pass(report: DiagnosticsReport) -> None:
    if not report.passed:
        failed = [e.name for e in report.entries if not e.passed]
        raise DiagnosticsError(
            f"problem {report.problem_name!r} failed checks: {failed}", report=report)
