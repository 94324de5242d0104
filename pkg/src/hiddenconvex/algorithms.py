"""Projected stochastic (sub-)gradient methods and their schedules.

Three methods share the projected update ``x <- proj(x - eta * g)``:

* the subgradient method (SM) for weakly convex, possibly non-smooth
  objectives, certified through the Moreau envelope with weight ``2 ell``;
* projected SGD (P-SGD) for smooth objectives, envelope weight ``4 L``;
* projected SGD with heavy-ball momentum (P-SGD-M), whose running gradient
  estimate ``g <- (1 - beta) g + beta * fresh`` yields last-iterate
  function-value convergence.

``make_schedule`` turns a constant bundle and target accuracy into the
regime's prescribed step size, contraction rate, and iteration count; the
contraction rate is an analysis device that only enters the iteration
count, while the running method uses the constant step throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import envelope, geometry, kernels
from .core import HiddenConvexProblem, IterationRecord, ConstantBundle
from .errors import ConfigurationError, DomainError, ScheduleError
from .rng import RandomSource

SM_CONVEX = "sm_convex"
SM_STRONGLY_CONVEX = "sm_strongly_convex"
PSGD_CONVEX = "psgd_convex"
PSGD_STRONGLY_CONVEX = "psgd_strongly_convex"
PSGDM_CONVEX = "psgdm_convex"
PSGDM_STRONGLY_CONVEX = "psgdm_strongly_convex"
MANUAL = "manual"

THEOREM_TAGS = (SM_CONVEX, SM_STRONGLY_CONVEX, PSGD_CONVEX, PSGD_STRONGLY_CONVEX,
                PSGDM_CONVEX, PSGDM_STRONGLY_CONVEX, MANUAL)

_TOL = 1e-9


@dataclass(frozen=True)
class Schedule:
    """Hyperparameters of one run, tagged by the regime that produced them."""

    theorem: str
    eta: float
    alpha: float
    rho: float
    T: int
    beta: float | None = None
    batch: int = 1
    post_batch: int | None = None
    epsilon: float | None = None

    def algorithm_family(self) -> str | None:
        for fam in ("sm", "psgdm", "psgd"):
            if self.theorem.startswith(fam + "_"):
                return fam
        return None


def _iterations(alpha: float, lyapunov0: float, epsilon: float) -> int:
    """Contraction steps until ``(1 - alpha)^T * lyapunov0 <= epsilon / 3``."""
    if lyapunov0 <= 0 or 3.0 * lyapunov0 <= epsilon:
        return 1
    return max(1, math.ceil(math.log(3.0 * lyapunov0 / epsilon) / alpha))


def make_schedule(theorem: str, constants: ConstantBundle, epsilon: float,
                  lyapunov0: float) -> Schedule:
    """Regime-prescribed hyperparameters for target accuracy ``epsilon``.

    ``lyapunov0`` is an upper bound on the initial certificate; for the
    envelope-based methods ``F(x0) - F*`` is always valid, and for the
    momentum method the constructor adds the ``eta sigma^2 / beta`` term
    that the one-draw initialization of the gradient estimate contributes.

    Branches of the contraction rate that exist only to balance a noise
    term are dropped when ``sigma`` is exactly zero.
    """
    if theorem not in THEOREM_TAGS or theorem == MANUAL:
        raise ConfigurationError(f"unknown schedule regime {theorem!r}")
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    c = constants
    mu2 = c.mu_c ** 2

    if theorem in (SM_CONVEX, SM_STRONGLY_CONVEX):
        c.require("G_F")
        if not c.ell > 0:
            raise ConfigurationError("constant 'ell' must be positive for the "
                                     "subgradient-method schedules")
    if theorem in (PSGD_CONVEX, PSGD_STRONGLY_CONVEX, PSGDM_CONVEX,
                   PSGDM_STRONGLY_CONVEX):
        c.require("L", "sigma")
    if theorem in (SM_CONVEX, PSGD_CONVEX, PSGDM_CONVEX):
        if not math.isfinite(c.D_U):
            raise ConfigurationError("constant 'D_U' must be finite for the "
                                     "bounded-image schedules")
    if theorem in (SM_STRONGLY_CONVEX, PSGD_STRONGLY_CONVEX, PSGDM_STRONGLY_CONVEX):
        if not c.mu_H > 0:
            raise ConfigurationError("constant 'mu_H' must be positive for the "
                                     "strongly convex schedules")

    if theorem == SM_CONVEX:
        rho = 2.0 * c.ell
        sat = min(1.0, mu2 * epsilon ** 2 / (48.0 * c.D_U ** 2 * c.G_F ** 2))
        eta = sat / (2.0 * c.ell)
        alpha = min(eta * c.ell,
                    2.0 * epsilon * mu2 * eta / (9.0 * c.D_U ** 2),
                    math.sqrt(32.0 * c.ell) * c.mu_c * c.G_F * eta ** 1.5
                    / (math.sqrt(3.0) * c.D_U))
        T = _iterations(alpha, lyapunov0, epsilon)
        return Schedule(theorem, eta, alpha, rho, T, epsilon=epsilon)

    if theorem == SM_STRONGLY_CONVEX:
        rho = 2.0 * c.ell
        eta = min(1.0 / (2.0 * c.ell),
                  mu2 * c.mu_H * epsilon / (20.0 * c.ell * c.G_F ** 2))
        alpha = min(eta * c.ell, eta * mu2 * c.mu_H / 2.0)
        T = _iterations(alpha, lyapunov0, epsilon)
        return Schedule(theorem, eta, alpha, rho, T, epsilon=epsilon)

    if theorem == PSGD_CONVEX:
        rho = 4.0 * c.L
        sat = 1.0 if c.sigma == 0 else min(
            1.0, mu2 * epsilon ** 2 / (12.0 * c.D_U ** 2 * c.sigma ** 2))
        eta = 2.0 * sat / (9.0 * c.L)
        branches = [2.0 * eta * c.L,
                    2.0 * epsilon * mu2 * eta / (3.0 * c.D_U ** 2)]
        if c.sigma > 0:
            branches.append(math.sqrt(8.0 * c.L) * c.mu_c * c.sigma * eta ** 1.5
                            / (math.sqrt(3.0) * c.D_U))
        alpha = min(branches)
        T = _iterations(alpha, lyapunov0, epsilon)
        return Schedule(theorem, eta, alpha, rho, T, epsilon=epsilon)

    if theorem == PSGD_STRONGLY_CONVEX:
        rho = 4.0 * c.L
        cap = 2.0 / (9.0 * c.L)
        eta = cap if c.sigma == 0 else min(
            cap, mu2 * c.mu_H * epsilon / (10.0 * c.L * c.sigma ** 2))
        alpha = min(2.0 * eta * c.L, eta * mu2 * c.mu_H / 2.0)
        T = _iterations(alpha, lyapunov0, epsilon)
        return Schedule(theorem, eta, alpha, rho, T, epsilon=epsilon)

    if theorem == PSGDM_CONVEX:
        beta = 1.0 if c.sigma == 0 else min(
            1.0, mu2 * epsilon ** 2 / (9.0 * c.D_U ** 2 * c.sigma ** 2))
        eta = beta / (4.0 * c.L)
        branches = [beta / 2.0,
                    3.0 * mu2 * beta * epsilon / (2.0 * c.L * c.D_U ** 2)]
        if c.sigma > 0:
            branches.append(c.sigma * c.mu_c * beta ** 1.5 / (4.0 * c.L * c.D_U))
        alpha = min(branches)
        lyap0 = lyapunov0 + eta * c.sigma ** 2 / beta
        T = _iterations(alpha, lyap0, epsilon)
        return Schedule(theorem, eta, alpha, 4.0 * c.L, T, beta=beta, epsilon=epsilon)

    # PSGDM_STRONGLY_CONVEX
    beta = 1.0 if c.sigma == 0 else min(1.0, mu2 * c.mu_H * epsilon / (8.0 * c.sigma ** 2))
    eta = beta / (4.0 * c.L)
    alpha = min(beta / 2.0, mu2 * c.mu_H * eta / 4.0)
    lyap0 = lyapunov0 + eta * c.sigma ** 2 / beta
    T = _iterations(alpha, lyap0, epsilon)
    return Schedule(theorem, eta, alpha, 4.0 * c.L, T, beta=beta, epsilon=epsilon)


def validate_schedule(schedule: Schedule, constants: ConstantBundle) -> None:
    """Check the hypothesis inequalities of the schedule's regime.

    Manual schedules only get basic sanity checks; regime-tagged schedules
    (including ones with overridden fields) must satisfy their regime's
    inequalities or a :class:`ScheduleError` is raised.
    """
    s, c = schedule, constants
    if s.theorem not in THEOREM_TAGS:
        raise ScheduleError(f"unknown schedule regime {s.theorem!r}")
    if s.eta < 0 or s.alpha < 0:
        raise ScheduleError("step size and contraction rate must be nonnegative")
    if s.T < 1 or s.batch < 1:
        raise ScheduleError("iteration count and batch size must be >= 1")
    if s.beta is not None and not 0.0 < s.beta <= 1.0:
        raise ScheduleError("momentum weight beta must lie in (0, 1]")
    if s.theorem == MANUAL:
        return

    def need(cond, msg):
        if not cond:
            raise ScheduleError(f"{s.theorem} hypothesis violated: {msg}")

    slack = 1.0 + _TOL
    if s.theorem in (SM_CONVEX, SM_STRONGLY_CONVEX):
        need(s.eta <= slack / (2.0 * c.ell), "eta <= 1/(2 ell)")
        need(s.alpha <= slack * s.eta * c.ell, "alpha <= eta * ell")
        need(abs(s.rho - 2.0 * c.ell) <= _TOL * max(1.0, c.ell), "rho = 2 ell")
    elif s.theorem in (PSGD_CONVEX, PSGD_STRONGLY_CONVEX):
        need(s.eta <= slack * 2.0 / (9.0 * c.L), "eta <= 2/(9 L)")
        need(s.alpha <= slack * 2.0 * s.eta * c.L, "alpha <= 2 eta L")
        need(abs(s.rho - 4.0 * c.L) <= _TOL * max(1.0, c.L), "rho = 4 L")
    else:
        need(s.beta is not None, "momentum weight beta present")
        need(s.eta <= slack * s.beta / (4.0 * c.L), "eta <= beta/(4 L)")
        need(s.alpha <= slack * s.beta / 2.0, "alpha <= beta/2")
    if s.theorem in (SM_STRONGLY_CONVEX, PSGD_STRONGLY_CONVEX):
        need(s.alpha <= slack * s.eta * c.mu_c ** 2 * c.mu_H / 2.0,
             "alpha <= eta mu_c^2 mu_H / 2")
    if s.theorem == PSGDM_STRONGLY_CONVEX:
        need(s.alpha <= slack * c.mu_c ** 2 * c.mu_H * s.eta / 4.0,
             "alpha <= mu_c^2 mu_H eta / 4")


# ---------------------------------------------------------------------------
# Engines
# ---------------------------------------------------------------------------

def _select_engine(problem: HiddenConvexProblem, engine: str | None) -> str:
    choice = engine or kernels.backend()
    if choice == "numba" and (problem.kernel_spec is None
                              or problem.feasible_set.kind not in geometry.BOX_KINDS):
        return "numpy"
    return choice


def _checkpoint_iters(T: int, checkpoints) -> np.ndarray:
    """Geometrically spaced checkpoint iterations in [1, T], final included."""
    if isinstance(checkpoints, (int, np.integer)):
        n = min(int(checkpoints), T)
        ts = np.unique(np.round(np.geomspace(1, T, num=max(n, 1))).astype(np.int64))
    else:
        ts = np.unique(np.asarray(checkpoints, dtype=np.int64))
        if ts.size and (ts[0] < 1 or ts[-1] > T):
            raise DomainError("checkpoints must lie in [1, T]")
    if ts.size == 0 or ts[-1] != T:
        ts = np.append(ts, np.int64(T))
    return ts.astype(np.int64)


def _sgd_engine(problem, x0, eta, T, B, cp_ts, rng, engine):
    if engine == "numba":
        ks = problem.kernel_spec
        s = problem.feasible_set
        return kernels.sgd_loop(ks.grad_kind, ks.oracle_kind, ks.expo, ks.coef,
                                ks.cap, ks.price, ks.scal, ks.noise,
                                s.lower, s.upper, x0, eta, T, B, cp_ts, rng)
    x = x0.copy()
    snaps = np.empty((cp_ts.size, x0.size))
    k = 0
    for t in range(T):
        if B == 1:
            g = problem.stochastic_oracle(x, rng)
        else:
            acc = np.zeros_like(x)
            for _ in range(B):
                acc += problem.stochastic_oracle(x, rng)
            g = acc / B
        x = geometry.project(problem.feasible_set, x - eta * g)
        if k < cp_ts.size and t + 1 == cp_ts[k]:
            snaps[k] = x
            k += 1
    return x, snaps


def _momentum_engine(problem, x0, g0, eta, beta, T, cp_ts, rng, engine):
    if engine == "numba":
        ks = problem.kernel_spec
        s = problem.feasible_set
        return kernels.momentum_loop(ks.grad_kind, ks.oracle_kind, ks.expo, ks.coef,
                                     ks.cap, ks.price, ks.scal, ks.noise,
                                     s.lower, s.upper, x0, g0, eta, beta, T, cp_ts, rng)
    x = x0.copy()
    g = g0.copy()
    xs = np.empty((cp_ts.size, x0.size))
    gs = np.empty((cp_ts.size, x0.size))
    k = 0
    for t in range(T):
        x = geometry.project(problem.feasible_set, x - eta * g)
        fresh = problem.stochastic_oracle(x, rng)
        g = (1.0 - beta) * g + beta * fresh
        if k < cp_ts.size and t + 1 == cp_ts[k]:
            xs[k] = x
            gs[k] = g
            k += 1
    return x, g, xs, gs


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------

def _start_point(problem, x0):
    x = problem.x0_default if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    geometry.require_member(problem.feasible_set, x)
    return x.astype(float)


def _make_records(problem, schedule, x0, cp_ts, snaps, lyapunov, inner_tol,
                  samples_of, g_snaps=None, g0=None):
    records = []
    xs = problem.constants.x_star

    def record(t, x, g=None):
        lyap = None
        gerr = None
        if g is not None:
            err = g - problem.det_gradient(x)
            gerr = float(np.sum(err * err))
            if lyapunov:
                beta = schedule.beta if schedule.beta else 1.0
                lyap = envelope.momentum_lyapunov(problem, x, g, schedule.eta, beta)
        elif lyapunov:
            lyap = envelope.moreau_lyapunov(problem, x, schedule.rho, inner_tol)
        records.append(IterationRecord(
            t=int(t),
            f_value=float(problem.objective(x)),
            dist_to_opt_sq=float(np.sum((x - xs) ** 2)),
            wall_samples=int(samples_of(t)),
            lyapunov=lyap,
            grad_err_sq=gerr,
        ))

    record(0, x0, g=g0)
    for k, t in enumerate(cp_ts):
        record(t, snaps[k], g=None if g_snaps is None else g_snaps[k])
    return records


def run_sm(problem: HiddenConvexProblem, schedule: Schedule, rs: RandomSource,
           checkpoints=100, lyapunov_at_checkpoints: bool = True,
           inner_tol: float = 1e-8, x0=None, engine: str | None = None):
    """Projected stochastic subgradient method.

    Runs exactly ``schedule.T`` iterations with ``schedule.batch`` oracle
    draws per iteration, all iterates projected, and returns the final
    iterate plus :class:`IterationRecord` telemetry at geometrically spaced
    checkpoints (the final iterate is always a checkpoint).
    """
    validate_schedule(schedule, problem.constants)
    if schedule.theorem != MANUAL and schedule.algorithm_family() != "sm":
        raise ScheduleError(f"schedule {schedule.theorem!r} is not a subgradient-method schedule")
    if lyapunov_at_checkpoints and not schedule.rho > problem.constants.ell:
        raise ScheduleError("envelope weight rho must exceed ell to certify runs")
    x0 = _start_point(problem, x0)
    cp_ts = _checkpoint_iters(schedule.T, checkpoints)
    eng = _select_engine(problem, engine)
    x, snaps = _sgd_engine(problem, x0, schedule.eta, schedule.T, schedule.batch,
                           cp_ts, rs.generator, eng)
    records = _make_records(problem, schedule, x0, cp_ts, snaps,
                            lyapunov_at_checkpoints, inner_tol,
                            samples_of=lambda t: t * schedule.batch)
    return x, records


def run_psgd(problem: HiddenConvexProblem, schedule: Schedule, rs: RandomSource,
             checkpoints=100, lyapunov_at_checkpoints: bool = True,
             inner_tol: float = 1e-8, x0=None, engine: str | None = None):
    """Projected SGD for smooth problems; batch > 1 averages fresh draws."""
    if not problem.is_smooth:
        raise DomainError("projected SGD needs a differentiable objective")
    validate_schedule(schedule, problem.constants)
    if schedule.theorem != MANUAL and schedule.algorithm_family() != "psgd":
        raise ScheduleError(f"schedule {schedule.theorem!r} is not a projected-SGD schedule")
    x0 = _start_point(problem, x0)
    cp_ts = _checkpoint_iters(schedule.T, checkpoints)
    eng = _select_engine(problem, engine)
    x, snaps = _sgd_engine(problem, x0, schedule.eta, schedule.T, schedule.batch,
                           cp_ts, rs.generator, eng)
    records = _make_records(problem, schedule, x0, cp_ts, snaps,
                            lyapunov_at_checkpoints, inner_tol,
                            samples_of=lambda t: t * schedule.batch)
    return x, records


def run_psgdm(problem: HiddenConvexProblem, schedule: Schedule, rs: RandomSource,
              checkpoints=100, lyapunov_at_checkpoints: bool = True,
              x0=None, engine: str | None = None):
    """Projected SGD with heavy-ball momentum.

    The gradient estimate is initialized with one stochastic draw at the
    start point, then folded with weight ``beta``; exactly one oracle call
    per iteration.  Returns (final iterate, final estimate, records); the
    records carry the squared estimate error at checkpoints.
    """
    if not problem.is_smooth:
        raise DomainError("momentum method needs a differentiable objective")
    validate_schedule(schedule, problem.constants)
    if schedule.theorem != MANUAL and schedule.algorithm_family() != "psgdm":
        raise ScheduleError(f"schedule {schedule.theorem!r} is not a momentum schedule")
    if schedule.beta is None:
        raise ScheduleError("momentum schedule needs beta")
    if schedule.batch != 1:
        raise ScheduleError("the momentum method uses exactly one draw per iteration")
    x0 = _start_point(problem, x0)
    cp_ts = _checkpoint_iters(schedule.T, checkpoints)
    eng = _select_engine(problem, engine)
    # The initial estimate is one stochastic draw at the start point; drawing
    # it here keeps the stream position identical across engines.
    g0 = np.asarray(problem.stochastic_oracle(x0, rs.generator), dtype=float)
    x, g, xs, gs = _momentum_engine(problem, x0, g0, schedule.eta, schedule.beta,
                                    schedule.T, cp_ts, rs.generator, eng)
    records = _make_records(problem, schedule, x0, cp_ts, snaps=xs,
                            lyapunov=lyapunov_at_checkpoints, inner_tol=0.0,
                            samples_of=lambda t: t + 1, g_snaps=gs, g0=g0)
    return x, g, records


def post_batch_size(constants: ConstantBundle, epsilon: float) -> int:
    """Batch size of the one-step averaged-gradient post-processing."""
    constants.require("G_F", "L", "sigma")
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if constants.sigma == 0:
        return 1
    bound = (constants.G_F * constants.sigma / (3.0 * constants.L * epsilon)) ** 2
    return max(1, math.ceil(bound))


def postprocess_minibatch(problem: HiddenConvexProblem, x_T, rs: RandomSource,
                          epsilon: float) -> np.ndarray:
    """One projected averaged-gradient step converting envelope accuracy
    into function-value accuracy: ``proj(x - mean of B0 draws / (3 L))``."""
    if not problem.is_smooth:
        raise DomainError("post-processing needs a differentiable objective")
    c = problem.constants
    B0 = post_batch_size(c, epsilon)
    x = _start_point(problem, x_T)
    acc = np.zeros_like(x)
    for _ in range(B0):
        acc += problem.stochastic_oracle(x, rs.generator)
    return geometry.project(problem.feasible_set, x - acc / (B0 * 3.0 * c.L))
