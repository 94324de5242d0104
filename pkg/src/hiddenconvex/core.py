"""Problem abstraction, oracle contracts, and per-iteration telemetry.

A :class:`HiddenConvexProblem` bundles the objective ``F`` on a feasible set
``X`` together with the invertible transformation ``c`` whose image turns the
problem into a convex one: ``F(x) = H(c(x))`` with ``H`` convex on ``c(X)``.
The :class:`ConstantBundle` carries the moduli that the step-size schedules
and convergence certificates consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import geometry
from .errors import ConfigurationError, DomainError
from .rng import RandomSource

SMOOTH = "smooth"
NONSMOOTH = "weakly_convex_nonsmooth"


@dataclass(frozen=True)
class ConstantBundle:
    """Structural and regularity constants of one problem instance.

    mu_c
        Expansion modulus of the transformation map:
        ``||c(x) - c(y)|| >= mu_c * ||x - y||``.  Must be positive; its
        reciprocal is the Lipschitz constant of the inverse map.
    mu_H
        Strong-convexity modulus of the reformulation ``H`` (0 when merely
        convex).  Positive ``mu_H`` makes the minimizer unique.
    ell
        Weak-convexity modulus of ``F`` (``F + ell/2 ||.||^2`` is convex).
    L
        Lipschitz constant of the gradient of ``F``; ``None`` for
        non-smooth problems.
    G_F
        Bound with ``E||g||^2 <= G_F^2`` for the stochastic subgradient
        oracle; required by the subgradient-method schedules.
    sigma
        Standard-deviation bound on the full-vector gradient noise,
        ``E||g - grad F||^2 <= sigma^2``; required by the smooth schedules.
    D_U
        Diameter of the transformed domain ``c(X)`` (may be ``inf``).
    F_star, x_star
        Optimal value and one optimal point.
    """

    mu_c: float
    mu_H: float
    ell: float
    F_star: float
    x_star: np.ndarray
    L: float | None = None
    G_F: float | None = None
    sigma: float | None = None
    D_U: float = math.inf

    def __post_init__(self):
        if not self.mu_c > 0:
            raise DomainError("mu_c must be strictly positive")
        if self.mu_H < 0 or self.ell < 0:
            raise DomainError("mu_H and ell must be nonnegative")
        if self.L is not None and self.L < 0:
            raise DomainError("L must be nonnegative")
        if self.G_F is not None and not self.G_F > 0:
            raise DomainError("G_F must be positive when present")
        if self.sigma is not None and self.sigma < 0:
            raise DomainError("sigma must be nonnegative when present")
        if not self.D_U > 0:
            raise DomainError("D_U must be positive")
        object.__setattr__(self, "x_star", np.atleast_1d(np.asarray(self.x_star, dtype=float)))

    def require(self, *names: str) -> None:
        """Raise :class:`ConfigurationError` naming the first missing symbol."""
        for name in names:
            if getattr(self, name, None) is None:
                raise ConfigurationError(f"constant {name!r} is required but absent")


@dataclass(frozen=True)
class HiddenConvexProblem:
    """Objective, oracles, maps, and constants of one problem instance.

    Values and constants are immutable after construction and safe to share
    across concurrent runs; each run owns its :class:`RandomSource`.
    """

    name: str
    dim: int
    objective: Callable[[np.ndarray], float]
    det_gradient: Callable[[np.ndarray], np.ndarray]
    stochastic_oracle: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    feasible_set: geometry.FeasibleSet
    forward_map: Callable[[np.ndarray], np.ndarray]
    inverse_map: Callable[[np.ndarray], np.ndarray]
    reformulation: Callable[[np.ndarray], float]
    constants: ConstantBundle
    smoothness_class: str
    x0_default: np.ndarray
    notes: str = ""
    # Parameter pack consumed by the compiled iteration kernels; None means
    # the generic (pure Python/numpy) engine is the only path.
    kernel_spec: object | None = None

    def __post_init__(self):
        if self.smoothness_class not in (SMOOTH, NONSMOOTH):
            raise DomainError(f"unknown smoothness class {self.smoothness_class!r}")
        if self.smoothness_class == SMOOTH and self.constants.L is None:
            raise DomainError("smooth problems must declare L")
        object.__setattr__(
            self, "x0_default", np.atleast_1d(np.asarray(self.x0_default, dtype=float))
        )

    @property
    def is_smooth(self) -> bool:
        return self.smoothness_class == SMOOTH


@dataclass
class IterationRecord:
    """Telemetry at one logging checkpoint of a run."""

    t: int
    f_value: float
    dist_to_opt_sq: float
    wall_samples: int
    lyapunov: float | None = None
    grad_err_sq: float | None = None


def _as_point(problem: HiddenConvexProblem, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    geometry.require_member(problem.feasible_set, x)
    return x


def eval_objective(problem: HiddenConvexProblem, x) -> float:
    """Exact objective value at a feasible point."""
    return float(problem.objective(_as_point(problem, x)))


def eval_det_gradient(problem: HiddenConvexProblem, x) -> np.ndarray:
    """Deterministic (sub-)gradient at a feasible point."""
    return np.asarray(problem.det_gradient(_as_point(problem, x)), dtype=float)


def sample_stochastic_gradient(
    problem: HiddenConvexProblem, x, rs: RandomSource
) -> np.ndarray:
    """One unbiased stochastic (sub-)gradient draw at a feasible point."""
    x = _as_point(problem, x)
    return np.asarray(problem.stochastic_oracle(x, rs.generator), dtype=float)


def map_forward(problem: HiddenConvexProblem, x) -> np.ndarray:
    """Transformed point ``c(x)`` for feasible ``x``."""
    return np.asarray(problem.forward_map(_as_point(problem, x)), dtype=float)


def map_inverse(problem: HiddenConvexProblem, u) -> np.ndarray:
    """Original-space point ``c^{-1}(u)``; domain errors propagate."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return np.asarray(problem.inverse_map(u), dtype=float)
