"""Euclidean projections onto the convex feasible sets used by the algorithms.

Supported set kinds: axis-aligned boxes (uniform or per-coordinate bounds),
Euclidean balls, and the positive simplex.  Boxes additionally support a
closed-form normal-cone distance used as the stationarity measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasiblePointError, UnsupportedOperationError

FEASIBILITY_TOL = 1e-12

BOX_KINDS = ("box", "product_of_intervals")


@dataclass(frozen=True)
class FeasibleSet:
    """Description of a closed convex set.

    ``lower``/``upper`` are per-coordinate bounds for box kinds; ``center``
    and ``radius`` describe a ball; ``scale`` is the simplex right-hand side.
    """

    kind: str
    dim: int
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    center: np.ndarray | None = None
    radius: float | None = None
    scale: float | None = None

    def __post_init__(self):
        if self.kind in BOX_KINDS:
            if self.lower is None or self.upper is None:
                raise DomainError("box sets need lower and upper bounds")
            if not np.all(self.lower < self.upper):
                raise DomainError("box bounds must satisfy lower < upper strictly")
        elif self.kind == "ball":
            if self.radius is None or self.radius <= 0:
                raise DomainError("ball radius must be positive")
        elif self.kind == "simplex":
            if self.scale is None or self.scale <= 0:
                raise DomainError("simplex scale must be positive")
        else:
            raise DomainError(f"unknown set kind {self.kind!r}")


def box(lower, upper) -> FeasibleSet:
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if lower.shape != upper.shape:
        raise DomainError("lower and upper bounds must have equal length")
    return FeasibleSet(kind="box", dim=lower.size, lower=lower, upper=upper)


def intervals(lower, upper) -> FeasibleSet:
    """Product of per-coordinate intervals (same geometry as a box)."""
    b = box(lower, upper)
    return FeasibleSet(kind="product_of_intervals", dim=b.dim, lower=b.lower, upper=b.upper)


def ball(center, radius: float) -> FeasibleSet:
    center = np.atleast_1d(np.asarray(center, dtype=float))
    return FeasibleSet(kind="ball", dim=center.size, center=center, radius=float(radius))


def simplex(dim: int, scale: float = 1.0) -> FeasibleSet:
    return FeasibleSet(kind="simplex", dim=int(dim), scale=float(scale))


def project(s: FeasibleSet, y) -> np.ndarray:
    """Euclidean projection of ``y`` onto the set.

    Nonexpansive and idempotent; total for finite inputs.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if not np.all(np.isfinite(y)):
        raise DomainError("cannot project a non-finite point")
    if s.kind in BOX_KINDS:
        return np.clip(y, s.lower, s.upper)
    if s.kind == "ball":
        dev = y - s.center
        nrm = float(np.linalg.norm(dev))
        if nrm <= s.radius:
            return y.copy()
        return s.center + dev * (s.radius / nrm)
    if s.kind == "simplex":
        return _project_simplex(y, s.scale)
    raise UnsupportedOperationError(f"projection not implemented for {s.kind!r}")


def _project_simplex(y: np.ndarray, scale: float) -> np.ndarray:
    # Sort-and-threshold algorithm, O(d log d).
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - scale
    idx = np.arange(1, y.size + 1)
    rho = np.nonzero(u * idx > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def contains(s: FeasibleSet, x, tol: float = FEASIBILITY_TOL) -> bool:
    """Membership test with absolute tolerance ``tol``."""
    return violation(s, x, tol) is None


def violation(s: FeasibleSet, x, tol: float = FEASIBILITY_TOL) -> str | None:
    """Human-readable description of the violated constraint, or None."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != s.dim:
        return f"point has dimension {x.size}, set has dimension {s.dim}"
    if s.kind in BOX_KINDS:
        low = x - s.lower
        high = s.upper - x
        i = int(np.argmin(low))
        if low[i] < -tol:
            return f"x[{i}] = {x[i]!r} below lower bound {s.lower[i]!r}"
        j = int(np.argmin(high))
        if high[j] < -tol:
            return f"x[{j}] = {x[j]!r} above upper bound {s.upper[j]!r}"
        return None
    if s.kind == "ball":
        excess = float(np.linalg.norm(x - s.center)) - s.radius
        if excess > tol:
            return f"point lies {excess!r} outside ball of radius {s.radius!r}"
        return None
    if s.kind == "simplex":
        if np.min(x) < -tol:
            i = int(np.argmin(x))
            return f"x[{i}] = {x[i]!r} negative on simplex"
        gap = abs(float(np.sum(x)) - s.scale)
        if gap > tol * max(1.0, s.scale):
            return f"coordinates sum to {float(np.sum(x))!r}, expected {s.scale!r}"
        return None
    raise UnsupportedOperationError(f"membership not implemented for {s.kind!r}")


def require_member(s: FeasibleSet, x, tol: float = FEASIBILITY_TOL) -> None:
    msg = violation(s, x, tol)
    if msg is not None:
        raise InfeasiblePointError(msg)


def stationarity_measure(s: FeasibleSet, x, g, tol: float = FEASIBILITY_TOL) -> float:
    """Distance from the origin to ``g + N(x)``, the gradient plus normal cone.

    Equals ``||g||`` at interior points and vanishes exactly at first-order
    stationary points.  Closed form per coordinate on box sets; other kinds
    raise :class:`UnsupportedOperationError`.
    """
    if s.kind not in BOX_KINDS:
        raise UnsupportedOperationError(
            f"stationarity measure has closed form only on box sets, not {s.kind!r}"
        )
    x = np.atleast_1d(np.asarray(x, dtype=float))
    g = np.atleast_1d(np.asarray(g, dtype=float))
    require_member(s, x, tol)
    res = np.abs(g).astype(float)
    at_lower = x <= s.lower + tol
    at_upper = x >= s.upper - tol
    # Lower face absorbs nonpositive normal directions, upper face nonnegative.
    res[at_lower] = np.maximum(-g[at_lower], 0.0)
    res[at_upper] = np.maximum(g[at_upper], 0.0)
    return float(np.linalg.norm(res))


def sample_uniform(s: FeasibleSet, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Uniform samples from a box set; used by diagnostics and x0 policies."""
    if s.kind not in BOX_KINDS:
        raise UnsupportedOperationError(f"uniform sampling only on box sets, not {s.kind!r}")
    if n is None:
        return s.lower + rng.random(s.dim) * (s.upper - s.lower)
    return s.lower + rng.random((n, s.dim)) * (s.upper - s.lower)
