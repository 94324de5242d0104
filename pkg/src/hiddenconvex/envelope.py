"""Proximal mapping and Moreau envelope of the constrained objective.

With ``Phi = F + (indicator of X)`` and a smoothing weight ``rho`` above the
weak-convexity modulus, the subproblem

    min over y in X of  F(y) + (rho/2) ||y - x||^2

is ``(rho - ell)``-strongly convex.  Its value is the envelope, its
minimizer the prox point, and the envelope's gap to the optimal value is
the certificate the projected-method guarantees control.  The heavy-ball
variant trades the envelope for the function-value gap plus a scaled
gradient-estimate error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .core import HiddenConvexProblem
from .errors import (ConvergenceFailureError, DomainError,
                     InternalConsistencyError, UnsupportedOperationError)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class ProxResult:
    """Prox point with its envelope value and optimality certificates.

    ``fixed_point_residual`` is the defect of the projected fixed-point
    identity the prox point must satisfy,
    ``x_hat = proj(x - grad F(x_hat) / rho)``, evaluated at the returned
    approximation.  It is reported, never hidden.
    """

    x_hat: np.ndarray
    envelope_value: float
    fixed_point_residual: float
    inner_iters: int


def _fixed_point_residual(problem, x, x_hat, rho):
    g_hat = problem.det_gradient(x_hat)
    target = geometry.project(problem.feasible_set, x - g_hat / rho)
    return float(np.linalg.norm(x_hat - target))


def prox(problem: HiddenConvexProblem, x, rho: float, inner_tol: float = 1e-8,
         max_inner: int = 10 ** 6) -> ProxResult:
    """Approximate prox point of ``F + indicator(X)`` with weight ``rho``.

    The returned point is within ``inner_tol`` of the true minimizer,
    certified through strong convexity of the subproblem.  Smooth problems
    use a projected-gradient inner solver with step ``1/(rho + L)`` whose
    prox-gradient mapping certifies the distance; non-smooth problems use
    a projected subgradient method with decaying steps and weighted
    averaging, certified by its worst-case rate.

    Raises
    ------
    DomainError
        If ``rho <= ell`` (subproblem may be nonconvex).
    ConvergenceFailureError
        If the iteration budget cannot certify ``inner_tol``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    geometry.require_member(problem.feasible_set, x)
    ell = problem.constants.ell
    if not rho > ell:
        raise DomainError(f"need rho > ell for a strongly convex subproblem; "
                          f"got rho = {rho}, ell = {ell}")
    m = rho - ell

    if problem.is_smooth:
        L_psi = problem.constants.L + rho
        tau = 1.0 / L_psi
        y = x.copy()
        iters = 0
        while True:
            grad_psi = problem.det_gradient(y) + rho * (y - x)
            y_next = geometry.project(problem.feasible_set, y - tau * grad_psi)
            iters += 1
            # ||y+ - prox|| <= (1/tau + L_psi) ||y - y+|| / m = 2 ||y - y+|| / (tau m).
            cert = 2.0 * float(np.linalg.norm(y - y_next)) / (tau * m)
            y = y_next
            if cert <= inner_tol:
                break
            if iters >= max_inner:
                raise ConvergenceFailureError(
                    f"prox inner solver exhausted {max_inner} iterations "
                    f"(certified distance {cert:.3e} > tol {inner_tol:.3e})",
                    best_residual=cert, iterations=iters)
        x_hat = y
    else:
        x_hat, iters = _prox_subgradient(problem, x, rho, m, inner_tol, max_inner)

    env = problem.objective(x_hat) + 0.5 * rho * float(np.sum((x_hat - x) ** 2))
    return ProxResult(
        x_hat=x_hat,
        envelope_value=env,
        fixed_point_residual=_fixed_point_residual(problem, x, x_hat, rho),
        inner_iters=iters,
    )


def _prox_subgradient(problem, x, rho, m, inner_tol, max_inner):
    # Worst-case subgradient bound of the subproblem over X.
    s = problem.feasible_set
    if s.kind not in geometry.BOX_KINDS:
        raise UnsupportedOperationError(
            "non-smooth prox solver needs a box feasible set")
    diam = float(np.linalg.norm(s.upper - s.lower))
    g_bound = (problem.constants.G_F or 0.0) + rho * diam
    # Weighted-average subgradient descent reaches ||avg - prox||^2 <=
    # 4 G^2 / (m^2 (K + 1)); solve for the budget that certifies inner_tol.
    needed = int(math.ceil(4.0 * g_bound ** 2 / (m * m * inner_tol * inner_tol)))
    if needed > max_inner:
        certified = 2.0 * g_bound / (m * math.sqrt(max_inner + 1.0))
        raise ConvergenceFailureError(
            f"non-smooth prox needs {needed} iterations to certify "
            f"{inner_tol:.3e}; budget {max_inner} certifies only {certified:.3e}",
            best_residual=certified, iterations=max_inner)
    y = x.copy()
    acc = np.zeros_like(y)
    wsum = 0.0
    for k in range(needed):
        g = problem.det_gradient(y) + rho * (y - x)
        step = 2.0 / (m * (k + 2.0))
        y = geometry.project(s, y - step * g)
        w = k + 1.0
        acc += w * y
        wsum += w
    return acc / wsum, needed


def prox_reference_1d(problem: HiddenConvexProblem, x, rho: float,
                      tol: float = 1e-11) -> np.ndarray:
    """Golden-section prox oracle for one-dimensional problems.

    Independent of the inner solver: pure bracketing on the strongly
    convex (hence unimodal) subproblem.
    """
    if problem.dim != 1:
        raise UnsupportedOperationError("reference prox oracle is 1-D only")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = problem.feasible_set
    a, b = float(s.lower[0]), float(s.upper[0])

    def psi(y):
        return problem.objective(np.array([y])) + 0.5 * rho * (y - x[0]) ** 2

    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = psi(c), psi(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = psi(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = psi(d)
    return np.array([(a + b) / 2.0])


def moreau_lyapunov(problem: HiddenConvexProblem, x, rho: float,
                    inner_tol: float = 1e-8) -> float:
    """Envelope gap ``Phi_{1/rho}(x) - F*``: the certificate driven to zero
    by the projected (sub-)gradient methods.  Nonnegative up to the inner
    tolerance and zero exactly at optimizers."""
    return prox(problem, x, rho, inner_tol=inner_tol).envelope_value - problem.constants.F_star


def momentum_lyapunov(problem: HiddenConvexProblem, x, g, eta: float,
                      beta: float) -> float:
    """Heavy-ball certificate ``F(x) - F* + (eta/beta) ||g - grad F(x)||^2``
    for one realization of the gradient estimate ``g``."""
    if not problem.is_smooth:
        raise UnsupportedOperationError(
            "heavy-ball certificate needs a differentiable objective")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    g = np.atleast_1d(np.asarray(g, dtype=float))
    err = g - problem.det_gradient(x)
    gap = problem.objective(x) - problem.constants.F_star
    return float(gap + (eta / beta) * np.sum(err * err))


def blend_with_optimum(problem: HiddenConvexProblem, x, x_star, alpha: float) -> np.ndarray:
    """Pull ``x`` toward ``x_star`` by interpolating in the transformed
    space: ``c^{-1}((1 - alpha) c(x) + alpha c(x_star))``.

    Returns ``x`` at ``alpha = 0`` and ``x_star`` at ``alpha = 1`` up to the
    round-trip tolerance of the maps.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1]")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_star = np.atleast_1d(np.asarray(x_star, dtype=float))
    u = (1.0 - alpha) * problem.forward_map(x) + alpha * problem.forward_map(x_star)
    try:
        return problem.inverse_map(u)
    except DomainError as exc:
        raise InternalConsistencyError(
            f"transformed blend left the image set, which a convex image "
            f"rules out: {exc}") from exc
