"""Built-in hidden-convex test problems with explicit transformations.

Every builder returns a :class:`~hiddenconvex.core.HiddenConvexProblem`
whose transformation map, inverse, and convex reformulation are closed
form, and whose constants are either derived analytically or certified
numerically at build time (in which case the derivation notes say so and a
safety factor is applied).  Objectives are exact expectations; Monte Carlo
enters only through the stochastic oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import minimize

from . import geometry, kernels
from .core import NONSMOOTH, SMOOTH, ConstantBundle, HiddenConvexProblem
from .errors import ConfigurationError, DomainError

# Numeric constant certification at build time is deterministic.
_BUILD_SEED = 0x5EED
_INV_TOL = 1e-9


def _additive_oracle(det_gradient, sigma, dim):
    """Gradient plus isotropic Gaussian noise; draws nothing when sigma=0.

    Consumes exactly ``dim`` standard normals per call, matching the
    compiled kernel's per-coordinate draws.
    """

    if sigma == 0.0:
        def oracle(x, rng):
            return det_gradient(x)
    else:
        def oracle(x, rng):
            return det_gradient(x) + sigma * rng.standard_normal(dim)
    return oracle


def _poly_range(p: Polynomial, lo: float, hi: float) -> tuple[float, float]:
    """Exact (min, max) of a polynomial over [lo, hi] via critical points."""
    cands = [lo, hi]
    der = p.deriv()
    if der.degree() >= 1:
        for r in der.roots():
            if abs(r.imag) < 1e-9 and lo <= r.real <= hi:
                cands.append(float(r.real))
    vals = p(np.asarray(cands))
    return float(np.min(vals)), float(np.max(vals))


# ---------------------------------------------------------------------------
# Interval toy: concave objective, linear reformulation after squaring.
# ---------------------------------------------------------------------------

def build_neg_square(delta: float, sigma: float = 0.0) -> HiddenConvexProblem:
    """Concave toy ``F(x) = -x^2`` on ``[delta, 1]``.

    The squaring map ``c(x) = x^2`` linearizes the objective:
    ``H(u) = -u`` on ``U = [delta^2, 1]``.  Parameters: ``delta`` in (0, 1]
    scales the expansion modulus ``mu_c = 2*delta`` (difference of squares
    factors as ``(x+y)(x-y)`` with ``x+y >= 2*delta``); ``sigma`` is the
    additive gradient noise level.
    """
    if not 0.0 < delta <= 1.0:
        raise DomainError("delta must lie in (0, 1]")
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    lo, hi = delta, 1.0
    dsq = delta * delta

    def objective(x):
        return -float(x[0]) ** 2

    def det_gradient(x):
        return np.array([-2.0 * x[0]])

    def forward(x):
        return np.array([x[0] ** 2])

    def inverse(u):
        if u[0] < dsq - _INV_TOL or u[0] > 1.0 + _INV_TOL:
            raise DomainError(f"u = {u[0]!r} outside transformed interval [{dsq}, 1]")
        return np.array([math.sqrt(min(max(u[0], dsq), 1.0))])

    def reformulation(u):
        return -float(u[0])

    constants = ConstantBundle(
        mu_c=2.0 * delta,
        mu_H=0.0,
        ell=2.0,
        L=2.0,
        G_F=2.0 + sigma,
        sigma=sigma,
        D_U=1.0 - dsq,
        F_star=-1.0,
        x_star=np.array([1.0]),
    )
    return HiddenConvexProblem(
        name="neg_square",
        dim=1,
        objective=objective,
        det_gradient=det_gradient,
        stochastic_oracle=_additive_oracle(det_gradient, sigma, 1),
        feasible_set=geometry.box([lo], [hi]),
        forward_map=forward,
        inverse_map=inverse,
        reformulation=reformulation,
        constants=constants,
        smoothness_class=SMOOTH,
        x0_default=np.array([(delta + 1.0) / 2.0]),
        notes=(
            "mu_c = 2*delta from |x^2-y^2| = (x+y)|x-y| >= 2*delta*|x-y|; "
            "ell = L = 2 from F'' = -2; G_F = 2 + sigma bounds "
            "sqrt(max|F'|^2 + sigma^2); D_U = 1 - delta^2 is the exact image width."
        ),
        kernel_spec=kernels.KernelSpec(
            grad_kind=kernels.GRAD_NEG_SQUARE,
            oracle_kind=kernels.ORACLE_ADDITIVE,
            noise=sigma,
        ),
    )


# ---------------------------------------------------------------------------
# Cosine toy: strongly convex reformulation through the half-angle map.
# ---------------------------------------------------------------------------

def build_cosine(delta: float, sigma: float = 0.0) -> HiddenConvexProblem:
    """Oscillatory toy ``F(x) = cos(x)`` on ``[delta, 2*pi - delta]``.

    The half-angle map ``c(x) = cos(x/2)`` is strictly monotone on the
    interval and ``H(u) = 2u^2 - 1`` recovers the double-angle identity,
    so the reformulation is 4-strongly convex.  ``mu_c = sin(delta/2)/2``
    is the minimum of ``|c'|``.
    """
    if not 0.0 < delta < math.pi:
        raise DomainError("delta must lie in (0, pi)")
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    lo, hi = delta, 2.0 * math.pi - delta
    umax = math.cos(delta / 2.0)

    def objective(x):
        return math.cos(x[0])

    def det_gradient(x):
        return np.array([-math.sin(x[0])])

    def forward(x):
        return np.array([math.cos(x[0] / 2.0)])

    def inverse(u):
        if abs(u[0]) > umax + _INV_TOL:
            raise DomainError(f"u = {u[0]!r} outside transformed interval [-{umax}, {umax}]")
        return np.array([2.0 * math.acos(min(max(u[0], -1.0), 1.0))])

    def reformulation(u):
        return 2.0 * float(u[0]) ** 2 - 1.0

    constants = ConstantBundle(
        mu_c=math.sin(delta / 2.0) / 2.0,
        mu_H=4.0,
        ell=1.0,
        L=1.0,
        G_F=1.0 + sigma,
        sigma=sigma,
        D_U=2.0 * umax,
        F_star=-1.0,
        x_star=np.array([math.pi]),
    )
    x0 = math.pi / 2.0 if delta <= math.pi / 2.0 else (delta + math.pi) / 2.0
    return HiddenConvexProblem(
        name="cosine",
        dim=1,
        objective=objective,
        det_gradient=det_gradient,
        stochastic_oracle=_additive_oracle(det_gradient, sigma, 1),
        feasible_set=geometry.box([lo], [hi]),
        forward_map=forward,
        inverse_map=inverse,
        reformulation=reformulation,
        constants=constants,
        smoothness_class=SMOOTH,
        x0_default=np.array([x0]),
        notes=(
            "mu_c = sin(delta/2)/2 = min |c'| on the interval; mu_H = 4 from "
            "H'' = 4; ell = L = 1 is the global curvature bound |F''| <= 1 "
            "(declared for every delta); D_U = 2*cos(delta/2) exact."
        ),
        kernel_spec=kernels.KernelSpec(
            grad_kind=kernels.GRAD_COSINE,
            oracle_kind=kernels.ORACLE_ADDITIVE,
            noise=sigma,
        ),
    )


# ---------------------------------------------------------------------------
# Chained quadratic residuals (nonlinear least squares) and its max variant.
# ---------------------------------------------------------------------------

def _chain_jacobians(X: np.ndarray) -> np.ndarray:
    """Batch Jacobians of the smooth chain map, shape (n, d, d)."""
    n, d = X.shape
    J = np.zeros((n, d, d))
    idx = np.arange(d)
    J[:, idx, idx] = 1.0
    if d > 1:
        sub = np.arange(d - 1)
        J[:, sub + 1, sub] = -4.0 * X[:, :-1]
    return J


def _certify_min_gain(jac_batch: Callable[[np.ndarray], np.ndarray],
                      lower: np.ndarray, upper: np.ndarray,
                      n_samples: int, rng: np.random.Generator,
                      safety: float = 0.9) -> float:
    """Smallest sampled singular value of the map Jacobian, times a safety
    factor.  Reported as an empirical expansion modulus; corners of the box
    are always included in the sample."""
    d = lower.size
    X = lower + rng.random((n_samples, d)) * (upper - lower)
    corners = np.array(np.meshgrid(*zip(lower, upper))).T.reshape(-1, d)
    X = np.vstack([X, corners])
    sv = np.linalg.svd(jac_batch(X), compute_uv=False)
    return safety * float(np.min(sv))


def build_rosenbrock_chain(d: int = 2, c_coef: float = 0.5,
                           box_halfwidth: float = 20.0, sigma: float = 0.0,
                           smooth: bool = True) -> HiddenConvexProblem:
    """Chained quadratic-residual problem on the box ``[-a, a]^d``.

    Smooth form: ``F(x) = (x_1-1)^2/4 + c * sum_i (x_{i+1} - 2 x_i^2 - 1)^2``,
    a nonlinear least-squares objective whose residual map is triangular and
    globally invertible; the unique zero of the residuals is the chain point
    ``(1, 3, 19, ...)`` and the builder errors if it escapes the box.

    Max form (``smooth=False``, d=2 only): ``F(x) = max(|x_1-1|/4,
    |2 x_1^2 - x_2 - 1|/2)`` with residuals ``(x_1-1, 2 x_1^2 - x_2 - 1)``
    and minimizer (1, 1).

    The expansion modulus has no closed form on a box; it is certified
    numerically from sampled Jacobian singular values with a 0.9 safety
    factor and reported as empirical in the notes.
    """
    if d < 2:
        raise DomainError("chain problems need dimension >= 2")
    if box_halfwidth <= 0:
        raise DomainError("box halfwidth must be positive")
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    a = float(box_halfwidth)
    lower = np.full(d, -a)
    upper = np.full(d, a)
    rng = np.random.default_rng(_BUILD_SEED)

    if smooth:
        if c_coef <= 0:
            raise DomainError("c_coef must be positive")
        xstar = np.empty(d)
        xstar[0] = 1.0
        for i in range(1, d):
            xstar[i] = 2.0 * xstar[i - 1] ** 2 + 1.0
        if np.max(np.abs(xstar)) > a:
            raise ConfigurationError(
                f"chain solution needs box halfwidth >= {np.max(np.abs(xstar))}, got {a}"
            )

        def forward(x):
            u = np.empty(d)
            u[0] = x[0] - 1.0
            u[1:] = x[1:] - 2.0 * x[:-1] ** 2 - 1.0
            return u

        def inverse(u):
            x = np.empty(d)
            x[0] = u[0] + 1.0
            for i in range(1, d):
                x[i] = u[i] + 2.0 * x[i - 1] ** 2 + 1.0
            return x

        def reformulation(u):
            return 0.25 * float(u[0]) ** 2 + c_coef * float(np.sum(u[1:] ** 2))

        def objective(x):
            return reformulation(forward(x))

        def det_gradient(x):
            u = forward(x)
            dq = np.concatenate(([0.5 * u[0]], 2.0 * c_coef * u[1:]))
            g = dq.copy()
            g[:-1] += dq[1:] * (-4.0 * x[:-1])
            return g

        def hess_batch(X):
            n = X.shape[0]
            U = np.empty_like(X)
            U[:, 0] = X[:, 0] - 1.0
            U[:, 1:] = X[:, 1:] - 2.0 * X[:, :-1] ** 2 - 1.0
            J = _chain_jacobians(X)
            D = np.zeros(d)
            D[0], D[1:] = 0.5, 2.0 * c_coef
            H = np.einsum("nij,j,njk->nik", J.transpose(0, 2, 1), D, J)
            idx = np.arange(d - 1)
            H[:, idx, idx] += -4.0 * (2.0 * c_coef * U[:, 1:])
            return H

        mu_c = _certify_min_gain(_chain_jacobians, lower, upper, 20000, rng)
        Xs = np.vstack([
            lower + rng.random((20000, d)) * (upper - lower),
            np.array(np.meshgrid(*zip(lower, upper))).T.reshape(-1, d),
        ])
        Hs = hess_batch(Xs)
        L = 1.05 * float(np.max(np.abs(np.linalg.eigvalsh(Hs))))
        g_det = 1.05 * float(np.max(np.linalg.norm(
            np.stack([det_gradient(x) for x in Xs[:4000]]), axis=1)))
        widths = np.concatenate(([2 * a], np.full(d - 1, 2 * a + 2 * a * a)))
        constants = ConstantBundle(
            mu_c=mu_c,
            mu_H=min(0.5, 2.0 * c_coef),
            ell=L,
            L=L,
            G_F=g_det + sigma * math.sqrt(d),
            sigma=sigma * math.sqrt(d),
            D_U=float(np.linalg.norm(widths)),
            F_star=0.0,
            x_star=xstar,
        )
        return HiddenConvexProblem(
            name="chain_smooth",
            dim=d,
            objective=objective,
            det_gradient=det_gradient,
            stochastic_oracle=_additive_oracle(det_gradient, sigma, d),
            feasible_set=geometry.box(lower, upper),
            forward_map=forward,
            inverse_map=inverse,
            reformulation=reformulation,
            constants=constants,
            smoothness_class=SMOOTH,
            x0_default=np.zeros(d),
            notes=(
                "mu_c empirical: 0.9 * min sampled Jacobian singular value "
                "(20000 points + box corners); L, G_F sampled with 1.05 "
                "safety factor; ell = L; mu_H = min(1/2, 2c) is the exact "
                "reformulation curvature; D_U is an interval bound on the "
                "residual image (the image of the box is not a product set, "
                "and the inverse recursion is globally defined)."
            ),
            kernel_spec=kernels.KernelSpec(
                grad_kind=kernels.GRAD_CHAIN,
                oracle_kind=kernels.ORACLE_ADDITIVE,
                scal=c_coef,
                noise=sigma,
            ),
        )

    # Max variant (d = 2 only).
    if d != 2:
        raise DomainError("max variant is defined for d = 2 only")
    if a < 1.0:
        raise ConfigurationError("max-variant solution (1, 1) needs box halfwidth >= 1")

    def forward(x):
        return np.array([x[0] - 1.0, 2.0 * x[0] ** 2 - x[1] - 1.0])

    def inverse(u):
        x0 = u[0] + 1.0
        return np.array([x0, 2.0 * x0 ** 2 - 1.0 - u[1]])

    def reformulation(u):
        return max(0.25 * abs(float(u[0])), 0.5 * abs(float(u[1])))

    def objective(x):
        return reformulation(forward(x))

    def det_gradient(x):
        # Subgradient of the first active piece, ties resolved toward the
        # first; a deterministic selection valid at kinks (sign(0) = 0).
        u0 = x[0] - 1.0
        u1 = 2.0 * x[0] ** 2 - x[1] - 1.0
        if 0.25 * abs(u0) >= 0.5 * abs(u1):
            return np.array([0.25 * np.sign(u0), 0.0])
        s = np.sign(u1)
        return np.array([2.0 * s * x[0], -0.5 * s])

    def jac_batch(X):
        n = X.shape[0]
        J = np.zeros((n, 2, 2))
        J[:, 0, 0] = 1.0
        J[:, 1, 0] = 4.0 * X[:, 0]
        J[:, 1, 1] = -1.0
        return J

    mu_c = _certify_min_gain(jac_batch, lower, upper, 20000, rng)
    g_det = max(0.25, 0.5 * math.sqrt(16.0 * a * a + 1.0))
    widths = np.array([2 * a, 2 * a * a + 2 * a])
    constants = ConstantBundle(
        mu_c=mu_c,
        mu_H=0.0,
        ell=2.0,
        L=None,
        G_F=g_det + sigma * math.sqrt(2.0),
        sigma=sigma * math.sqrt(2.0),
        D_U=float(np.linalg.norm(widths)),
        F_star=0.0,
        x_star=np.array([1.0, 1.0]),
    )
    return HiddenConvexProblem(
        name="chain_max",
        dim=2,
        objective=objective,
        det_gradient=det_gradient,
        stochastic_oracle=_additive_oracle(det_gradient, sigma, 2),
        feasible_set=geometry.box(lower, upper),
        forward_map=forward,
        inverse_map=inverse,
        reformulation=reformulation,
        constants=constants,
        smoothness_class=NONSMOOTH,
        x0_default=np.zeros(2),
        notes=(
            "ell = 2 bounds weak convexity by (Lipschitz constant of the "
            "max reformulation = 1/2) * (residual-map smoothness = 4); "
            "subgradient bound |grad| <= sqrt(16 a^2 + 1)/2 on the box; "
            "mu_c empirical as in the smooth chain."
        ),
        kernel_spec=kernels.KernelSpec(
            grad_kind=kernels.GRAD_CHAIN_MAX,
            oracle_kind=kernels.ORACLE_ADDITIVE,
            noise=sigma,
        ),
    )


# ---------------------------------------------------------------------------
# Posynomial minimization: convex after a coordinatewise log change.
# ---------------------------------------------------------------------------

def build_posynomial(coeffs, exponents, lower, upper, sigma: float = 0.0,
                     oracle_mode: str = "additive") -> HiddenConvexProblem:
    """Positive-coefficient sum of monomials on a positive box.

    ``F(x) = sum_k b_k * prod_i x_i^(a_ik)`` with ``b_k > 0``.  The
    coordinatewise log map gives the convex reformulation
    ``H(u) = sum_k b_k exp(a_k . u)`` on the log-box.  ``mu_c`` is the
    reciprocal of the largest upper bound (the log is that strongly
    monotone per coordinate); smoothness constants come from rigorous
    interval bounds on the monomials over the box.

    ``oracle_mode`` selects ``"additive"`` Gaussian noise of level
    ``sigma`` on the exact gradient, or ``"term_sampling"``, which returns
    ``K`` times the gradient of one uniformly drawn monomial.
    """
    b = np.atleast_1d(np.asarray(coeffs, dtype=float))
    A = np.atleast_2d(np.asarray(exponents, dtype=float))
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    K, d = A.shape
    if b.size != K:
        raise DomainError("coeffs and exponents disagree on the number of terms")
    if lower.size != d or upper.size != d:
        raise DomainError("box bounds and exponents disagree on dimension")
    if np.any(b <= 0):
        raise DomainError("posynomial coefficients must be positive")
    if np.any(lower <= 0) or np.any(lower >= upper):
        raise DomainError("need 0 < lower < upper on every coordinate")
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    if oracle_mode not in ("additive", "term_sampling"):
        raise DomainError(f"unknown oracle mode {oracle_mode!r}")

    log_l, log_h = np.log(lower), np.log(upper)

    def monomials(x):
        return b * np.exp(A @ np.log(x))

    def objective(x):
        return float(np.sum(monomials(x)))

    def det_gradient(x):
        return (monomials(x) @ A) / x

    def forward(x):
        return np.log(x)

    def inverse(u):
        if np.any(u < log_l - _INV_TOL) or np.any(u > log_h + _INV_TOL):
            raise DomainError("u outside the log-box image of the feasible set")
        return np.exp(np.clip(u, log_l, log_h))

    def reformulation(u):
        return float(np.sum(b * np.exp(A @ u)))

    # Rigorous interval bounds: each monomial is maximized coordinatewise.
    M = b * np.exp(np.sum(np.maximum(A * log_l, A * log_h), axis=1))
    grad_bound = (M[:, None] * np.abs(A)).sum(axis=0) / lower
    g_det = float(np.linalg.norm(grad_bound))
    Habs = np.einsum("k,ki,kj->ij", M, np.abs(A), np.abs(A))
    Habs[np.arange(d), np.arange(d)] += M @ np.abs(A)
    Habs /= np.outer(lower, lower)
    L = float(np.max(np.linalg.eigvalsh(Habs)))

    if oracle_mode == "additive":
        sig_decl = sigma * math.sqrt(d)
        G_F = g_det + sig_decl
        oracle = _additive_oracle(det_gradient, sigma, d)
        okind, noise = kernels.ORACLE_ADDITIVE, sigma
    else:
        # E||g||^2 <= K * sum_k sup ||grad of term k||^2, interval-bounded.
        per_term = np.linalg.norm(M[:, None] * A / lower, axis=1)
        G_F = math.sqrt(K * float(np.sum(per_term ** 2)))
        sig_decl = G_F

        def oracle(x, rng):
            k = int(rng.integers(0, K))
            return K * b[k] * math.exp(float(A[k] @ np.log(x))) * A[k] / x

        okind, noise = kernels.ORACLE_POSY_TERM, 0.0

    # Reformulation minimum by bounded quasi-Newton in log space, polished
    # with interior Newton steps when the minimizer is strictly inside.
    def h_val_grad(u):
        t = b * np.exp(A @ u)
        return float(np.sum(t)), t @ A

    res = minimize(h_val_grad, 0.5 * (log_l + log_h), jac=True,
                   method="L-BFGS-B", bounds=list(zip(log_l, log_h)),
                   options={"maxiter": 2000, "ftol": 1e-18, "gtol": 1e-12})
    u_star = res.x
    for _ in range(8):
        if np.any(u_star - log_l < 1e-9) or np.any(log_h - u_star < 1e-9):
            break
        t = b * np.exp(A @ u_star)
        grad = t @ A
        hess = np.einsum("k,ki,kj->ij", t, A, A)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
        cand = u_star - step
        if np.any(cand <= log_l) or np.any(cand >= log_h):
            break
        u_star = cand

    x_star = np.exp(u_star)
    constants = ConstantBundle(
        mu_c=1.0 / float(np.max(upper)),
        mu_H=0.0,
        ell=L,
        L=L,
        G_F=G_F,
        sigma=sig_decl,
        D_U=float(np.linalg.norm(log_h - log_l)),
        F_star=float(np.sum(b * np.exp(A @ u_star))),
        x_star=x_star,
    )
    return HiddenConvexProblem(
        name="posynomial",
        dim=d,
        objective=objective,
        det_gradient=det_gradient,
        stochastic_oracle=oracle,
        feasible_set=geometry.box(lower, upper),
        forward_map=forward,
        inverse_map=inverse,
        reformulation=reformulation,
        constants=constants,
        smoothness_class=SMOOTH,
        x0_default=lower.copy(),
        notes=(
            "mu_c = 1/max(upper) from coordinatewise strong monotonicity of "
            "log; L and gradient bounds from monomial interval bounds over "
            "the box (rigorous); ell = L; mu_H declared 0 (convexity only); "
            "optimum solved in log space at build time."
        ),
        kernel_spec=kernels.KernelSpec(
            grad_kind=kernels.GRAD_POSYNOMIAL,
            oracle_kind=okind,
            expo=np.ascontiguousarray(A),
            coef=np.ascontiguousarray(b),
            noise=noise,
        ),
    )


# ---------------------------------------------------------------------------
# Revenue with truncated uniform demand and a quadratic regularizer.
# ---------------------------------------------------------------------------

def build_revenue_truncation(demand_caps, limit: float, prices,
                             regularizer: float = 0.0) -> HiddenConvexProblem:
    """Booking-limit revenue toy with independent uniform demands.

    Decision ``x`` in ``[0, D]^d`` caps the accepted demand ``min(x_i, xi_i)``
    with ``xi_i ~ Uniform[0, b_i]``.  The expected accepted demand
    ``c_i(x) = x_i - x_i^2 / (2 b_i)`` is the variable change; the
    reformulation ``H(u) = -r.u + (lambda/2)||u||^2`` maximizes expected
    revenue with a quadratic regularizer, so ``mu_H = lambda``.  ``D`` must
    stay below every cap, which keeps ``c' >= mu_c = min(1 - D/b_i) > 0``.

    The stochastic oracle is the sample-path derivative for the revenue
    part, ``-r_i * 1{x_i <= xi_i}``, plus a two-independent-samples
    estimator for the regularizer part,
    ``lambda * min(x_i, xi_i) * 1{x_i <= xi'_i}``; the factors are
    independent with means ``c_i(x)`` and ``c_i'(x)``, so the product is
    unbiased for ``lambda * c_i * c_i'``.
    """
    caps = np.atleast_1d(np.asarray(demand_caps, dtype=float))
    r = np.atleast_1d(np.asarray(prices, dtype=float))
    d = caps.size
    lam = float(regularizer)
    D = float(limit)
    if r.size != d:
        raise DomainError("prices and demand caps disagree on dimension")
    if np.any(caps <= 0) or np.any(r <= 0):
        raise DomainError("demand caps and prices must be positive")
    if lam < 0:
        raise DomainError("regularizer must be nonnegative")
    if not 0.0 < D < float(np.min(caps)):
        raise DomainError(
            f"booking limit must satisfy 0 < D < min cap = {float(np.min(caps))}"
        )

    def cmap(x):
        return x - x * x / (2.0 * caps)

    def cprime(x):
        return 1.0 - x / caps

    u_top = cmap(np.full(d, D))

    def forward(x):
        return cmap(x)

    def inverse(u):
        if np.any(u < -_INV_TOL) or np.any(u > u_top + _INV_TOL):
            raise DomainError("u outside the image of the feasible box")
        uc = np.clip(u, 0.0, u_top)
        return caps * (1.0 - np.sqrt(1.0 - 2.0 * uc / caps))

    def reformulation(u):
        return float(-r @ u + 0.5 * lam * (u @ u))

    def objective(x):
        return reformulation(cmap(x))

    def det_gradient(x):
        return (lam * cmap(x) - r) * cprime(x)

    def oracle(x, rng):
        u = rng.random(2 * d)
        xi = caps * u[0::2]
        xip = caps * u[1::2]
        return -r * (x <= xi) + lam * np.minimum(x, xi) * (x <= xip)

    # Exact per-coordinate constants from polynomial ranges over [0, D].
    L_i, ell_i, gdet_sq, g2_max, var_max = [], [], [], [], []
    for i in range(d):
        bi, ri = caps[i], r[i]
        xp = Polynomial([0.0, 1.0])
        c = Polynomial([0.0, 1.0, -1.0 / (2.0 * bi)])
        cp = Polynomial([1.0, -1.0 / bi])
        fp = (lam * c - ri) * cp
        fpp = fp.deriv()
        lo_pp, hi_pp = _poly_range(fpp, 0.0, D)
        L_i.append(max(abs(lo_pp), abs(hi_pp)))
        ell_i.append(max(0.0, -lo_pp))
        lo_p, hi_p = _poly_range(fp, 0.0, D)
        gdet_sq.append(max(lo_p * lo_p, hi_p * hi_p))
        msq = xp * xp - 2.0 * xp ** 3 / (3.0 * bi)  # E[min(x, xi)^2]
        eg2 = cp * (ri * ri) - 2.0 * ri * lam * xp * cp * cp + lam * lam * cp * msq
        g2_max.append(_poly_range(eg2, 0.0, D)[1])
        var = eg2 - (cp * (lam * c - ri)) ** 2
        var_max.append(max(0.0, _poly_range(var, 0.0, D)[1]))

    if lam > 0:
        u_star = np.clip(r / lam, 0.0, u_top)
    else:
        u_star = u_top.copy()
    x_star = caps * (1.0 - np.sqrt(1.0 - 2.0 * u_star / caps))
    constants = ConstantBundle(
        mu_c=float(np.min(cprime(np.full(d, D)))),
        mu_H=lam,
        ell=float(np.max(ell_i)),
        L=float(np.max(L_i)),
        G_F=math.sqrt(float(np.sum(g2_max))),
        sigma=math.sqrt(float(np.sum(var_max))),
        D_U=float(np.linalg.norm(u_top)),
        F_star=reformulation(u_star),
        x_star=x_star,
    )
    return HiddenConvexProblem(
        name="revenue",
        dim=d,
        objective=objective,
        det_gradient=det_gradient,
        stochastic_oracle=oracle,
        feasible_set=geometry.box(np.zeros(d), np.full(d, D)),
        forward_map=forward,
        inverse_map=inverse,
        reformulation=reformulation,
        constants=constants,
        smoothness_class=SMOOTH,
        x0_default=np.zeros(d),
        notes=(
            "c is the exact truncated-uniform mean; mu_c = min c'(D); the "
            "objective is separable so L, ell, gradient and second-moment "
            "bounds are exact polynomial ranges over [0, D]; sigma^2 sums "
            "the exact per-coordinate worst-case oracle variances; the "
            "optimum solves the regularized linear reformulation in closed "
            "form (clipped to the image box)."
        ),
        kernel_spec=kernels.KernelSpec(
            grad_kind=kernels.GRAD_REVENUE,
            oracle_kind=kernels.ORACLE_REVENUE,
            cap=np.ascontiguousarray(caps),
            price=np.ascontiguousarray(r),
            scal=lam,
            noise=0.0,
        ),
    )


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemCatalogEntry:
    """A named builder with default parameters and a parameter schema."""

    name: str
    builder: Callable[..., HiddenConvexProblem]
    defaults: dict
    schema: dict
    doc: str

    def build(self, **overrides) -> HiddenConvexProblem:
        unknown = set(overrides) - set(self.schema)
        if unknown:
            raise ConfigurationError(
                f"unknown parameter(s) {sorted(unknown)} for problem {self.name!r}; "
                f"known: {sorted(self.schema)}"
            )
        params = {**self.defaults, **overrides}
        return self.builder(**params)


def _posy_1d(**kw):
    return build_posynomial(coeffs=[1.0, 1.0], exponents=[[1.0], [-1.0]], **kw)


def _posy_3d(**kw):
    expo = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, -1, -1]]
    return build_posynomial(coeffs=[1.0] * 4, exponents=expo, **kw)


CATALOG: dict[str, ProblemCatalogEntry] = {}


def _register(entry: ProblemCatalogEntry) -> None:
    CATALOG[entry.name] = entry


_register(ProblemCatalogEntry(
    name="neg_square",
    builder=build_neg_square,
    defaults={"delta": 0.1, "sigma": 0.5},
    schema={"delta": float, "sigma": float},
    doc="Concave square on [delta, 1]; linear reformulation.",
))
_register(ProblemCatalogEntry(
    name="cosine",
    builder=build_cosine,
    defaults={"delta": math.pi / 2.0, "sigma": 0.5},
    schema={"delta": float, "sigma": float},
    doc="Cosine on [delta, 2pi - delta]; 4-strongly-convex reformulation.",
))
_register(ProblemCatalogEntry(
    name="chain_smooth",
    builder=build_rosenbrock_chain,
    defaults={"d": 2, "c_coef": 0.5, "box_halfwidth": 4.0, "sigma": 0.1, "smooth": True},
    schema={"d": int, "c_coef": float, "box_halfwidth": float, "sigma": float, "smooth": bool},
    doc="Chained quadratic residuals (nonlinear least squares) on a box.",
))
_register(ProblemCatalogEntry(
    name="chain_max",
    builder=lambda **kw: build_rosenbrock_chain(d=2, smooth=False, **kw),
    defaults={"box_halfwidth": 2.0, "sigma": 0.1},
    schema={"box_halfwidth": float, "sigma": float},
    doc="Non-smooth max-of-residuals chain variant (d = 2).",
))
_register(ProblemCatalogEntry(
    name="posynomial_1d",
    builder=_posy_1d,
    defaults={"lower": [0.5], "upper": [2.0], "sigma": 0.1, "oracle_mode": "additive"},
    schema={"lower": list, "upper": list, "sigma": float, "oracle_mode": str},
    doc="x + 1/x on [0.5, 2]; optimum 2 at x = 1.",
))
_register(ProblemCatalogEntry(
    name="posynomial_3d",
    builder=_posy_3d,
    defaults={"lower": [0.7] * 3, "upper": [1.3] * 3, "sigma": 0.02,
              "oracle_mode": "additive"},
    schema={"lower": list, "upper": list, "sigma": float, "oracle_mode": str},
    doc="x1 + x2 + x3 + 1/(x1 x2 x3); optimum 4 at (1, 1, 1).",
))
_register(ProblemCatalogEntry(
    name="revenue_1d",
    builder=build_revenue_truncation,
    defaults={"demand_caps": [2.0], "limit": 1.5, "prices": [1.0], "regularizer": 2.0},
    schema={"demand_caps": list, "limit": float, "prices": list, "regularizer": float},
    doc="Single-class booking-limit revenue with uniform demand.",
))
_register(ProblemCatalogEntry(
    name="revenue_2d",
    builder=build_revenue_truncation,
    defaults={"demand_caps": [2.0, 2.0], "limit": 1.5, "prices": [1.0, 1.0],
              "regularizer": 2.0},
    schema={"demand_caps": list, "limit": float, "prices": list, "regularizer": float},
    doc="Two-class booking-limit revenue with uniform demand.",
))


def build(name: str, **overrides) -> HiddenConvexProblem:
    """Build a catalog problem by name with optional parameter overrides."""
    if name not in CATALOG:
        raise ConfigurationError(
            f"unknown problem {name!r}; known: {sorted(CATALOG)}"
        )
    return CATALOG[name].build(**overrides)
