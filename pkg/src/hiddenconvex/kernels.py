"""Compiled iteration kernels for the built-in problems.

The projected-update recursions are the hot loops of every experiment: a run
is one long serial chain of draw / step / clip operations, so the built-in
problems lower their oracles to a small dispatch table that numba can
compile.  The pure Python/numpy engine in :mod:`hiddenconvex.algorithms`
consumes the same random stream draw-for-draw, so either path can reproduce
the other; select with the ``HIDDENCONVEX_BACKEND`` environment variable
(``auto`` (default), ``numba``, or ``numpy``).

All built-in feasible sets are boxes, so the in-kernel projection is a clip.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

try:
    import numba as nb

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None
    HAS_NUMBA = False

# Gradient dispatch codes.
GRAD_NEG_SQUARE = 0
GRAD_COSINE = 1
GRAD_CHAIN = 2
GRAD_CHAIN_MAX = 3
GRAD_POSYNOMIAL = 4
GRAD_REVENUE = 5

# Oracle dispatch codes.
ORACLE_ADDITIVE = 0
ORACLE_REVENUE = 1
ORACLE_POSY_TERM = 2

_EMPTY_MAT = np.zeros((0, 0))
_EMPTY_VEC = np.zeros(0)


@dataclass(frozen=True)
class KernelSpec:
    """Flat parameter pack a kernel needs to evaluate one problem's oracle."""

    grad_kind: int
    oracle_kind: int
    expo: np.ndarray = _EMPTY_MAT   # posynomial exponents, (K, d)
    coef: np.ndarray = _EMPTY_VEC   # posynomial coefficients, (K,)
    cap: np.ndarray = _EMPTY_VEC    # revenue demand caps, (d,)
    price: np.ndarray = _EMPTY_VEC  # revenue prices, (d,)
    scal: float = 0.0               # chain coupling weight or revenue regularizer
    noise: float = 0.0              # additive per-coordinate noise std


def backend() -> str:
    """Active engine name, honoring ``HIDDENCONVEX_BACKEND``."""
    choice = os.environ.get("HIDDENCONVEX_BACKEND", "auto").strip().lower()
    if choice in ("numba", "numpy"):
        if choice == "numba" and not HAS_NUMBA:
            raise RuntimeError("HIDDENCONVEX_BACKEND=numba but numba is not importable")
        return choice
    return "numba" if HAS_NUMBA else "numpy"


def _njit(fn):
    if not HAS_NUMBA:  # pragma: no cover
        return fn
    # nogil lets independent seeded runs execute on real threads.
    return nb.njit(cache=True, nogil=True)(fn)


def _njit_inline(fn):
    if not HAS_NUMBA:  # pragma: no cover
        return fn
    # Inlining the oracle dispatch into the loops lets LLVM hoist the kind
    # branches out of the hot path.
    return nb.njit(cache=True, inline="always")(fn)


@_njit_inline
def _det_grad(grad_kind, x, expo, coef, cap, price, scal, out):
    d = x.size
    if grad_kind == GRAD_NEG_SQUARE:
        out[0] = -2.0 * x[0]
    elif grad_kind == GRAD_COSINE:
        out[0] = -np.sin(x[0])
    elif grad_kind == GRAD_CHAIN:
        u0 = x[0] - 1.0
        for i in range(d):
            # dF/du contribution of the chain residual owning x[i] ...
            if i == 0:
                gi = 0.5 * u0
            else:
                gi = 2.0 * scal * (x[i] - 2.0 * x[i - 1] * x[i - 1] - 1.0)
            # ... plus the next residual, which depends on x[i] quadratically.
            if i < d - 1:
                un = x[i + 1] - 2.0 * x[i] * x[i] - 1.0
                gi += 2.0 * scal * un * (-4.0 * x[i])
            out[i] = gi
    elif grad_kind == GRAD_CHAIN_MAX:
        u0 = x[0] - 1.0
        u1 = 2.0 * x[0] * x[0] - x[1] - 1.0
        p0 = 0.25 * abs(u0)
        p1 = 0.5 * abs(u1)
        if p0 >= p1:
            out[0] = 0.25 * np.sign(u0)
            out[1] = 0.0
        else:
            s = np.sign(u1)
            out[0] = 2.0 * s * x[0]
            out[1] = -0.5 * s
    elif grad_kind == GRAD_POSYNOMIAL:
        for i in range(d):
            out[i] = 0.0
        for k in range(coef.size):
            e = 0.0
            for i in range(d):
                e += expo[k, i] * np.log(x[i])
            m = coef[k] * np.exp(e)
            for i in range(d):
                out[i] += m * expo[k, i] / x[i]
    else:  # GRAD_REVENUE
        for i in range(d):
            ci = x[i] - x[i] * x[i] / (2.0 * cap[i])
            cpi = 1.0 - x[i] / cap[i]
            out[i] = (scal * ci - price[i]) * cpi


@_njit_inline
def _oracle(grad_kind, oracle_kind, x, expo, coef, cap, price, scal, noise, rng, out):
    d = x.size
    if oracle_kind == ORACLE_ADDITIVE:
        _det_grad(grad_kind, x, expo, coef, cap, price, scal, out)
        if noise > 0.0:
            for i in range(d):
                out[i] += noise * rng.standard_normal()
    elif oracle_kind == ORACLE_REVENUE:
        for i in range(d):
            xi = cap[i] * rng.random()
            xip = cap[i] * rng.random()
            gi = 0.0
            if x[i] <= xi:
                gi = -price[i]
            if x[i] <= xip:
                gi += scal * min(x[i], xi)
            out[i] = gi
    else:  # ORACLE_POSY_TERM
        k = rng.integers(0, coef.size)
        e = 0.0
        for i in range(d):
            e += expo[k, i] * np.log(x[i])
        m = coef.size * coef[k] * np.exp(e)
        for i in range(d):
            out[i] = m * expo[k, i] / x[i]


@_njit
def oracle_mean_kernel(grad_kind, oracle_kind, expo, coef, cap, price, scal,
                       noise, x, n, rng):
    d = x.size
    acc = np.zeros(d)
    g = np.empty(d)
    for _ in range(n):
        _oracle(grad_kind, oracle_kind, x, expo, coef, cap, price, scal, noise, rng, g)
        for i in range(d):
            acc[i] += g[i]
    return acc / n


def oracle_sample_mean(problem, x, n, rng) -> np.ndarray:
    """Mean of ``n`` oracle draws at ``x``; compiled when the problem has a
    kernel pack and the active backend allows, else a plain loop."""
    x = np.asarray(x, dtype=float)
    ks = getattr(problem, "kernel_spec", None)
    if ks is not None and backend() == "numba":
        return oracle_mean_kernel(ks.grad_kind, ks.oracle_kind, ks.expo, ks.coef,
                                  ks.cap, ks.price, ks.scal, ks.noise, x, n, rng)
    acc = np.zeros(x.size)
    for _ in range(n):
        acc += problem.stochastic_oracle(x, rng)
    return acc / n


@_njit
def sgd_loop(grad_kind, oracle_kind, expo, coef, cap, price, scal, noise,
             lo, hi, x0, eta, T, B, cp_ts, rng):
    """Projected stochastic (sub-)gradient recursion on a box.

    Returns the final iterate and iterate snapshots at the checkpoint
    iterations ``cp_ts`` (sorted, 1-based).
    """
    d = x0.size
    ncp = cp_ts.size
    snaps = np.empty((ncp, d))
    # Scalar fast path for the one-dimensional additive-noise toys, which
    # carry the largest prescribed iteration counts by far.
    if d == 1 and B == 1 and oracle_kind == ORACLE_ADDITIVE and grad_kind <= GRAD_COSINE:
        xs = x0[0]
        lo0, hi0 = lo[0], hi[0]
        k = 0
        for t in range(T):
            if grad_kind == GRAD_NEG_SQUARE:
                gs = -2.0 * xs
            else:
                gs = -np.sin(xs)
            if noise > 0.0:
                gs += noise * rng.standard_normal()
            xn = xs - eta * gs
            if xn < lo0:
                xn = lo0
            elif xn > hi0:
                xn = hi0
            xs = xn
            if k < ncp and t + 1 == cp_ts[k]:
                snaps[k, 0] = xs
                k += 1
        out = np.empty(1)
        out[0] = xs
        return out, snaps
    x = x0.copy()
    g = np.empty(d)
    acc = np.empty(d)
    k = 0
    for t in range(T):
        if B == 1:
            _oracle(grad_kind, oracle_kind, x, expo, coef, cap, price, scal, noise, rng, g)
        else:
            for i in range(d):
                acc[i] = 0.0
            for _ in range(B):
                _oracle(grad_kind, oracle_kind, x, expo, coef, cap, price, scal, noise, rng, g)
                for i in range(d):
                    acc[i] += g[i]
            for i in range(d):
                g[i] = acc[i] / B
        for i in range(d):
            xi = x[i] - eta * g[i]
            if xi < lo[i]:
                xi = lo[i]
            elif xi > hi[i]:
                xi = hi[i]
            x[i] = xi
        if k < ncp and t + 1 == cp_ts[k]:
            for i in range(d):
                snaps[k, i] = x[i]
            k += 1
    return x, snaps


@_njit
def momentum_loop(grad_kind, oracle_kind, expo, coef, cap, price, scal, noise,
                  lo, hi, x0, g0, eta, beta, T, cp_ts, rng):
    """Heavy-ball recursion: one fresh draw per iteration folded into the
    running gradient estimate with weight ``beta``.  The initial estimate
    ``g0`` is drawn by the caller so the stream position is engine-agnostic.

    Returns the final iterate, final estimate, and (iterate, estimate)
    snapshots at checkpoints.
    """
    d = x0.size
    x = x0.copy()
    g = g0.copy()
    fresh = np.empty(d)
    ncp = cp_ts.size
    xsnaps = np.empty((ncp, d))
    gsnaps = np.empty((ncp, d))
    k = 0
    for t in range(T):
        for i in range(d):
            xi = x[i] - eta * g[i]
            if xi < lo[i]:
                xi = lo[i]
            elif xi > hi[i]:
                xi = hi[i]
            x[i] = xi
        _oracle(grad_kind, oracle_kind, x, expo, coef, cap, price, scal, noise, rng, fresh)
        for i in range(d):
            g[i] = (1.0 - beta) * g[i] + beta * fresh[i]
        if k < ncp and t + 1 == cp_ts[k]:
            for i in range(d):
                xsnaps[k, i] = x[i]
                gsnaps[k, i] = g[i]
            k += 1
    return x, g, xsnaps, gsnaps
