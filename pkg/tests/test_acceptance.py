"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Every tolerance is pinned here.  Criterion A05 prescribes an iteration
budget near 1e11 at its stated constants, which is hours of compute on any
hardware; the full run is gated behind HIDDENCONVEX_FULL_ACCEPTANCE=1 and a
desk-scale companion test exercises the same machinery at a feasible
accuracy target (see the README).
"""

import math
import os
import time

import numpy as np
import pytest

import hiddenconvex as hc
from hiddenconvex import diagnostics, envelope, geometry, harness
from hiddenconvex.config import ExperimentConfig
from hiddenconvex.rng import RandomSource

from conftest import catalog_problem

FULL_ENV = "HIDDENCONVEX_FULL_ACCEPTANCE"


def gate(tag: str, desc: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    line = f"[acceptance] {tag} {desc}: {status}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


def _median_finals(problem, algorithm, schedule, n_seeds=20, base_seed=2024,
                   x0=None, lyapunov=True):
    finals = []
    for i in range(n_seeds):
        rs = RandomSource(base_seed, i)
        if algorithm == "sm":
            _, recs = hc.run_sm(problem, schedule, rs, checkpoints=1,
                                lyapunov_at_checkpoints=lyapunov, x0=x0)
        elif algorithm == "psgd":
            _, recs = hc.run_psgd(problem, schedule, rs, checkpoints=1,
                                  lyapunov_at_checkpoints=lyapunov, x0=x0)
        else:
            _, _, recs = hc.run_psgdm(problem, schedule, rs, checkpoints=1, x0=x0)
        finals.append(recs[-1])
    return finals


def test_a01_structural_certification(all_catalog):
    t0 = time.time()
    worst = {}
    ok = True
    for name, p in all_catalog.items():
        rep = diagnostics.run_all(p, RandomSource(20240501),
                                  n_pairs=10_000, n_segments=10_000,
                                  n_blend=1000)
        ok &= rep.passed
        worst[name] = max(e.worst_residual for e in rep.entries)
        # Slack levels per check are enforced inside the checks themselves:
        # expansion 1e-9, reformulation convexity 1e-9, blend bounds 1e-8,
        # composition and round trip 1e-10.
    elapsed = time.time() - t0
    gate("A01", "structural-certification", ok and elapsed < 60.0,
         f"worst residuals {worst}, {elapsed:.1f}s")


def test_a02_prox_fixed_point():
    names = ["cosine", "posynomial_1d", "posynomial_3d", "revenue_1d", "revenue_2d"]
    rng = np.random.default_rng(424242)
    worst_fp = 0.0
    worst_ref = 0.0
    for name in names:
        p = catalog_problem(name)
        c = p.constants
        for rho in (2.0 * c.ell, 4.0 * c.L):
            for _ in range(100):
                x = geometry.sample_uniform(p.feasible_set, rng)
                r = envelope.prox(p, x, rho, inner_tol=1e-8)
                worst_fp = max(worst_fp, r.fixed_point_residual)
                if p.dim == 1:
                    ref = envelope.prox_reference_1d(p, x, rho)
                    worst_ref = max(worst_ref, abs(float(r.x_hat[0] - ref[0])))
    gate("A02", "prox-fixed-point", worst_fp <= 1e-7 and worst_ref <= 1e-7,
         f"worst residual {worst_fp:.2e}, worst 1-D oracle gap {worst_ref:.2e}")


def test_a03_one_step_contraction_bounds():
    t0 = time.time()
    n_draws = 10_000
    margins = []

    def mc_check(problem, eta, rho, bound_extra, rng_seed):
        # E ||x+ - prox||^2 <= (1 - eta rho) ||x - prox||^2 + noise floor.
        rng = np.random.default_rng(rng_seed)
        ok_all = True
        for _ in range(10):
            x = geometry.sample_uniform(problem.feasible_set, rng)
            xhat = envelope.prox(problem, x, rho, inner_tol=1e-11).x_hat
            gen = np.random.default_rng(rng.integers(2 ** 63))
            vals = np.empty(n_draws)
            for i in range(n_draws):
                g = problem.stochastic_oracle(x, gen)
                xp = geometry.project(problem.feasible_set, x - eta * g)
                vals[i] = float(np.sum((xp - xhat) ** 2))
            bound = (1 - eta * rho) * float(np.sum((x - xhat) ** 2)) + bound_extra(eta)
            se = vals.std(ddof=1) / math.sqrt(n_draws)
            margins.append(bound + 3 * se - vals.mean())
            ok_all &= vals.mean() <= bound + 3 * se
        return ok_all

    p_sm = catalog_problem("neg_square")       # subgradient-method regime
    ok = mc_check(p_sm, eta=0.1, rho=2 * p_sm.constants.ell,
                  bound_extra=lambda e: 4 * p_sm.constants.G_F ** 2 * e ** 2,
                  rng_seed=1)
    p_pg = catalog_problem("cosine")           # smooth regime
    ok &= mc_check(p_pg, eta=0.2, rho=4 * p_pg.constants.L,
                   bound_extra=lambda e: p_pg.constants.sigma ** 2 * e ** 2,
                   rng_seed=2)

    # Momentum estimate error recursion at 10 fixed states.
    beta = 0.3
    rng = np.random.default_rng(3)
    L, sig = p_pg.constants.L, p_pg.constants.sigma
    for _ in range(10):
        x = geometry.sample_uniform(p_pg.feasible_set, rng)
        x_next = geometry.project(p_pg.feasible_set,
                                  x - 0.2 * p_pg.det_gradient(x))
        g_t = p_pg.det_gradient(x) + rng.normal(size=1) * 0.5
        gen = np.random.default_rng(rng.integers(2 ** 63))
        gf_next = p_pg.det_gradient(x_next)
        vals = np.empty(n_draws)
        for i in range(n_draws):
            fresh = p_pg.stochastic_oracle(x_next, gen)
            g_n = (1 - beta) * g_t + beta * fresh
            vals[i] = float(np.sum((g_n - gf_next) ** 2))
        bound = ((1 - beta) * float(np.sum((g_t - p_pg.det_gradient(x)) ** 2))
                 + (3 * L ** 2 / beta) * float(np.sum((x - x_next) ** 2))
                 + beta ** 2 * sig ** 2)
        se = vals.std(ddof=1) / math.sqrt(n_draws)
        margins.append(bound + 3 * se - vals.mean())
        ok &= vals.mean() <= bound + 3 * se
    elapsed = time.time() - t0
    gate("A03", "one-step-contraction-bounds", ok and elapsed < 120.0,
         f"min margin {min(margins):.3e}, {elapsed:.1f}s")


def test_a04_gradient_correctness(all_catalog):
    ok = True
    worst_fd = 0.0
    for name, p in all_catalog.items():
        if p.is_smooth:
            rec = diagnostics.check_gradient_finite_diff(p, 64, rs=RandomSource(77))
            ok &= rec.passed
            worst_fd = max(worst_fd, rec.worst_residual)
    n = 100_000
    worst_z = 0.0
    from hiddenconvex import kernels
    for name, p in all_catalog.items():
        gen = RandomSource(787).generator
        pts = geometry.sample_uniform(p.feasible_set,
                                      RandomSource(788).generator, 10)
        scale = p.constants.sigma if p.constants.sigma else p.constants.G_F
        for x in pts:
            mean = kernels.oracle_sample_mean(p, x, n, gen)
            err = float(np.linalg.norm(mean - p.det_gradient(x)))
            z = err / (scale / math.sqrt(n))
            worst_z = max(worst_z, z)
            ok &= z <= 5.0
    gate("A04", "gradient-correctness",
         ok and worst_fd <= 1e-5,
         f"worst FD residual {worst_fd:.2e}, worst unbiasedness z {worst_z:.2f} "
         f"over 10 points per problem at n={n}")


def _sm_convex_neg_square_schedule(epsilon):
    p = catalog_problem("neg_square")  # delta = 0.1, sigma = 0.5
    lyap0 = p.objective(p.x0_default) - p.constants.F_star
    return p, hc.make_schedule("sm_convex", p.constants, epsilon, lyap0)


def test_a05_sm_global_convergence_full():
    p, sched = _sm_convex_neg_square_schedule(0.05)
    if not os.environ.get(FULL_ENV):
        pytest.skip(
            f"criterion prescribes T = {sched.T} (~1e11) iterations per seed at "
            f"these constants, about 2e12 oracle calls over 20 seeds (hours of "
            f"compute); the stated 'T <= ~1e7' runtime estimate is inconsistent "
            f"with the prescribed contraction rate alpha = {sched.alpha:.2e}. "
            f"Set {FULL_ENV}=1 to run the full criterion; the desk-scale "
            f"companion test exercises the same schedule machinery at a "
            f"feasible target.")
    finals = _median_finals(p, "sm", sched)
    med = float(np.median([f.lyapunov for f in finals]))
    gate("A05", "sm-convergence-bounded-regime", med <= 0.05,
         f"T={sched.T}, median envelope gap {med:.4f}")


def test_a05_desk_scale_companion():
    # Same problem, same schedule constructor, feasible accuracy target.
    # This is a companion check, not the criterion itself (see A05 skip).
    eps = 0.5
    p, sched = _sm_convex_neg_square_schedule(eps)
    finals = _median_finals(p, "sm", sched, n_seeds=5)
    med = float(np.median([f.lyapunov for f in finals]))
    gate("A05-desk", "sm-convergence-bounded-regime-desk-scale", med <= eps,
         f"T={sched.T}, median envelope gap {med:.4f} <= {eps}")


def test_a06_sm_strongly_convex():
    p = catalog_problem("cosine")  # delta = pi/2, sigma = 0.5
    c = p.constants
    lyap0 = p.objective(p.x0_default) - c.F_star
    sched = hc.make_schedule("sm_strongly_convex", c, 0.05, lyap0)
    finals = _median_finals(p, "sm", sched)
    med_lyap = float(np.median([f.lyapunov for f in finals]))
    med_dist = float(np.median([f.dist_to_opt_sq for f in finals]))
    dist_bound = (4.0 / (c.mu_H * c.mu_c ** 2) + 2.0 / c.ell) * 0.05
    gate("A06", "sm-convergence-strong-regime",
         med_lyap <= 0.05 and med_dist <= dist_bound,
         f"T={sched.T}, median gap {med_lyap:.4f}, median dist^2 "
         f"{med_dist:.5f} <= {dist_bound:.3f}")


@pytest.fixture(scope="module")
def psgd_convex_posy_runs():
    p = catalog_problem("posynomial_3d")
    lyap0 = p.objective(p.x0_default) - p.constants.F_star
    sched = hc.make_schedule("psgd_convex", p.constants, 0.05, lyap0)
    results = []
    for i in range(20):
        x, recs = hc.run_psgd(p, sched, RandomSource(2024, i), checkpoints=1)
        results.append((x, recs[-1]))
    return p, sched, results


def test_a07_psgd_both_regimes(psgd_convex_posy_runs):
    p, sched, results = psgd_convex_posy_runs
    med_lyap = float(np.median([rec.lyapunov for _, rec in results]))

    pr = catalog_problem("revenue_2d")
    c = pr.constants
    lyap0 = pr.objective(pr.x0_default) - c.F_star
    sched_r = hc.make_schedule("psgd_strongly_convex", c, 0.05, lyap0)
    finals = _median_finals(pr, "psgd", sched_r)
    med_dist = float(np.median([f.dist_to_opt_sq for f in finals]))
    dist_bound = (4.0 / (c.mu_H * c.mu_c ** 2) + 1.0 / c.L) * 0.05
    gate("A07", "psgd-convergence-both-regimes",
         med_lyap <= 0.05 and med_dist <= dist_bound,
         f"posynomial T={sched.T} median gap {med_lyap:.4f}; revenue "
         f"T={sched_r.T} median dist^2 {med_dist:.5f} <= {dist_bound:.3f}")


def test_a08_postprocessing_step(psgd_convex_posy_runs):
    p, sched, results = psgd_convex_posy_runs
    eps = 0.05
    gaps = []
    for i, (x, _) in enumerate(results):
        rs = RandomSource(909, i)
        x_post = hc.postprocess_minibatch(p, x, rs, epsilon=eps)
        gaps.append(p.objective(x_post) - p.constants.F_star)
    med = float(np.median(gaps))
    b0 = hc.post_batch_size(p.constants, eps)
    gate("A08", "postprocessing-function-gap", med <= 2 * eps,
         f"B0={b0}, median function gap {med:.4f} <= {2 * eps}")


def test_a09_momentum_last_iterate():
    p = catalog_problem("cosine")
    c = p.constants
    lyap0 = p.objective(p.x0_default) - c.F_star
    sched = hc.make_schedule("psgdm_strongly_convex", c, 0.05, lyap0)
    finals = _median_finals(p, "psgdm", sched)
    med_gap = float(np.median([f.f_value - c.F_star for f in finals]))
    med_err = float(np.median([f.grad_err_sq for f in finals]))
    err_bound = (sched.beta / sched.eta) * 0.05
    gate("A09", "momentum-last-iterate", med_gap <= 0.05 and med_err <= err_bound,
         f"T={sched.T}, median function gap {med_gap:.4f}, median estimate "
         f"error {med_err:.4f} <= {err_bound:.3f}")


def test_a10_sample_complexity_slopes():
    grid = [0.2, 0.1, 0.05, 0.025]
    cfg_c = ExperimentConfig(
        problem_name="cosine", problem_params={"sigma": 0.05},
        algorithm="psgd", theorem="psgd_convex", epsilon_grid=grid,
        seeds_base=11, seeds_count=5, checkpoint_count=1,
        skip_diagnostics=True, out_dir="out")
    res_c = harness.sweep_epsilon(cfg_c, write_files=False)
    ok_c = 2.5 <= res_c.slope <= 3.5
    ok_c &= all(row["median_metric"] <= row["epsilon"] for row in res_c.rows)

    cfg_s = ExperimentConfig(
        problem_name="revenue_1d",
        problem_params={"demand_caps": [4.0], "limit": 1.8,
                        "prices": [40.0], "regularizer": 40.0},
        algorithm="psgd", theorem="psgd_strongly_convex", epsilon_grid=grid,
        seeds_base=11, seeds_count=5, checkpoint_count=1,
        skip_diagnostics=True, out_dir="out")
    res_s = harness.sweep_epsilon(cfg_s, write_files=False)
    ok_s = 0.8 <= res_s.slope <= 1.2
    ok_s &= all(row["median_metric"] <= row["epsilon"] for row in res_s.rows)
    gate("A10", "sample-complexity-slopes", ok_c and ok_s,
         f"bounded-regime slope {res_c.slope:.3f} in [2.5, 3.5]; strong-regime "
         f"slope {res_s.slope:.3f} in [0.8, 1.2]; all grid targets met")


def test_a11_gradient_domination():
    ok = True
    worst = -math.inf
    for name in ("cosine", "revenue_1d", "revenue_2d"):
        p = catalog_problem(name)
        rec = diagnostics.check_gradient_domination(p, 1000, RandomSource(31))
        ok &= rec.passed
        worst = max(worst, rec.worst_residual)
    gate("A11", "gradient-domination", ok, f"worst residual {worst:.2e} <= 1e-8")


def test_a12_momentum_reduces_to_psgd():
    from dataclasses import replace
    ok = True
    for name in ("cosine", "revenue_2d"):
        p = catalog_problem(name)
        sched = hc.Schedule(theorem=hc.MANUAL, eta=0.05, alpha=0.0,
                            rho=4.0 * p.constants.L, T=1000, beta=1.0)
        cps = list(range(1, 1001))
        for seed in (0, 1, 2):
            xm, _, rm = hc.run_psgdm(p, sched, RandomSource(seed),
                                     checkpoints=cps,
                                     lyapunov_at_checkpoints=False)
            xp, rp = hc.run_psgd(p, replace(sched, beta=None),
                                 RandomSource(seed), checkpoints=cps,
                                 lyapunov_at_checkpoints=False)
            ok &= bool(np.array_equal(xm, xp))
            ok &= all(a.f_value == b.f_value and a.dist_to_opt_sq == b.dist_to_opt_sq
                      for a, b in zip(rm[1:], rp[1:]))
    gate("A12", "momentum-unit-weight-reduction", ok,
         "trajectories bit-identical over 1000 iterations, 2 problems, 3 seeds")
