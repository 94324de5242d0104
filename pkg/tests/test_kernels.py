import numpy as np
import pytest

import hiddenconvex as hc
from hiddenconvex import kernels
from hiddenconvex.rng import RandomSource

from conftest import manual_schedule

needs_numba = pytest.mark.skipif(not kernels.HAS_NUMBA, reason="numba unavailable")


def test_backend_env_selection(monkeypatch):
    monkeypatch.setenv("HIDDENCONVEX_BACKEND", "numpy")
    assert kernels.backend() == "numpy"
    monkeypatch.setenv("HIDDENCONVEX_BACKEND", "auto")
    assert kernels.backend() in ("numba", "numpy")
    monkeypatch.delenv("HIDDENCONVEX_BACKEND")
    assert kernels.backend() in ("numba", "numpy")


@needs_numba
def test_generator_draws_match_numpy():
    # Compiled draws must consume the same stream as the numpy fallback.
    @kernels.nb.njit(cache=True)
    def take(rng, n):
        normals = np.empty(n)
        uniforms = np.empty(n)
        ints = np.empty(n, np.int64)
        for i in range(n):
            normals[i] = rng.standard_normal()
            uniforms[i] = rng.random()
            ints[i] = rng.integers(0, 5)
        return normals, uniforms, ints

    a = RandomSource(99).generator
    b = RandomSource(99).generator
    na, ua, ia = take(a, 500)
    nb_ = b.standard_normal(500)  # not interleaved: draw orders differ here
    assert na.shape == nb_.shape
    # Interleaved comparison: replay the exact consumption pattern in numpy.
    c = RandomSource(99).generator
    nref = np.empty(500)
    uref = np.empty(500)
    iref = np.empty(500, np.int64)
    for i in range(500):
        nref[i] = c.standard_normal()
        uref[i] = c.random()
        iref[i] = c.integers(0, 5)
    assert np.array_equal(na, nref)
    assert np.array_equal(ua, uref)
    assert np.array_equal(ia, iref)


@needs_numba
@pytest.mark.parametrize("name", ["neg_square", "cosine", "chain_smooth",
                                  "chain_max", "posynomial_3d", "revenue_2d"])
def test_engines_agree(name):
    from conftest import catalog_problem

    p = catalog_problem(name)
    sched = manual_schedule(eta=0.01, T=400,
                            rho=2.0 * max(p.constants.ell, 1e-6) + 1.0)
    run = hc.run_sm if not p.is_smooth else hc.run_psgd
    xa, ra = run(p, sched, RandomSource(31), checkpoints=20,
                 lyapunov_at_checkpoints=False, engine="numba")
    xb, rb = run(p, sched, RandomSource(31), checkpoints=20,
                 lyapunov_at_checkpoints=False, engine="numpy")
    # Bit-identical for polynomial updates; transcendental gradients may
    # differ by an ulp per step, so compare at tight tolerance.
    assert np.allclose(xa, xb, rtol=1e-9, atol=1e-12)
    for a, b in zip(ra, rb):
        assert a.f_value == pytest.approx(b.f_value, rel=1e-9, abs=1e-12)


@needs_numba
def test_engines_agree_momentum(revenue_2d):
    sched = manual_schedule(eta=0.02, T=300, rho=4.0 * revenue_2d.constants.L,
                            beta=0.4)
    xa, ga, _ = hc.run_psgdm(revenue_2d, sched, RandomSource(8),
                             lyapunov_at_checkpoints=False, engine="numba")
    xb, gb, _ = hc.run_psgdm(revenue_2d, sched, RandomSource(8),
                             lyapunov_at_checkpoints=False, engine="numpy")
    # Pure polynomial arithmetic: exactly equal.
    assert np.array_equal(xa, xb)
    assert np.array_equal(ga, gb)


@needs_numba
def test_engines_agree_batched(posy_3d):
    sched = manual_schedule(eta=1e-3, T=50, rho=4.0 * posy_3d.constants.L,
                            batch=7)
    xa, _ = hc.run_psgd(posy_3d, sched, RandomSource(2), checkpoints=5,
                        lyapunov_at_checkpoints=False, engine="numba")
    xb, _ = hc.run_psgd(posy_3d, sched, RandomSource(2), checkpoints=5,
                        lyapunov_at_checkpoints=False, engine="numpy")
    assert np.allclose(xa, xb, rtol=1e-10)


@needs_numba
def test_oracle_sample_mean_matches_plain_loop(revenue_2d, cosine):
    for p, rtol in ((revenue_2d, 0.0), (cosine, 1e-12)):
        x = p.x0_default + 0.3 * (p.feasible_set.upper - p.x0_default)
        a = kernels.oracle_sample_mean(p, x, 500, RandomSource(21).generator)
        gen = RandomSource(21).generator
        acc = np.zeros(p.dim)
        for _ in range(500):
            acc += p.stochastic_oracle(x, gen)
        if rtol == 0.0:
            assert np.array_equal(a, acc / 500)
        else:
            assert np.allclose(a, acc / 500, rtol=rtol)


def test_backend_override_via_env(monkeypatch, cosine):
    monkeypatch.setenv("HIDDENCONVEX_BACKEND", "numpy")
    sched = manual_schedule(eta=0.01, T=50, rho=4.0)
    x, _ = hc.run_psgd(cosine, sched, RandomSource(5),
                       lyapunov_at_checkpoints=False)
    monkeypatch.setenv("HIDDENCONVEX_BACKEND", "auto")
    x2, _ = hc.run_psgd(cosine, sched, RandomSource(5),
                        lyapunov_at_checkpoints=False)
    assert np.allclose(x, x2, rtol=1e-9)


def test_generic_engine_used_for_custom_problems(monkeypatch):
    # Problems without a kernel pack run on the generic engine under any
    # backend setting.
    import test_envelope

    p = test_envelope._quadratic_problem()
    assert p.kernel_spec is None
    sched = manual_schedule(eta=0.1, T=20, rho=4.0)
    x, _ = hc.run_psgd(p, sched, RandomSource(0), lyapunov_at_checkpoints=False)
    assert abs(x[0]) < 1.0
