import math

import numpy as np
import pytest

import hiddenconvex as hc
from hiddenconvex.errors import DomainError, InfeasiblePointError
from hiddenconvex.rng import RandomSource


def test_random_source_repeatable():
    a = RandomSource(42).generator.standard_normal(100)
    b = RandomSource(42).generator.standard_normal(100)
    assert np.array_equal(a, b)


def test_random_source_substreams_differ():
    a = RandomSource.for_run(42, 0).generator.standard_normal(50)
    b = RandomSource.for_run(42, 1).generator.standard_normal(50)
    assert not np.array_equal(a, b)
    # Substreams are reproducible too.
    a2 = RandomSource.for_run(42, 0).generator.standard_normal(50)
    assert np.array_equal(a, a2)


def test_eval_objective_toy_values(neg_square, posy_1d):
    assert hc.eval_objective(neg_square, [0.5]) == pytest.approx(-0.25)
    cos = hc.build("cosine", delta=1.0, sigma=0.0)
    assert hc.eval_objective(cos, [math.pi]) == pytest.approx(-1.0)
    assert hc.eval_objective(posy_1d, [1.0]) == pytest.approx(2.0)


def test_eval_objective_rejects_infeasible(neg_square):
    with pytest.raises(InfeasiblePointError, match="below lower bound"):
        hc.eval_objective(neg_square, [0.05])


def test_map_examples(neg_square, cosine, revenue_1d):
    assert hc.map_forward(cosine, [math.pi])[0] == pytest.approx(0.0, abs=1e-12)
    assert hc.map_inverse(neg_square, [0.25])[0] == pytest.approx(0.5)
    assert hc.map_forward(revenue_1d, [1.0])[0] == pytest.approx(0.75)
    assert hc.map_inverse(revenue_1d, [0.75])[0] == pytest.approx(1.0)


def test_revenue_inverse_against_bisection(revenue_1d):
    # Independent oracle: invert the truncated-demand mean by bisection.
    def bisect(u, b=2.0, lo=0.0, hi=2.0):
        for _ in range(200):
            mid = (lo + hi) / 2
            if mid - mid * mid / (2 * b) < u:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2

    for u in [0.1, 0.3, 0.5, 0.75, 0.9]:
        assert hc.map_inverse(revenue_1d, [u])[0] == pytest.approx(bisect(u), abs=1e-10)


def test_inverse_domain_errors(revenue_1d, neg_square):
    with pytest.raises(DomainError):
        hc.map_inverse(revenue_1d, [1.2])  # beyond the image of the box
    with pytest.raises(DomainError):
        hc.map_inverse(neg_square, [-0.5])


def test_zero_noise_oracle_equals_gradient():
    p = hc.build("neg_square", delta=0.1, sigma=0.0)
    rs = RandomSource(0)
    g = hc.sample_stochastic_gradient(p, [0.5], rs)
    assert np.array_equal(g, p.det_gradient(np.array([0.5])))


def test_revenue_part_indicator_estimator_mean():
    # With no regularizer the oracle is -r * 1{x <= demand}; its mean at
    # x = 1 under Uniform[0, 2] demand is -r * (1 - 1/2) = -1/2.
    p = hc.build("revenue_1d", regularizer=0.0)
    rng = RandomSource(5).generator
    n = 200_000
    acc = 0.0
    for _ in range(n):
        acc += p.stochastic_oracle(np.array([1.0]), rng)[0]
    se = p.constants.sigma / math.sqrt(n)
    assert abs(acc / n - (-0.5)) <= 5 * max(se, 1e-3)


def test_posynomial_term_sampling_two_point_expectation():
    p = hc.build("posynomial_1d", oracle_mode="term_sampling")
    x = np.array([2.0])
    # Average of the two equally likely branch values equals the gradient.
    branches = [2.0 * 1.0 * (2.0 ** 1.0) * 1.0 / 2.0,      # term x, scaled by K=2
                2.0 * 1.0 * (2.0 ** -1.0) * -1.0 / 2.0]    # term 1/x
    assert np.mean(branches) == pytest.approx(p.det_gradient(x)[0])
    rng = RandomSource(1).generator
    draws = {p.stochastic_oracle(x, rng)[0] for _ in range(64)}
    assert len(draws) == 2
    assert all(any(abs(d - b) < 1e-12 for b in branches) for d in draws)


def test_oracle_unbiased_at_rate(all_catalog):
    # Sample mean of n draws approaches the deterministic (sub-)gradient at
    # the five-standard-error level.
    n = 20_000
    for p in all_catalog.values():
        rng = RandomSource(11).generator
        x = p.x0_default + 0.5 * (p.feasible_set.upper - p.x0_default)
        acc = np.zeros(p.dim)
        for _ in range(n):
            acc += p.stochastic_oracle(x, rng)
        scale = p.constants.sigma or p.constants.G_F
        err = np.linalg.norm(acc / n - p.det_gradient(x))
        assert err <= 5 * scale / math.sqrt(n), p.name


def test_constant_bundle_validation():
    with pytest.raises(DomainError):
        hc.ConstantBundle(mu_c=0.0, mu_H=0, ell=1, F_star=0, x_star=[0.0])
    with pytest.raises(DomainError):
        hc.ConstantBundle(mu_c=1.0, mu_H=-1, ell=1, F_star=0, x_star=[0.0])
    with pytest.raises(DomainError):
        hc.ConstantBundle(mu_c=1.0, mu_H=0, ell=1, F_star=0, x_star=[0.0], D_U=0.0)


def test_constant_bundle_require_names_symbol():
    c = hc.ConstantBundle(mu_c=1.0, mu_H=0, ell=1, F_star=0, x_star=[0.0])
    with pytest.raises(hc.errors.ConfigurationError, match="G_F"):
        c.require("G_F")


def test_roundtrip_and_composition_sampled(all_catalog):
    rng = np.random.default_rng(9)
    for p in all_catalog.values():
        s = p.feasible_set
        X = s.lower + rng.random((500, p.dim)) * (s.upper - s.lower)
        for x in X:
            u = p.forward_map(x)
            assert np.linalg.norm(p.inverse_map(u) - x) <= 1e-10 * (1 + np.linalg.norm(x))
            f = p.objective(x)
            assert abs(f - p.reformulation(u)) <= 1e-10 * (1 + abs(f))
