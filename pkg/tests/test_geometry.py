import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hiddenconvex import geometry
from hiddenconvex.errors import DomainError, InfeasiblePointError, UnsupportedOperationError


def test_box_projection_clamps():
    s = geometry.box([0, 0], [1, 1])
    assert np.allclose(geometry.project(s, [2, -1]), [1, 0])


def test_projection_identity_on_member():
    s = geometry.box([0, 0], [1, 1])
    y = np.array([0.3, 0.9])
    assert np.array_equal(geometry.project(s, y), y)


def test_simplex_projection_symmetric_point():
    s = geometry.simplex(2, scale=1.0)
    assert np.allclose(geometry.project(s, [1.0, 1.0]), [0.5, 0.5])


def test_simplex_projection_sums_to_scale():
    rng = np.random.default_rng(0)
    s = geometry.simplex(5, scale=2.0)
    for _ in range(100):
        w = geometry.project(s, rng.normal(size=5) * 3)
        assert np.min(w) >= 0
        assert abs(w.sum() - 2.0) < 1e-12


def test_ball_projection():
    s = geometry.ball([0.0, 0.0], 1.0)
    p = geometry.project(s, [3.0, 4.0])
    assert np.allclose(p, [0.6, 0.8])
    inside = geometry.project(s, [0.1, 0.2])
    assert np.allclose(inside, [0.1, 0.2])


def test_invalid_bounds_rejected():
    with pytest.raises(DomainError):
        geometry.box([1.0], [1.0])
    with pytest.raises(DomainError):
        geometry.ball([0.0], -1.0)
    with pytest.raises(DomainError):
        geometry.project(geometry.box([0.0], [1.0]), [np.inf])


@pytest.mark.parametrize("make_set", [
    lambda: geometry.box([-1, 0.5, -3], [2, 1.5, 0]),
    lambda: geometry.ball([1.0, -1.0], 2.0),
    lambda: geometry.simplex(3, scale=1.5),
])
def test_projection_nonexpansive_and_idempotent(make_set):
    s = make_set()
    rng = np.random.default_rng(7)
    for _ in range(10_000 if s.kind != "simplex" else 2000):
        y = rng.normal(size=s.dim) * 4
        z = rng.normal(size=s.dim) * 4
        py, pz = geometry.project(s, y), geometry.project(s, z)
        assert np.linalg.norm(py - pz) <= np.linalg.norm(y - z) + 1e-12
        assert np.allclose(geometry.project(s, py), py, atol=1e-12)


def test_projection_optimality_inequality():
    # The projection is the closest member: <y - proj(y), z - proj(y)> <= 0
    # for every member z.
    s = geometry.box([-1, -1], [1, 1])
    rng = np.random.default_rng(3)
    for _ in range(1000):
        y = rng.normal(size=2) * 3
        z = geometry.sample_uniform(s, rng)
        py = geometry.project(s, y)
        assert float((y - py) @ (z - py)) <= 1e-10


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=6))
@settings(deadline=None, max_examples=200)
def test_projection_member_hypothesis(coords):
    y = np.array(coords)
    s = geometry.box(np.full(y.size, -1.0), np.full(y.size, 1.0))
    p = geometry.project(s, y)
    assert geometry.contains(s, p)


def test_intervals_kind_shares_box_geometry():
    s = geometry.intervals([-1, 0], [1, 2])
    assert s.kind == "product_of_intervals"
    assert np.allclose(geometry.project(s, [5, -5]), [1, 0])
    assert geometry.stationarity_measure(s, [0.0, 1.0], [1.0, 0.5]) == \
        pytest.approx(np.hypot(1.0, 0.5))


def test_membership_message_names_constraint():
    s = geometry.box([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(InfeasiblePointError, match=r"x\[1\].*above upper bound"):
        geometry.require_member(s, [0.5, 1.3])
    with pytest.raises(InfeasiblePointError, match=r"x\[0\].*below lower bound"):
        geometry.require_member(s, [-0.2, 0.5])


def test_stationarity_interior_is_norm():
    s = geometry.box([0, 0], [1, 1])
    assert geometry.stationarity_measure(s, [0.5, 0.5], [3.0, 4.0]) == pytest.approx(5.0)


def test_stationarity_upper_face_absorbs_nonpositive():
    s = geometry.box([0.0], [1.0])
    assert geometry.stationarity_measure(s, [1.0], [-2.0]) == 0.0
    assert geometry.stationarity_measure(s, [1.0], [2.0]) == pytest.approx(2.0)


def test_stationarity_lower_face_absorbs_nonnegative():
    s = geometry.box([0.0], [1.0])
    assert geometry.stationarity_measure(s, [0.0], [2.0]) == 0.0
    assert geometry.stationarity_measure(s, [0.0], [-2.0]) == pytest.approx(2.0)


def test_stationarity_unsupported_kinds():
    with pytest.raises(UnsupportedOperationError):
        geometry.stationarity_measure(geometry.ball([0.0], 1.0), [0.0], [1.0])
    with pytest.raises(UnsupportedOperationError):
        geometry.stationarity_measure(geometry.simplex(2), [0.5, 0.5], [1.0, 1.0])


def test_stationarity_zero_at_optimizers(all_catalog):
    for p in all_catalog.values():
        if not p.is_smooth:
            continue
        g = p.det_gradient(p.constants.x_star)
        s = geometry.stationarity_measure(p.feasible_set, p.constants.x_star, g)
        assert s <= 1e-8, p.name
