import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixlab.geometry import (INFINITE, Ball, Box, DimensionMismatch, Interval, WholeSpace,
                             body_from_dict, body_to_dict, center, contains, corner, diameter,
                             project)

BODIES = [Interval(-1.0, 1.0), Box([0.0, -1.0], [3.0, 4.0]), Ball([0.5, -0.5, 1.0], 1.5),
          WholeSpace(2)]


def test_interval_clamp():
    assert project(Interval(-1, 1), 2.0) == 1.0
    assert project(Interval(-1, 1), -3.5) == -1.0
    assert project(Interval(-1, 1), 0.25) == 0.25


def test_ball_projection_matches_boundary_search():
    K = Ball([0.0, 0.0], 1.0)
    x = np.array([3.0, 4.0])
    got = project(K, x)
    np.testing.assert_allclose(got, [0.6, 0.8], atol=1e-15)
    # independent check: densest point on the circle
    theta = np.linspace(0, 2 * np.pi, 200_001)
    circle = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    best = circle[np.argmin(np.linalg.norm(circle - x, axis=1))]
    np.testing.assert_allclose(got, best, atol=1e-4)


@pytest.mark.parametrize("K", BODIES, ids=lambda K: type(K).__name__)
def test_points_inside_are_fixed(K, rng):
    x = project(K, rng.normal(scale=3, size=(500, K.dim)))
    np.testing.assert_array_equal(project(K, x), x)
    assert contains(K, x)


def test_diameters():
    assert diameter(Interval(-0.5, 0.5)) == 1.0
    assert diameter(Ball([1.0, 2.0], 0.7)) == 1.4
    assert diameter(Box([0, 0], [3, 4])) == 5.0
    assert diameter(WholeSpace(3)) is INFINITE


def test_box_diameter_by_sampling(rng):
    K = Box([0, 0], [3, 4])
    a = project(K, rng.uniform(-1, 5, size=(20_000, 2)))
    b = project(K, rng.uniform(-1, 5, size=(20_000, 2)))
    sampled = np.linalg.norm(a - b, axis=1).max()
    assert sampled <= diameter(K) + 1e-12
    assert sampled >= 0.99 * diameter(K)


def test_infinite_refuses_arithmetic():
    with pytest.raises(TypeError):
        INFINITE * 2.0


@pytest.mark.parametrize("K", BODIES, ids=lambda K: type(K).__name__)
def test_non_expansive(K, rng):
    x = rng.normal(scale=4, size=(10_000, K.dim))
    y = rng.normal(scale=4, size=(10_000, K.dim))
    lhs = np.linalg.norm(project(K, x) - project(K, y), axis=1)
    assert np.all(lhs <= np.linalg.norm(x - y, axis=1) + 1e-12)


@given(st.lists(st.floats(-100, 100), min_size=3, max_size=3),
       st.floats(0, 10), st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
def test_ball_idempotent(c, r, x):
    K = Ball(c, r)
    p = project(K, np.array(x))
    np.testing.assert_array_equal(project(K, p), p)


@given(st.floats(-50, 50), st.floats(0, 50), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_interval_non_expansive_property(lo, width, x, y):
    K = Interval(lo, lo + width)
    assert abs(project(K, x) - project(K, y)) <= abs(x - y) + 1e-12


def test_validation():
    with pytest.raises(ValueError):
        Interval(1, 0)
    with pytest.raises(ValueError):
        Ball([0.0], -1)
    with pytest.raises(ValueError):
        Box([0, 1], [1, 0])
    with pytest.raises(DimensionMismatch):
        project(Box([0, 0], [1, 1]), np.zeros(3))
    with pytest.raises(DimensionMismatch):
        project(Ball([0, 0], 1), 0.5)


def test_corner_and_center():
    np.testing.assert_array_equal(corner(Interval(-0.5, 0.5)), [-0.5])
    np.testing.assert_array_equal(center(Box([0, 2], [2, 4])), [1, 3])
    np.testing.assert_array_equal(corner(Ball([1.0, 1.0], 2.0)), [-1.0, 1.0])
    with pytest.raises(ValueError):
        corner(WholeSpace(1))


@pytest.mark.parametrize("K", BODIES, ids=lambda K: type(K).__name__)
def test_config_round_trip(K):
    assert body_from_dict(body_to_dict(K)) == K
