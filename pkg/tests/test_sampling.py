from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from chasebody.errors import EmptyRegion
from chasebody.geometry import AffineFrame, ConvexBody, Halfspace
from chasebody.omega import Region
from chasebody.sampling import (SampleCloud, directional_width, enclosing_ball, estimate_centroid,
                                find_thin_direction, minimum_enclosing_ball, sample_region, width_report)


def test_box_cloud_moments():
    K = ConvexBody.box([0.0, 0.0], [2.0, 1.0])
    cloud = sample_region(K, 4096, seed=1)
    assert cloud.n == 4096
    assert np.all(K.table.violations(cloud.points, K.ids, 1e-9) <= 1e-8)
    np.testing.assert_allclose(cloud.points.mean(axis=0), [1.0, 0.5], atol=0.05)
    np.testing.assert_allclose(cloud.points.var(axis=0), [1 / 3, 1 / 12], rtol=0.12)


def test_triangle_centroid():
    K = ConvexBody.polytope([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]], [0.0, 0.0, 1.0])
    cg = estimate_centroid(sample_region(K, 4096, seed=5))
    np.testing.assert_allclose(cg, [1 / 3, 1 / 3], atol=0.03)


def test_thin_slab_is_sampled_across_its_length():
    # a 100:1 slab; rounded directions must still traverse the long axis
    K = ConvexBody.box([-5.0, -0.05], [5.0, 0.05])
    pts = sample_region(K, 2048, seed=2).points
    assert pts[:, 0].min() < -4.0 and pts[:, 0].max() > 4.0
    assert abs(pts[:, 0].mean()) < 0.6


def test_sampling_is_deterministic_per_seed():
    K = ConvexBody.ball(np.zeros(3), 1.0)
    a = sample_region(K, 256, seed=9).points
    b = sample_region(K, 256, seed=9).points
    c = sample_region(K, 256, seed=10).points
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_one_dimensional_interval():
    pts = sample_region(ConvexBody.box([1.0], [3.0]), 2000, seed=0).points
    assert pts.min() >= 1.0 - 1e-9 and pts.max() <= 3.0 + 1e-9
    assert pts.mean() == pytest.approx(2.0, abs=0.08)


def test_empty_region_raises():
    K = ConvexBody((Halfspace([1.0, 0.0], -2.0),), ())
    reg = Region.ball(np.zeros(2), 1.0, 0.1).with_request(K)
    with pytest.raises(EmptyRegion):
        sample_region(reg, 64, seed=0)


def test_region_cloud_respects_padded_request():
    reg = Region.ball(np.zeros(2), 2.0, 0.1).with_request(ConvexBody.box([0.0, 0.0], [1.0, 1.0]))
    pts = sample_region(reg, 1024, seed=3).points
    assert pts[:, 0].min() >= -0.1 - 1e-6
    assert pts.max() <= 1.1 + 1e-6


def test_width_and_thin_direction():
    K = ConvexBody.box([-1.0, -1.0, -0.02], [1.0, 1.0, 0.02])
    cloud = sample_region(K, 1024, seed=4)
    assert directional_width(K, [0.0, 0.0, 1.0], cloud) == pytest.approx(0.04, abs=1e-6)
    rep = width_report(K, [1.0, 0.0, 0.0], cloud)
    assert rep.upper == pytest.approx(1.0, abs=1e-6)
    assert rep.lower == pytest.approx(-1.0, abs=1e-6)
    thin = find_thin_direction(K, AffineFrame.trivial(np.zeros(3)), 0.1, cloud)
    assert thin.direction is not None
    assert abs(thin.ambient[2]) == pytest.approx(1.0, abs=1e-3)
    assert find_thin_direction(K, AffineFrame.trivial(np.zeros(3)), 0.01, cloud).direction is None


def _slsqp_meb(P):
    c0 = P.mean(axis=0)
    x0 = np.append(c0, np.max(np.sum((P - c0) ** 2, axis=1)))
    cons = [{"type": "ineq", "fun": lambda z, p=p: z[-1] - (z[:-1] - p) @ (z[:-1] - p)} for p in P]
    res = minimize(lambda z: z[-1], x0, constraints=cons, method="SLSQP",
                   options={"ftol": 1e-14, "maxiter": 1000})
    return np.sqrt(res.x[-1])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 25), st.integers(0, 10_000))
def test_minimum_enclosing_ball_matches_slsqp(d, n, seed):
    P = np.random.default_rng(seed).normal(size=(n, d))
    ball = minimum_enclosing_ball(P)
    assert np.all(np.linalg.norm(P - ball.center, axis=1) <= ball.radius * (1 + 1e-9) + 1e-12)
    assert ball.radius == pytest.approx(_slsqp_meb(P), rel=1e-5, abs=1e-7)


def test_enclosing_ball_known_shapes():
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    b = minimum_enclosing_ball(tri)
    assert b.radius == pytest.approx(1 / np.sqrt(3))
    obtuse = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, 0.1]])
    assert minimum_enclosing_ball(obtuse).radius == pytest.approx(1.0)
    cloud = SampleCloud(tri, 0, 1, 0)
    assert enclosing_ball(cloud, 0.1).radius == pytest.approx(1.1 / np.sqrt(3))
