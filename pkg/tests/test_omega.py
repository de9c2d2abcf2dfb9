from __future__ import annotations

import numpy as np
import pytest

from chasebody import _kernels as K
from chasebody.errors import DimensionMismatch
from chasebody.geometry import BallConstraint, ConvexBody
from chasebody.omega import (ReachableConstraint, Region, contains_many, interior_point, prune_atoms,
                             refine_with_reachable, region_contains, region_violation)


def interval(a, b):
    return ConvexBody.box([a], [b])


def test_region_is_enclosure_and_padded_requests():
    reg = Region.ball(np.zeros(2), 3.0, 0.5).with_request(ConvexBody.box([0.0, 0.0], [1.0, 1.0]))
    assert region_contains(reg, [1.4, 0.5])
    assert not region_contains(reg, [1.6, 0.5])
    # the padded corner is rounded: (1 + 0.4, 1 + 0.4) is 0.566 from the corner
    assert not region_contains(reg, [1.4, 1.4])
    assert region_contains(reg, [1.3, 1.3])
    assert not region_contains(reg, [-2.9, -0.6])


def test_repeated_request_returns_same_region():
    reg = Region.ball(np.zeros(2), 3.0, 0.5)
    K1 = ConvexBody.ball([1.0, 0.0], 1.0)
    a = reg.with_request(K1)
    assert a.with_request(ConvexBody.ball([1.0, 0.0], 1.0)) is a
    assert a.with_request(ConvexBody.ball([1.0, 0.1], 1.0)) is not a


def test_region_rejects_bad_requests():
    with pytest.raises(DimensionMismatch):
        Region(BallConstraint(np.zeros(2), 1.0), (ConvexBody.ball(np.zeros(3), 1.0, 0.1),), (), 0.1)
    with pytest.raises(ValueError):
        Region(BallConstraint(np.zeros(2), 1.0), (ConvexBody.ball(np.zeros(2), 1.0, 0.2),), (), 0.1)


def test_prune_atoms():
    enc = BallConstraint(np.zeros(2), 1.0)
    e1 = np.array([1.0, 0.0])
    atoms = [(K.HALFSPACE, e1, 2.0), (K.HALFSPACE, e1, 0.5), (K.BALL, np.zeros(2), 3.0),
             (K.HALFSPACE, e1.copy(), 0.2), (K.HALFSPACE, -e1, 0.9)]
    out = prune_atoms(atoms, enc)
    assert len(out) == 3
    assert out[0][2] == 0.2
    assert out[1][0] == K.BALL
    assert out[2][2] == 0.9


def test_tighten_adds_valid_cut():
    reg = Region.ball(np.zeros(2), 3.0, 0.1).with_request(ConvexBody.box([0.0, 0.0], [1.0, 1.0]))
    y = np.array([1.1, 1.1])   # inside the padded envelope, outside the rounded corner
    assert reg.tighten(y) == 1
    assert region_violation(reg, y) > 0
    assert region_contains(reg, [1.05, 1.05])


def test_interior_point_and_vectorized_membership():
    reg = Region.ball(np.zeros(2), 2.0, 0.1).with_request(ConvexBody.ball([1.5, 0.0], 1.0))
    p = interior_point(reg)
    assert p is not None and region_contains(reg, p)
    pts = np.array([[1.0, 0.0], [-1.0, 0.0], [2.1, 0.0]])
    np.testing.assert_array_equal(contains_many(reg, pts), [True, False, False])
    empty = Region.ball(np.zeros(2), 1.0, 0.1).with_request(ConvexBody.ball([5.0, 0.0], 1.0))
    assert interior_point(empty) is None


def test_reachable_set_on_intervals():
    # paths y1 in [0,1], y2 in [3,4] with movement <= 2.5 end in [3, 3.5]
    base = Region.ball(np.zeros(1), 10.0, 0.25)
    rc = ReachableConstraint((interval(0, 1), interval(3, 4)), base, 2.5, 0.25)
    assert rc.feasible
    assert rc.min_movement == pytest.approx(2.0, abs=1e-6)
    assert rc.distance([4.0]) == pytest.approx(0.5, abs=1e-5)
    assert rc.distance([3.2]) == pytest.approx(0.0, abs=1e-6)
    assert rc.distance([1.0]) == pytest.approx(2.0, abs=1e-5)
    h, _ = rc.support(np.array([[1.0], [-1.0]]))
    np.testing.assert_allclose(h, [3.5, -3.0], atol=1e-5)
    reg = refine_with_reachable(base, rc)
    assert region_contains(reg, [3.7])
    assert not region_contains(reg, [3.9])
    assert not region_contains(reg, [2.6])


def test_reachable_set_over_budget_is_empty():
    base = Region.ball(np.zeros(1), 10.0, 0.25)
    rc = ReachableConstraint((interval(0, 1), interval(3, 4)), base, 1.5, 0.25)
    assert not rc.feasible
    assert rc.distance([3.0]) == np.inf
    assert not region_contains(refine_with_reachable(base, rc), [3.0])


def test_reachable_in_the_plane_matches_geometry():
    # one disc request: the reachable set is the disc itself (free start)
    base = Region.ball(np.zeros(2), 5.0, 0.1)
    rc = ReachableConstraint((ConvexBody.ball([1.0, 1.0], 1.0),), base, 1.0, 0.1)
    assert rc.distance([4.0, 5.0]) == pytest.approx(4.0, abs=1e-5)
    h, _ = rc.support(np.array([[0.6, 0.8]]))
    assert h[0] == pytest.approx(1.4 + 1.0, abs=1e-5)


def test_reachable_constraint_validation():
    base = Region.ball(np.zeros(1), 1.0, 0.1)
    with pytest.raises(ValueError):
        ReachableConstraint((), base, 1.0, 0.1)
    with pytest.raises(ValueError):
        ReachableConstraint((interval(0, 1),), base, 0.0, 0.1)
    with pytest.raises(ValueError):
        refine_with_reachable(base, ReachableConstraint((interval(0, 1),), base, 1.0, 0.2))
