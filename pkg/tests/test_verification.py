from __future__ import annotations

import math

import numpy as np
import pytest

from chasebody.chaser import SHRUNK, ChaserConfig, chase
from chasebody.errors import SingularCovariance
from chasebody.geometry import AffineFrame, ConvexBody
from chasebody.harness.scenarios import generate_scenario
from chasebody.sampling import SamplerParams
from chasebody.verification import (GRUNBAUM, PathFamily, analytic_zoo, build_subspace_selector,
                                    check_cut_progress, check_grunbaum, check_potential_ledger,
                                    check_small_ball, polytope_min_width, random_family, simplex_body,
                                    theta_set)

FAST = ChaserConfig(sampler=SamplerParams(512, 4))


def test_half_ball_mass_is_one_half():
    rep = check_grunbaum(ConvexBody.ball(np.zeros(2), 1.0), 0.0, seed=1, probes=40_000, delta=2.0)
    assert rep["ratio"] == pytest.approx(0.5, abs=0.02)
    assert rep["pass"]
    np.testing.assert_allclose(rep["centroid"], 0.0, atol=0.02)


def test_large_epsilon_passes_trivially():
    rep = check_grunbaum(ConvexBody.box(np.zeros(2), np.ones(2)), 5.0, seed=0, probes=5000, delta=1.0)
    assert rep["bound"] >= 1 and rep["pass"]


@pytest.mark.parametrize("d", [1, 2, 3])
def test_simplex_cut_through_centroid(d):
    S, verts = simplex_body(d)
    rep = check_grunbaum(S, 0.0, seed=3, probes=100_000, delta=polytope_min_width(verts))
    assert rep["ratio"] <= GRUNBAUM + 0.05


def test_simplex_width():
    # the standard triangle conv(0, e1, e2) has minimum width 1/sqrt(2)
    _, verts = simplex_body(2)
    assert polytope_min_width(verts) == pytest.approx(1 / math.sqrt(2), rel=1e-4)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_small_ball_on_zoo(d):
    for zb in analytic_zoo(d):
        assert check_small_ball(zb.delta, zb.inradius, d), zb.name


def test_small_ball_examples():
    assert check_small_ball(1.0, 0.5, 2)
    assert check_small_ball(2.0, 1.0, 3)
    assert check_small_ball(0.1, 0.05, 3)
    assert not check_small_ball(1.0, 0.01, 2)


def test_static_family_has_unit_weights():
    k, r, gamma = 1, 1.0, 12.0
    th = theta_set(k, gamma, r)
    paths = np.repeat(np.concatenate([np.zeros((len(th), 1)), th], axis=1)[:, None], 5, axis=1)
    rep = build_subspace_selector(PathFamily(th, paths, k, gamma, 2.0, r))
    np.testing.assert_allclose(rep.mu, 1.0, atol=1e-12)
    np.testing.assert_allclose(rep.Y, 0.0, atol=1e-12)
    assert rep.movement == pytest.approx(0.0, abs=1e-12)
    assert rep.passed


def test_drifting_family_moves_by_the_drift():
    k, r, gamma = 2, 1.0, 24.0
    th = theta_set(k, gamma, r)
    T = 6
    drift = np.linspace(0.0, 0.8, T)
    paths = np.zeros((len(th), T, 3))
    paths[:, :, 0] = drift[None, :] - 0.8
    paths[:, :, 1:] = th[:, None, :]
    fam = PathFamily(th, paths, k, gamma, 2.0, r)
    fam.validate()
    rep = build_subspace_selector(fam)
    np.testing.assert_allclose(rep.mu, 1.0, atol=1e-9)
    assert rep.movement == pytest.approx(0.8, abs=1e-12)
    assert rep.passed


@pytest.mark.parametrize("seed", range(20))
def test_random_families_satisfy_identities(seed):
    k = 1 + seed % 2
    fam = random_family(k, 2, 6, seed)
    fam.validate()
    rep = build_subspace_selector(fam)
    assert rep.mean_mu_error <= 1e-9
    assert rep.mean_mu_u_error <= 1e-9 * fam.gamma
    assert rep.min_mu >= -1e-9
    assert rep.movement <= rep.bound
    assert rep.passed


def test_collapsed_theta_set_is_singular():
    k, r, gamma = 1, 1.0, 12.0
    th = np.full((16, 1), gamma * r)
    paths = np.repeat(np.concatenate([np.zeros((16, 1)), th], axis=1)[:, None], 3, axis=1)
    with pytest.raises(SingularCovariance):
        build_subspace_selector(PathFamily(th, paths, k, gamma, 2.0, r))


def test_cut_progress():
    ball = ConvexBody.ball(np.zeros(2), 1.0)
    frame = AffineFrame.trivial(np.zeros(2))
    assert check_cut_progress(ball, ball, frame) == 1.0
    half = ball.intersect(ConvexBody.polytope([[1.0, 0.0]], [0.0]))
    assert check_cut_progress(ball, half, frame, probes=20_000) == pytest.approx(0.5, abs=0.02)
    # projection onto the second axis of a cut along the first is unchanged
    V = AffineFrame.from_vectors(np.zeros(2), [[1.0, 0.0]])
    assert check_cut_progress(ball, half, V, probes=200) == pytest.approx(1.0)


def test_potential_ledger_on_closed_phases():
    sc = generate_scenario("pancake", {"d": 2, "T": 12}, seed=0)
    rep = chase(sc.requests, sc.x0, FAST)
    checks = check_potential_ledger(rep, sc.requests)
    assert any(c.end_condition == SHRUNK for c in checks), "expected a shrunk phase"
    for c in checks:
        assert c.passed and not c.skipped


def test_potential_ledger_on_moving_requests():
    reqs = [ConvexBody.ball([0.5 * t, 0.0], 0.2) for t in range(15)]
    rep = chase(reqs, np.zeros(2), FAST)
    for c in check_potential_ledger(rep, reqs):
        assert c.skipped or c.passed
