from __future__ import annotations

import math

import numpy as np
import pytest

from chasebody.chaser import (FAITHFUL, OPEN, PRACTICAL, ChaserConfig, beta_value,
                              chase, competitive_constants, greedy_selector, omega_recursion_exact,
                              omega_recursion_log2, run_global_phase)
from chasebody.errors import BadParams, RequestInfeasible
from chasebody.geometry import ConvexBody, Halfspace, distance_to_body
from chasebody.sampling import SamplerParams

FAST = ChaserConfig(sampler=SamplerParams(512, 4))


@pytest.mark.parametrize("d", range(1, 9))
def test_faithful_constants(d):
    c = competitive_constants(d, ChaserConfig(mode=FAITHFUL))
    assert c.alpha == 192 * (d + 1) ** 4
    assert c.R(1.0) == 7 * c.alpha
    assert c.R(0.25) == 7 * c.alpha * 0.25
    assert c.zeta == tuple(65 * (k + 1) ** 4 for k in range(1, d + 1))
    want_beta = sum(50 * k * math.log2(k + 1) * (c.zeta[k - 1] * c.omega[d - k] + 7 * c.alpha + 1)
                    for k in range(1, d + 1))
    assert c.beta == want_beta
    assert c.omega_log2[-1] <= 30 * d
    assert c.ratio_bound == 2 ** (30 * d)


def test_omega_recursion_small_values():
    # omega_1 = 24^6, omega_2 = 24^6 * 24^6 + 48^6
    assert omega_recursion_exact(2) == [1, 24 ** 6, 24 ** 12 + 48 ** 6]
    logs = omega_recursion_log2(12)
    assert logs[:9] == pytest.approx([math.log2(v) for v in omega_recursion_exact(8)])
    assert all(b > a for a, b in zip(logs, logs[1:]))
    assert logs[12] <= 30 * 12


def test_beta_uses_base_two_logarithm():
    assert beta_value(1, 1.0, [1.0], [1.0, 1.0]) == pytest.approx(50 * 1 * 1.0 * (1 + 7 + 1))


def test_practical_constants_and_overrides():
    c = competitive_constants(2, ChaserConfig(mode=PRACTICAL, alpha_override=4.0, zeta_override=2.0))
    assert c.alpha == 4.0 and c.zeta == (2.0, 2.0)
    assert c.budget(1, 0.5) == 2.0 * c.omega[1] * 0.5
    assert c.thin_threshold(2, 1.0) == 1.0
    with pytest.raises(BadParams):
        ChaserConfig(mode="bogus")
    with pytest.raises(BadParams):
        ChaserConfig(alpha_override=-1.0)
    with pytest.raises(BadParams):
        competitive_constants(0)


def test_greedy_selector_projects():
    reqs = [ConvexBody.ball([2.0, 0.0], 1.0), ConvexBody.box([0.0, 3.0], [1.0, 4.0])]
    rep = greedy_selector(reqs, [0.0, 0.0])
    np.testing.assert_allclose(rep.responses[0], [1.0, 0.0], atol=1e-7)
    np.testing.assert_allclose(rep.responses[1], [1.0, 3.0], atol=1e-7)
    assert rep.total_cost == pytest.approx(4.0, abs=1e-6)
    with pytest.raises(RequestInfeasible):
        greedy_selector([ConvexBody.ball([0.0, 0.0], 1.0).intersect(ConvexBody.ball([4.0, 0.0], 1.0))],
                        [0.0, 0.0])


def _check_feasible(rep, reqs):
    scale = 1 + max(np.linalg.norm(rep.x0), np.abs(rep.responses).max())
    for x, K in zip(rep.responses, reqs):
        assert distance_to_body(x, K, tol=1e-12) <= 1e-6 * scale


def test_chase_is_feasible_and_accounted():
    rng = np.random.default_rng(7)
    reqs = []
    for _ in range(12):
        c = rng.uniform(-2, 2, 2)
        reqs.append(ConvexBody.ball(c, rng.uniform(0.3, 1.0)))
    rep = chase(reqs, np.zeros(2), FAST)
    _check_feasible(rep, reqs)
    prev = np.vstack([rep.x0, rep.responses[:-1]])
    assert rep.total_cost == pytest.approx(np.linalg.norm(rep.responses - prev, axis=1).sum(), abs=1e-9)
    assert rep.phases[-1].end_condition == OPEN
    assert len(rep.phase_ids) == len(reqs)


def test_chase_is_deterministic():
    reqs = [ConvexBody.box([t % 3, 0.0], [t % 3 + 0.5, 1.0]) for t in range(8)]
    a = chase(reqs, np.zeros(2), FAST)
    b = chase(reqs, np.zeros(2), FAST)
    assert np.array_equal(a.responses, b.responses)
    assert a.to_json() == b.to_json()


def test_request_containing_the_position_costs_nothing():
    reqs = [ConvexBody.ball([0.0, 0.0], 5.0)] * 5
    rep = chase(reqs, np.zeros(2), FAST)
    # the first response may move towards the region centroid but stays in the request
    _check_feasible(rep, reqs)


def test_stationary_target_keeps_the_phase_open_at_no_extra_cost():
    # a padded point target is exactly as wide as the thin threshold, so nothing is certified thin
    K = ConvexBody.ball([0.3, -0.2], 1e-3)
    first, resp, used = run_global_phase(np.zeros(2), 1.0, [K] * 60, FAST)
    assert first.end_condition == OPEN
    assert used == 60
    assert np.all(np.linalg.norm(resp - K.balls[0].center, axis=1) <= 1e-3 + 1e-6)
    # after the first cut the estimate is cached, so later responses do not move
    assert np.linalg.norm(np.diff(resp[1:], axis=0), axis=1).max() <= 1e-9


def test_one_dimensional_chasing():
    reqs = [ConvexBody.box([t], [t + 0.5]) for t in range(6)]
    rep = chase(reqs, [0.0], FAST)
    _check_feasible(rep, reqs)


def test_lines_in_the_plane():
    reqs = []
    for t in range(8):
        ang = 0.4 * t
        n = np.array([math.cos(ang), math.sin(ang)])
        reqs.append(ConvexBody((Halfspace(n, 0.5), Halfspace(-n, -0.5)), ()))
    rep = chase(reqs, np.zeros(2), FAST)
    _check_feasible(rep, reqs)
