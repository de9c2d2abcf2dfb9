from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from chasebody.chaser import ChaserConfig
from chasebody.errors import BadParams, UnsupportedDimension
from chasebody.geometry import BallConstraint, ConvexBody, Halfspace
from chasebody.harness.experiment import offline_csv, run_csv, run_experiment, summary_csv
from chasebody.harness.render import body_polygon, render_trajectory
from chasebody.harness.scenarios import KINDS, Scenario, epigraph_reduce, generate_scenario
from chasebody.offline import PathProblem, dp_oracle, solve_offline
from chasebody.sampling import SamplerParams
from chasebody.verification import uniform_probes

DATA = Path(__file__).parent / "data"
FAST = ChaserConfig(sampler=SamplerParams(512, 4))


@pytest.mark.parametrize("kind", KINDS)
def test_generation_is_deterministic_and_round_trips(kind):
    a = generate_scenario(kind, {"T": 6}, seed=11)
    b = generate_scenario(kind, {"T": 6}, seed=11)
    assert a.dumps() == b.dumps()
    c = Scenario.loads(a.dumps())
    assert c.dumps() == a.dumps()
    assert json.loads(a.dumps())["schema"] == 1
    # each epigraph function contributes a wrapper request and its epigraph
    assert a.T == (12 if kind == "epigraph" else 6)
    assert a.dumps() != generate_scenario(kind, {"T": 6}, seed=12).dumps() or kind == "two-point"


def test_bad_params():
    with pytest.raises(BadParams):
        generate_scenario("spiral")
    with pytest.raises(BadParams):
        generate_scenario("nested", {"T": 0})
    with pytest.raises(BadParams):
        generate_scenario("nested", {"T": 2.5})
    with pytest.raises(BadParams):
        generate_scenario("lines", {"d": 3})
    with pytest.raises(BadParams):
        generate_scenario("two-point", {"angle": 2.0})
    with pytest.raises(BadParams):
        Scenario.from_json({"schema": 2, "dim": 1, "x0": [0.0], "requests": []})


def test_nested_requests_shrink():
    sc = generate_scenario("nested", {"d": 2, "T": 5}, seed=3)
    for t in range(sc.T - 1):
        inner = uniform_probes(sc.requests[t + 1], 1000, seed=t)
        assert all(sc.requests[t].contains(p) for p in inner)


def test_pancake_slabs_are_thin_and_overlapping():
    sc = generate_scenario("pancake", {"d": 3, "T": 8, "width": 0.05}, seed=2)
    tops = [K.halfspaces[0].offset for K in sc.requests]
    bottoms = [-K.halfspaces[1].offset for K in sc.requests]
    assert all(abs(t - b - 0.05) < 1e-12 for t, b in zip(tops, bottoms))
    assert max(bottoms) < min(tops)


def test_two_point_offline_cost_against_grid_oracle():
    sc = generate_scenario("two-point", {"T": 6}, seed=0)
    path = solve_offline(PathProblem(sc.requests, sc.x0), certify=True)
    dp = dp_oracle(PathProblem(sc.requests, sc.x0), {"h": 0.02, "lo": [-0.5, -0.5], "hi": [10.5, 1.5]})
    assert path.cost <= dp + 1e-9
    assert dp - path.cost <= 6 * 0.02 * math.sqrt(2) + 1e-3
    # frozen: D = 1, angle 0.1, six alternating requests
    assert path.cost == pytest.approx(5.627591, abs=1e-5)


def test_epigraph_of_zero_function():
    sc = epigraph_reduce([[(np.zeros(1), 0.0)]])
    assert sc.dim == 2 and sc.T == 2
    assert solve_offline(PathProblem(sc.requests, sc.x0)).cost == pytest.approx(0.0, abs=1e-12)


def test_epigraph_one_affine_piece_round_trips():
    sc = epigraph_reduce([[(np.array([0.5]), 1.0)]], x0=[0.0, 2.0])
    assert len(sc.requests[0].halfspaces) == 1
    assert len(sc.requests[1].halfspaces) == 2
    assert Scenario.loads(sc.dumps()).dumps() == sc.dumps()
    with pytest.raises(BadParams):
        epigraph_reduce([])
    with pytest.raises(BadParams):
        epigraph_reduce([[]])


def test_epigraph_family_offline_matches_grid_oracle():
    # three functions give six requests, the oracle's limit
    values = []
    for seed in (0, 1, 2):
        sc = generate_scenario("epigraph", {"d": 1, "T": 3}, seed)
        path = solve_offline(PathProblem(sc.requests, sc.x0), certify=True)
        dp = dp_oracle(PathProblem(sc.requests, sc.x0), {"h": 0.02, "lo": [-3.5, -0.5], "hi": [3.5, 3.5]})
        assert path.cost <= dp + 1e-9
        assert dp - path.cost <= 6 * 0.02 * math.sqrt(2) + 1e-3
        values.append(path.cost)
        again = solve_offline(PathProblem(sc.requests, sc.x0), certify=True)
        assert again.cost == path.cost
    assert values == pytest.approx([EPIGRAPH_COSTS[s] for s in (0, 1, 2)], abs=1e-5)


# frozen from the grid oracle check above (d = 1, three functions)
EPIGRAPH_COSTS = {0: 3.603943, 1: 2.930455, 2: 4.145705}


def test_zero_offline_scenario_is_flagged():
    reqs = [ConvexBody.ball(np.zeros(2), 2.0)] * 4
    sc = Scenario(2, np.zeros(2), reqs, {"generator": "manual"})
    rep = run_experiment(sc, ["greedy", "paper"], FAST)
    assert rep.zero_offline
    assert all(res.ratio is None for res in rep.results.values())
    assert "ratio" in summary_csv([rep])


def test_report_accounting_and_determinism():
    sc = generate_scenario("nested", {"d": 2, "T": 8}, seed=5)
    a = run_experiment(Scenario.loads(sc.dumps()), config=FAST)
    b = run_experiment(Scenario.loads(sc.dumps()), config=FAST)
    assert a.dumps() == b.dumps()
    assert "wall_time" not in a.dumps()
    for res in a.results.values():
        traj = np.vstack([sc.x0, res.run.responses])
        assert res.total_cost == pytest.approx(np.linalg.norm(np.diff(traj, axis=0), axis=1).sum(), abs=1e-9)
        assert res.ratio == pytest.approx(res.total_cost / a.offline_cost)
    assert run_csv(a.results["paper"].run, sc) == run_csv(b.results["paper"].run, sc)
    assert offline_csv(a.offline) == offline_csv(b.offline)
    assert run_csv(a.results["greedy"].run).count("\n") == sc.T + 1


def test_selector_failure_is_recorded():
    sc = generate_scenario("nested", {"d": 1, "T": 3}, seed=0)
    rep = run_experiment(sc, ["greedy", "nonsense"], FAST)
    assert rep.results["nonsense"].error.startswith("ValueError")
    assert rep.results["greedy"].error is None


# rendering ---------------------------------------------------------------

def test_body_polygon_of_box_and_disc():
    poly = body_polygon(ConvexBody.box([0.0, 0.0], [1.0, 2.0]), np.array([-5.0, -5.0]), np.array([5.0, 5.0]))
    assert len(poly) == 4
    xs = sorted({round(float(p[0]), 9) for p in poly})
    assert xs == [0.0, 1.0]
    disc = body_polygon(ConvexBody.ball(np.zeros(2), 1.0), np.array([-5.0, -5.0]), np.array([5.0, 5.0]))
    assert len(disc) == 64
    assert min(np.linalg.norm(p) for p in disc) >= 1.0 - 1e-12
    # a line through the disc becomes its chord
    line = ConvexBody((Halfspace([0.0, 1.0], 0.5), Halfspace([0.0, -1.0], -0.5)), (BallConstraint(np.zeros(2), 1.0),))
    seg = body_polygon(line, np.array([-5.0, -5.0]), np.array([5.0, 5.0]))
    np.testing.assert_allclose(sorted(p[0] for p in seg), [-math.sqrt(0.75), math.sqrt(0.75)])
    np.testing.assert_allclose([p[1] for p in seg], [0.5, 0.5])


def test_render_rejects_other_dimensions():
    sc = generate_scenario("nested", {"d": 3, "T": 2}, seed=0)
    rep = run_experiment(sc, ["greedy"], FAST)
    with pytest.raises(UnsupportedDimension):
        render_trajectory(rep)


def test_render_empty_range_is_canvas_only():
    sc = generate_scenario("nested", {"d": 2, "T": 3}, seed=0)
    rep = run_experiment(sc, ["greedy"], FAST)
    svg = render_trajectory(rep, t_range=(2, 2))
    assert svg.count("<") == 4   # xml header, svg, rect, closing tag
    assert "<rect" in svg and "polyline" not in svg


def test_render_single_phase_circle():
    # greedy steps from the origin to x = -0.5, which fixes the plot scale
    K = ConvexBody((Halfspace([1.0, 0.0], -0.5),), ())
    sc = Scenario(2, np.zeros(2), [K, K], {"generator": "manual"})
    rep = run_experiment(sc, ["paper", "greedy"], FAST)
    phases = rep.results["paper"].run.phases
    assert len(phases) == 1
    svg = render_trajectory(rep)
    assert svg.count("<circle data-phase") == 1
    r_attr = float(svg.split('data-phase="0"')[1].split('r="')[1].split('"')[0])
    pts = svg.split('id="greedy"')[1].split('points="')[1].split('"')[0].split()
    (x_a, _), (x_b, _) = [tuple(map(float, p.split(","))) for p in pts[:2]]
    scale = abs(x_a - x_b) / 0.5
    assert r_attr == pytest.approx(phases[0].R * scale, rel=1e-4)


def test_render_golden_file():
    sc = generate_scenario("two-point", {"T": 8}, seed=0)
    rep = run_experiment(sc, config=FAST)
    svg = render_trajectory(rep)
    golden = (DATA / "two_point_T8.svg").read_text()
    assert svg == golden
