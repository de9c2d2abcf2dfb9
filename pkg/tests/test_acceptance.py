"""Acceptance criteria, one test and one summary line each.

Run with ``pytest tests/test_acceptance.py -v``; the PASS/FAIL lines are
echoed in the terminal summary (and printed directly under ``-s``).
"""
from __future__ import annotations

import filecmp
import time
from dataclasses import dataclass

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from chasebody.chaser import FAITHFUL, OPEN, ChaserConfig, RunReport, chase, competitive_constants
from chasebody.geometry import BallConstraint, ConvexBody, Halfspace, distance_to_body
from chasebody.harness import cli
from chasebody.harness.experiment import run_experiment
from chasebody.harness.scenarios import Scenario, generate_scenario
from chasebody.offline import PathProblem, dp_oracle, solve_offline
from chasebody.verification import (GRUNBAUM, analytic_zoo, build_subspace_selector, check_grunbaum,
                                    check_potential_ledger, check_small_ball, random_family,
                                    uniform_probes)

SUITE_SIZE = 200
SUITE_BUDGET_S = 600.0
TWO_POINT_TS = (10, 20, 40, 60, 100)
GREEDY_SLOPE = 0.05
# measured once on the two-point suite and frozen; see the README
PAPER_RATIO_BOUND = 2.0


def _record(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {number} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def suite_specs() -> list[tuple[str, dict, int]]:
    """Scenario kinds cycled over d in {1, 2, 3} with T between 5 and 40."""
    out = []
    for seed in range(SUITE_SIZE):
        kinds = [("nested", {"d": 1 + seed % 3}), ("pancake", {"d": 1 + seed % 3}),
                 ("random-halfspace", {"d": 1 + seed % 3}), ("lines", {}),
                 ("two-point", {"d": 2 + seed % 2}), ("epigraph", {"d": 1 + seed % 2})]
        kind, params = kinds[seed % len(kinds)]
        params = dict(params, T=5 + (seed * 7) % 36)
        out.append((kind, params, seed))
    return out


@dataclass
class SuiteRun:
    kind: str
    params: dict
    seed: int
    scenario: Scenario
    report: RunReport


@pytest.fixture(scope="module")
def suite():
    runs = []
    t0 = time.perf_counter()
    for kind, params, seed in suite_specs():
        sc = generate_scenario(kind, params, seed)
        runs.append(SuiteRun(kind, params, seed, sc, chase(sc.requests, sc.x0)))
    return runs, time.perf_counter() - t0


def test_criterion_1_feasibility(suite):
    runs, elapsed = suite
    worst = 0.0
    offenders = []
    for run in runs:
        rep = run.report
        scale = 1.0 + max(float(np.linalg.norm(rep.x0)), float(np.abs(rep.responses).max()))
        for t, (x, K) in enumerate(zip(rep.responses, run.scenario.requests)):
            rel = distance_to_body(x, K, tol=1e-12) / scale
            worst = max(worst, rel)
            if rel > 1e-6:
                offenders.append((run.kind, run.seed, t))
    dims = {run.scenario.dim for run in runs}
    ok = not offenders and elapsed < SUITE_BUDGET_S and len(runs) >= 200 and dims == {1, 2, 3}
    _record(1, "feasibility", ok,
            f"{len(runs)} scenarios, worst {worst:.2e}, {len(offenders)} offenders, {elapsed:.0f} s")
    assert not offenders, offenders[:5]
    assert elapsed < SUITE_BUDGET_S


def _random_instance(rng) -> PathProblem:
    d = int(rng.integers(1, 3))
    T = int(rng.integers(2, 7))
    reqs = []
    for _ in range(T):
        c = rng.uniform(-2, 2, d)
        rad = rng.uniform(0.2, 1.0)
        hs = []
        for _ in range(int(rng.integers(0, 3))):
            u = rng.normal(size=d)
            u /= np.linalg.norm(u)
            hs.append(Halfspace(u, float(u @ c) + rng.uniform(0.0, 0.8) * rad))
        reqs.append(ConvexBody(tuple(hs), (BallConstraint(c, rad),), 0.0, d))
    return PathProblem(reqs, rng.uniform(-1, 1, d))


def test_criterion_2_offline_matches_grid_oracle():
    rng = np.random.default_rng(31)
    h = 0.05
    worst_excess = -np.inf
    for _ in range(50):
        prob = _random_instance(rng)
        d, T = prob.dim, len(prob.requests)
        dp = dp_oracle(prob, {"h": h, "lo": np.full(d, -3.5), "hi": np.full(d, 3.5)})
        cost = solve_offline(prob, certify=True).cost
        worst_excess = max(worst_excess, abs(cost - dp) - (1e-3 + T * h * np.sqrt(d)))
    ok = worst_excess <= 0
    _record(2, "offline oracle", ok, f"50 instances, worst margin {worst_excess:+.4f}")
    assert ok


def test_criterion_3_constants():
    failures = []
    for d in range(1, 9):
        c = competitive_constants(d, ChaserConfig(mode=FAITHFUL))
        zeta = tuple(65 * (k + 1) ** 4 for k in range(1, d + 1))
        beta = sum(50 * k * np.log2(k + 1) * (zeta[k - 1] * c.omega[d - k] + 7 * c.alpha + 1)
                   for k in range(1, d + 1))
        checks = [c.alpha == 192 * (d + 1) ** 4, c.R(1.0) == 7 * c.alpha, c.R(0.5) == 3.5 * c.alpha,
                  c.zeta == zeta, c.beta == beta, c.omega_log2[-1] <= 30 * d]
        if not all(checks):
            failures.append(d)
    _record(3, "constants", not failures, f"d = 1..8, failing {failures}")
    assert not failures


def test_criterion_4_potential_ledger(suite):
    runs, _ = suite
    phases = passed = skipped = 0
    failed = []
    for run in runs:
        if all(ph.end_condition == OPEN for ph in run.report.phases):
            continue
        for c in check_potential_ledger(run.report, run.scenario.requests):
            phases += 1
            if c.skipped:
                skipped += 1
            elif c.passed:
                passed += 1
            else:
                failed.append((run.kind, run.seed, c.phase_id))
    ok = not failed and passed > 0
    _record(4, "potential ledger", ok,
            f"{phases} closed phases, {passed} pass, {skipped} skipped (offline not converged), "
            f"{len(failed)} fail")
    assert ok, failed[:5]


def test_criterion_5_grunbaum_and_small_ball():
    worst_gap = -np.inf
    small_ball_fail = []
    for d in (1, 2, 3):
        for zb in analytic_zoo(d):
            if not check_small_ball(zb.delta, zb.inradius, d):
                small_ball_fail.append((zb.name, d))
            if zb.name not in ("ball", "unit-cube", "box", "simplex"):
                continue
            # the probe centroid's error is the epsilon of the cut
            eps = float(np.linalg.norm(uniform_probes(zb.body, 100_000, 2).mean(axis=0) - zb.centroid))
            rep = check_grunbaum(zb.body, eps, seed=1, probes=100_000, delta=zb.delta)
            worst_gap = max(worst_gap, rep["ratio"] - (rep["bound"] + 0.05))
    ok = worst_gap <= 0 and not small_ball_fail
    _record(5, "Grunbaum and small ball", ok,
            f"worst mass minus bound {worst_gap:+.4f} (1 - 1/e = {GRUNBAUM:.4f}), "
            f"small-ball failures {small_ball_fail}")
    assert ok


def test_criterion_6_weight_identities():
    bad = []
    for seed in range(20):
        k = 1 + seed % 2
        fam = random_family(k, 2, 6, seed)
        assert fam.gamma == 12 * k
        rep = build_subspace_selector(fam)
        ok = (rep.mean_mu_error <= 1e-9 and rep.mean_mu_u_error <= 1e-9 * fam.gamma
              and rep.min_mu >= -1e-9 and rep.movement <= rep.bound)
        if not ok:
            bad.append(seed)
    _record(6, "weight identities", not bad, f"20 families, failing seeds {bad}")
    assert not bad


def test_criterion_7_two_point_separation():
    greedy, paper = [], []
    for T in TWO_POINT_TS:
        rep = run_experiment(generate_scenario("two-point", {"T": T}, seed=0), ["greedy", "paper"])
        greedy.append(rep.results["greedy"].ratio)
        paper.append(rep.results["paper"].ratio)
    linear = all(g >= GREEDY_SLOPE * T for g, T in zip(greedy, TWO_POINT_TS))
    growing = all(b > a for a, b in zip(greedy, greedy[1:]))
    bounded = max(paper) < PAPER_RATIO_BOUND
    ok = linear and growing and bounded
    fmt = lambda xs: ", ".join(f"{x:.2f}" for x in xs)  # noqa: E731
    _record(7, "two-point separation", ok,
            f"T = {list(TWO_POINT_TS)}: greedy [{fmt(greedy)}], paper [{fmt(paper)}] < {PAPER_RATIO_BOUND}")
    assert ok


def _suite_outputs(root, scenarios):
    root.mkdir()
    paths = []
    for i, sc in enumerate(scenarios):
        p = root / f"scenario_{i:03d}.json"
        sc.save(p)
        paths.append(str(p))
    rc = cli.main(["report", *paths, "--seed", "0", "-o", str(root / "summary.csv"),
                   "--json", str(root / "reports.json"), "--svg-dir", str(root / "svg")])
    assert rc == 0
    for i, p in enumerate(paths):
        rc = cli.main(["run", p, "--seed", "0", "-o", str(root / f"run_{i:03d}.csv"),
                       "--json", str(root / f"run_{i:03d}.json")])
        assert rc == 0


def test_criterion_8_determinism(tmp_path):
    # the planar part of the suite, so SVGs are part of the comparison
    scenarios = [generate_scenario(k, p, s) for k, p, s in suite_specs()[:36]]
    scenarios = [sc for sc in scenarios if sc.dim == 2]
    _suite_outputs(tmp_path / "a", scenarios)
    _suite_outputs(tmp_path / "b", scenarios)
    files = sorted(str(p.relative_to(tmp_path / "a")) for p in (tmp_path / "a").rglob("*") if p.is_file())
    _, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", files, shallow=False)
    n_svg = sum(f.endswith(".svg") for f in files)
    ok = not mismatch and not errors and n_svg == len(scenarios)
    _record(8, "determinism", ok,
            f"{len(scenarios)} planar scenarios, {len(files)} files ({n_svg} SVG), mismatched {mismatch + errors}")
    assert ok
