"""Run selectors on a scenario, compare to the offline optimum, and write
CSV / JSON reports."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..chaser import ChaserConfig, RunReport, chase, greedy_selector
from ..errors import ChaseBodyError
from ..offline import OfflinePath, PathProblem, solve_offline
from .scenarios import Scenario

SELECTORS = ("paper", "greedy")
TINY_COST = 1e-9


@dataclass
class SelectorResult:
    selector: str
    total_cost: float = float("nan")
    ratio: float | None = None
    run: RunReport | None = None
    error: str | None = None

    def to_json(self) -> dict:
        out = {"selector": self.selector, "error": self.error}
        if self.run is not None:
            out.update({
                "total_cost": self.total_cost,
                "ratio": self.ratio,
                "trajectory": self.run.responses.tolist(),
                "step_costs": self.run.step_costs.tolist(),
                "phases": [p.to_json() for p in self.run.phases],
            })
        return out


@dataclass
class ExperimentReport:
    scenario: Scenario
    offline: OfflinePath
    results: dict
    zero_offline: bool
    config: ChaserConfig
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def offline_cost(self) -> float:
        return float(self.offline.cost)

    def to_json(self, include_wall_time: bool = False) -> dict:
        out = {
            "scenario": self.scenario.meta,
            "dim": self.scenario.dim,
            "T": self.scenario.T,
            "offline_cost": self.offline_cost,
            "offline_converged": self.offline.converged,
            "offline_path": self.offline.points.tolist(),
            "zero_offline": self.zero_offline,
            "selectors": {k: v.to_json() for k, v in sorted(self.results.items())},
        }
        if include_wall_time:
            out["wall_time"] = self.wall_time
        return out

    def dumps(self, include_wall_time: bool = False) -> str:
        return json.dumps(self.to_json(include_wall_time), sort_keys=True, indent=1)

    def summary_row(self) -> list[dict]:
        return [{
            "generator": self.scenario.meta.get("generator", ""),
            "seed": self.scenario.meta.get("seed", ""),
            "dim": self.scenario.dim,
            "T": self.scenario.T,
            "selector": name,
            "total_cost": res.total_cost,
            "offline_cost": self.offline_cost,
            "ratio": "" if res.ratio is None else res.ratio,
            "zero_offline": int(self.zero_offline),
            "error": res.error or "",
        } for name, res in sorted(self.results.items())]


def run_selector(name: str, scenario: Scenario, config: ChaserConfig) -> RunReport:
    if name == "paper":
        return chase(scenario.requests, scenario.x0, config)
    if name == "greedy":
        return greedy_selector(scenario.requests, scenario.x0, config.tolerance)
    raise ValueError(f"unknown selector {name!r}")


def run_experiment(scenario: Scenario, selectors: Sequence[str] = SELECTORS,
                   config: ChaserConfig | None = None) -> ExperimentReport:
    """Offline cost uses the fixed start x0.  Selector failures become error
    entries so the remaining selectors still run."""
    config = config or ChaserConfig()
    t0 = time.perf_counter()
    offline = solve_offline(PathProblem(list(scenario.requests), scenario.x0, None, config.tolerance),
                            certify=True)
    zero = offline.cost <= TINY_COST
    results = {}
    for name in selectors:
        try:
            run = run_selector(name, scenario, config)
        except (ChaseBodyError, ValueError) as exc:
            results[name] = SelectorResult(name, error=f"{type(exc).__name__}: {exc}")
            continue
        total = run.total_cost
        ratio = None if zero else total / max(offline.cost, TINY_COST)
        results[name] = SelectorResult(name, total, ratio, run)
    return ExperimentReport(scenario, offline, results, bool(zero), config, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# CSV output

def run_csv(run: RunReport, scenario: Scenario | None = None) -> str:
    """One row per request: t, request_id, coordinates, step cost, phase id,
    phase events and dim V."""
    d = run.responses.shape[1] if run.responses.size else (scenario.dim if scenario else 0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "request_id", *[f"x{i}" for i in range(d)], "step_cost", "phase_id", "phase_event", "dimV"])
    for t in range(run.T):
        w.writerow([t, t, *[repr(float(v)) for v in run.responses[t]], repr(float(run.step_costs[t])),
                    run.phase_ids[t], run.events[t], run.dim_v[t]])
    return buf.getvalue()


def offline_csv(path: OfflinePath) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    d = path.points.shape[1]
    w.writerow(["t", *[f"o{i}" for i in range(d)], "step_cost"])
    steps = path.steps
    for t in range(1, path.points.shape[0]):
        w.writerow([t - 1, *[repr(float(v)) for v in path.points[t]], repr(float(steps[t - 1]))])
    return buf.getvalue()


def summary_csv(reports: Sequence[ExperimentReport]) -> str:
    rows = [row for rep in reports for row in rep.summary_row()]
    buf = io.StringIO()
    cols = ["generator", "seed", "dim", "T", "selector", "total_cost", "offline_cost", "ratio",
            "zero_offline", "error"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
    return buf.getvalue()
