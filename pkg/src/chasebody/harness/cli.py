"""Command line: chasebody generate|run|offline|verify|report."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from ..chaser import FAITHFUL, PRACTICAL, ChaserConfig, competitive_constants
from ..errors import ChaseBodyError
from ..offline import FREE, PathProblem, solve_offline
from ..sampling import SamplerParams
from .experiment import SELECTORS, offline_csv, run_csv, run_experiment, summary_csv
from .render import render_trajectory
from .scenarios import KINDS, Scenario, generate_scenario

SEED_ENV = "CHASEBODY_SEED"
SUITES = ("constants", "grunbaum", "smallball", "lemmakey", "ledger", "cut")
SUITE_ALIASES = {"small-ball": "smallball", "lemma-key": "lemmakey"}
LEDGER_SCENARIOS = (("nested", {"d": 2, "T": 12}), ("two-point", {"T": 20}), ("pancake", {"d": 2, "T": 12}))


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"{SEED_ENV} must be an integer, got {raw!r}")


def _param(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, val = text.split("=", 1)
    try:
        return key, json.loads(val)
    except json.JSONDecodeError:
        return key, val


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _config(args) -> ChaserConfig:
    sp = SamplerParams() if args.samples is None else SamplerParams(args.samples)
    return ChaserConfig(mode=args.mode, seed=args.seed, sampler=sp)


def cmd_generate(args) -> int:
    sc = generate_scenario(args.kind, dict(args.param), args.seed)
    _write(args.out, sc.dumps() + "\n")
    return 0


def cmd_run(args) -> int:
    sc = Scenario.load(args.scenario)
    rep = run_experiment(sc, [args.selector], _config(args))
    res = rep.results[args.selector]
    if res.error is not None:
        print(f"{args.selector} failed: {res.error}", file=sys.stderr)
        return 2
    _write(args.out, run_csv(res.run, sc))
    if args.json:
        Path(args.json).write_text(rep.dumps() + "\n")
    if args.svg:
        Path(args.svg).write_text(render_trajectory(rep))
    ratio = "n/a (zero offline cost)" if res.ratio is None else f"{res.ratio:.6g}"
    print(f"{args.selector}: cost {res.total_cost:.6g}, offline {rep.offline_cost:.6g}, ratio {ratio}",
          file=sys.stderr)
    return 0


def cmd_offline(args) -> int:
    sc = Scenario.load(args.scenario)
    start = FREE if args.free_start else sc.x0
    path = solve_offline(PathProblem(sc.requests, start), certify=True)
    _write(args.out, offline_csv(path))
    print(f"offline cost {path.cost:.9g} (lower bound {path.lower_bound:.9g}, "
          f"converged {path.converged})", file=sys.stderr)
    return 0


def _verify_constants(seed: int) -> list[tuple[str, bool]]:
    out = []
    for d in range(1, 9):
        c = competitive_constants(d, ChaserConfig(mode=FAITHFUL))
        ok = c.alpha == 192 * (d + 1) ** 4 and all(z == 65 * (k + 1) ** 4 for k, z in enumerate(c.zeta, 1))
        ok = ok and c.R(1.0) == 7 * c.alpha and c.omega_log2[-1] <= 30 * d
        out.append((f"constants d={d}", bool(ok)))
    return out


def _verify_grunbaum(seed: int) -> list[tuple[str, bool]]:
    from ..verification import analytic_zoo, check_grunbaum
    out = []
    for d in (1, 2, 3):
        for zb in analytic_zoo(d):
            rep = check_grunbaum(zb.body, 0.0, seed, delta=zb.delta)
            out.append((f"grunbaum {zb.name} d={d} ratio={rep['ratio']:.4f}", bool(rep["pass"])))
    return out


def _verify_small_ball(seed: int) -> list[tuple[str, bool]]:
    from ..verification import analytic_zoo, check_small_ball
    return [(f"small-ball {zb.name} d={d}", check_small_ball(zb.delta, zb.inradius, d))
            for d in (1, 2, 3) for zb in analytic_zoo(d)]


def _verify_lemma_key(seed: int) -> list[tuple[str, bool]]:
    from ..verification import build_subspace_selector, random_family
    out = []
    for i in range(20):
        k = 1 + i % 2
        fam = random_family(k, 2, 6, seed + i)
        rep = build_subspace_selector(fam)
        out.append((f"lemma-key family {i} k={k} movement={rep.movement:.4f}/{rep.bound:.4f}", rep.passed))
    return out


def _verify_ledger(seed: int) -> list[tuple[str, bool | None]]:
    from ..chaser import chase
    from ..verification import check_potential_ledger
    out = []
    for kind, params in LEDGER_SCENARIOS:
        sc = generate_scenario(kind, params, seed)
        rep = chase(sc.requests, sc.x0, ChaserConfig(seed=seed))
        for c in check_potential_ledger(rep, sc.requests):
            label = f"ledger {kind} phase {c.phase_id} {c.end_condition} lhs={c.lhs:.6g} rhs={c.rhs:.6g}"
            out.append((label, None if c.skipped else c.passed))
    return out


def _verify_cut(seed: int) -> list[tuple[str, bool]]:
    from ..geometry import AffineFrame, ConvexBody
    from ..verification import GRUNBAUM, check_cut_progress
    out = []
    for d in (1, 2, 3):
        before = ConvexBody.ball(np.zeros(d), 1.0)
        frame = AffineFrame.trivial(np.zeros(d))
        same = check_cut_progress(before, before, frame, seed=seed)
        out.append((f"cut identity d={d} ratio={same:.4f}", abs(same - 1.0) < 1e-12))
        normal = np.zeros(d)
        normal[0] = 1.0
        after = before.intersect(ConvexBody.polytope(normal[None], [0.0]))
        ratio = check_cut_progress(before, after, frame, probes=20_000, seed=seed)
        out.append((f"cut centroid halfspace d={d} ratio={ratio:.4f}", ratio <= GRUNBAUM + 0.07))
    return out


RUNNERS = {"constants": _verify_constants, "grunbaum": _verify_grunbaum, "smallball": _verify_small_ball,
           "lemmakey": _verify_lemma_key, "ledger": _verify_ledger, "cut": _verify_cut}


def cmd_verify(args) -> int:
    name = SUITE_ALIASES.get(args.suite, args.suite)
    suites = SUITES if name == "all" else (name,)
    failed = 0
    evidence = []
    for suite in suites:
        for label, ok in RUNNERS[suite](args.seed):
            status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
            print(f"{status} {label}")
            evidence.append({"suite": suite, "check": label, "status": status})
            failed += ok is False
    if args.json:
        Path(args.json).write_text(json.dumps({"seed": args.seed, "checks": evidence}, indent=1) + "\n")
    return 1 if failed else 0


def cmd_report(args) -> int:
    scenarios = [Scenario.load(p) for p in args.scenarios]
    cfg = _config(args)
    reports = [run_experiment(sc, args.selectors, cfg) for sc in scenarios]
    _write(args.out, summary_csv(reports))
    if args.json:
        data = [rep.to_json() for rep in reports]
        Path(args.json).write_text(json.dumps(data, sort_keys=True, indent=1) + "\n")
    if args.svg_dir:
        d = Path(args.svg_dir)
        d.mkdir(parents=True, exist_ok=True)
        for i, rep in enumerate(reports):
            if rep.scenario.dim == 2:
                (d / f"scenario_{i:03d}.svg").write_text(render_trajectory(rep))
    return 0


def build_parser() -> argparse.ArgumentParser:
    seed = default_seed()
    p = argparse.ArgumentParser(prog="chasebody", description="Online convex body chasing experiments")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a scenario JSON")
    g.add_argument("kind", choices=KINDS)
    g.add_argument("--param", "-p", type=_param, action="append", default=[], metavar="KEY=VALUE")
    g.add_argument("--seed", type=int, default=seed)
    g.add_argument("--out", "-o")
    g.set_defaults(func=cmd_generate)

    def run_opts(q):
        q.add_argument("--mode", choices=(PRACTICAL, FAITHFUL), default=PRACTICAL,
                       help="faithful uses the full constants and is slow")
        q.add_argument("--seed", type=int, default=seed)
        q.add_argument("--samples", type=int, default=None, help="hit-and-run samples per region")

    r = sub.add_parser("run", help="run one selector; per-step CSV")
    r.add_argument("scenario")
    r.add_argument("--selector", choices=SELECTORS, default="paper")
    run_opts(r)
    r.add_argument("--out", "-o", help="CSV path (default stdout)")
    r.add_argument("--json", help="also write the full JSON report")
    r.add_argument("--svg", help="also write a trajectory plot (d = 2)")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("offline", help="offline optimum path as CSV")
    o.add_argument("scenario")
    o.add_argument("--free-start", action="store_true")
    o.add_argument("--out", "-o")
    o.set_defaults(func=cmd_offline)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", choices=(*SUITES, *SUITE_ALIASES, "all"), default="all")
    v.add_argument("--seed", type=int, default=seed)
    v.add_argument("--json", help="write the checks as JSON evidence")
    v.set_defaults(func=cmd_verify)

    rp = sub.add_parser("report", help="summary CSV over scenarios")
    rp.add_argument("scenarios", nargs="+")
    rp.add_argument("--selectors", nargs="+", choices=SELECTORS, default=list(SELECTORS))
    run_opts(rp)
    rp.add_argument("--out", "-o")
    rp.add_argument("--json")
    rp.add_argument("--svg-dir")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    np.seterr(all="ignore")
    try:
        return int(args.func(args))
    except ChaseBodyError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
