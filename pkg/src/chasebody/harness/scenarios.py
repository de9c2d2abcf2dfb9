"""Deterministic request-sequence generators and the scenario JSON format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import BadParams, Infeasible
from ..geometry import BallConstraint, ConvexBody, Halfspace, project_onto_body

SCHEMA = 1
KINDS = ("nested", "lines", "pancake", "random-halfspace", "two-point", "epigraph")


@dataclass
class Scenario:
    dim: int
    x0: np.ndarray
    requests: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if self.x0.shape[0] != self.dim:
            raise BadParams("x0 has the wrong dimension")
        for i, K in enumerate(self.requests):
            if K.dim != self.dim:
                raise BadParams(f"request {i} has dimension {K.dim}, expected {self.dim}")

    @property
    def T(self) -> int:
        return len(self.requests)

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "dim": self.dim,
            "x0": [float(v) for v in self.x0],
            "requests": [K.to_json() for K in self.requests],
            "meta": self.meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, data: dict) -> "Scenario":
        if data.get("schema") != SCHEMA:
            raise BadParams(f"unsupported scenario schema {data.get('schema')!r}")
        reqs = [ConvexBody.from_json(r) for r in data["requests"]]
        return cls(int(data["dim"]), data["x0"], reqs, dict(data.get("meta", {})))

    @classmethod
    def loads(cls, text: str) -> "Scenario":
        return cls.from_json(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.loads(fh.read())


def certify_request(K: ConvexBody, probe: np.ndarray) -> None:
    """Raise BadParams unless ``K`` is nonempty (a projection converges)."""
    try:
        project_onto_body(probe, K)
    except Infeasible as exc:
        raise BadParams(f"generated an empty request: {exc}") from exc


def _unit(rng, d: int) -> np.ndarray:
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def _hyperplane(a, b) -> list:
    a = np.asarray(a, dtype=float)
    return [Halfspace(a, b), Halfspace(-a, -b)]


def _int(params: dict, key: str, default: int, lo: int = 1) -> int:
    v = params.get(key, default)
    if isinstance(v, bool) or not float(v).is_integer() or int(v) < lo:
        raise BadParams(f"{key} must be an integer >= {lo}, got {v!r}")
    return int(v)


def _pos(params: dict, key: str, default: float) -> float:
    v = float(params.get(key, default))
    if not v > 0 or not math.isfinite(v):
        raise BadParams(f"{key} must be positive, got {v!r}")
    return v


# ---------------------------------------------------------------------------
# generators

def _nested(p: dict, rng) -> tuple[np.ndarray, list]:
    d, T = _int(p, "d", 2), _int(p, "T", 10)
    spread = _pos(p, "spread", 3.0)
    target = rng.uniform(-spread, spread, d)
    hs: list = []
    ball = BallConstraint(target + rng.uniform(-1, 1, d), 2 * spread)
    reqs = []
    for _ in range(T):
        u = _unit(rng, d)
        # every cut keeps the target strictly inside
        hs.append(Halfspace(u, float(u @ target) + rng.uniform(0.05, 1.0)))
        reqs.append(ConvexBody(tuple(hs), (ball,), 0.0, d))
    return np.zeros(d), reqs


def _lines(p: dict, rng) -> tuple[np.ndarray, list]:
    d, T = _int(p, "d", 2), _int(p, "T", 10)
    if d != 2:
        raise BadParams("line scenarios live in the plane (d = 2)")
    spread = _pos(p, "spread", 3.0)
    reqs = []
    for _ in range(T):
        n = _unit(rng, 2)
        q = rng.uniform(-spread, spread, 2)
        reqs.append(ConvexBody(tuple(_hyperplane(n, float(n @ q))), (), 0.0, 2))
    return np.zeros(2), reqs


def _pancake(p: dict, rng) -> tuple[np.ndarray, list]:
    """Thin slabs with a common normal whose offsets drift by less than the
    slab width, intersected with large balls centred on the mid-plane."""
    d, T = _int(p, "d", 2), _int(p, "T", 10)
    w = _pos(p, "width", 0.05)
    spread = _pos(p, "spread", 3.0)
    e = np.zeros(d)
    e[-1] = 1.0
    c0 = rng.uniform(-1.0, 1.0)
    reqs = []
    for _ in range(T):
        c = c0 + rng.uniform(-0.25, 0.25) * w
        hs = [Halfspace(e, c + w / 2), Halfspace(-e, -(c - w / 2))]
        bs = ()
        if d > 1:
            center = np.concatenate([rng.uniform(-spread, spread, d - 1), [c]])
            bs = (BallConstraint(center, rng.uniform(0.5, 1.5) * spread),)
        reqs.append(ConvexBody(tuple(hs), bs, 0.0, d))
    return np.zeros(d), reqs


def _random_halfspace(p: dict, rng) -> tuple[np.ndarray, list]:
    d, T = _int(p, "d", 2), _int(p, "T", 10)
    spread = _pos(p, "spread", 3.0)
    reqs = []
    for _ in range(T):
        c = rng.uniform(-spread, spread, d)
        rad = rng.uniform(0.3, 1.5)
        # a witness inside the ball keeps every request nonempty
        w = c + 0.5 * rad * rng.uniform(0.0, 1.0) * _unit(rng, d)
        hs = []
        for _ in range(int(rng.integers(1, 4))):
            u = _unit(rng, d)
            hs.append(Halfspace(u, float(u @ w) + rng.uniform(0.05, 1.0) * rad))
        reqs.append(ConvexBody(tuple(hs), (BallConstraint(c, rad),), 0.0, d))
    return np.zeros(d), reqs


def _two_point(p: dict, rng) -> tuple[np.ndarray, list]:
    """Two hyperplanes through the points a = 0 and b = D e_2, meeting at
    angle ``angle`` along a far ridge; requests alternate between them,
    starting at a."""
    d, T = _int(p, "d", 2, lo=2), _int(p, "T", 10)
    D = _pos(p, "D", 1.0)
    ang = _pos(p, "angle", 0.1)
    if ang >= math.pi / 2:
        raise BadParams("angle must be below pi/2")
    e2 = np.zeros(d)
    e2[1] = 1.0
    n = np.zeros(d)
    n[0], n[1] = math.sin(ang), math.cos(ang)
    A = ConvexBody(tuple(_hyperplane(e2, 0.0)), (), 0.0, d)
    B = ConvexBody(tuple(_hyperplane(n, D * math.cos(ang))), (), 0.0, d)
    return np.zeros(d), [B if t % 2 == 0 else A for t in range(T)]


def _epigraph(p: dict, rng) -> tuple[np.ndarray, list]:
    """Moving-vertex max-of-two-lines functions, reduced to body chasing."""
    d, T = _int(p, "d", 1), _int(p, "T", 4)
    slope = _pos(p, "slope", 1.0)
    vertex = np.zeros(d)
    fns = []
    for _ in range(T):
        vertex = vertex + rng.uniform(-1, 1, d)
        u = _unit(rng, d)
        height = rng.uniform(0.0, 1.0)
        fns.append([(slope * u, height - slope * float(u @ vertex)),
                    (-slope * u, height + slope * float(u @ vertex))])
    sc = epigraph_reduce(fns)
    return sc.x0, sc.requests


_GENERATORS = {
    "nested": _nested,
    "lines": _lines,
    "pancake": _pancake,
    "random-halfspace": _random_halfspace,
    "two-point": _two_point,
    "epigraph": _epigraph,
}


def generate_scenario(kind: str, params: dict | None = None, seed: int = 0) -> Scenario:
    if kind not in _GENERATORS:
        raise BadParams(f"unknown scenario kind {kind!r}; known: {', '.join(KINDS)}")
    params = dict(params or {})
    rng = np.random.default_rng(int(seed))
    x0, reqs = _GENERATORS[kind](params, rng)
    for K in reqs:
        certify_request(K, x0)
    meta = {"generator": kind, "params": params, "seed": int(seed)}
    return Scenario(len(x0), x0, reqs, meta)


def epigraph_reduce(functions: Sequence[Sequence[tuple]], x0=None) -> Scenario:
    """Each f_t = max_i (a_i . y + b_i) becomes its epigraph followed by the
    floor {s = 0} in one extra coordinate."""
    if not functions:
        raise BadParams("need at least one function")
    d = None
    reqs = []
    for t, pieces in enumerate(functions):
        if not pieces:
            raise BadParams(f"function {t} has no affine pieces")
        hs = []
        for a, b in pieces:
            a = np.atleast_1d(np.asarray(a, dtype=float))
            if d is None:
                d = a.shape[0]
            if a.shape != (d,) or not np.all(np.isfinite(a)) or not math.isfinite(float(b)):
                raise BadParams(f"function {t}: pieces must be finite and of dimension {d}")
            hs.append(Halfspace(np.concatenate([a, [-1.0]]), -float(b)))
        reqs.append(ConvexBody(tuple(hs), (), 0.0, d + 1))
        floor = np.zeros(d + 1)
        floor[-1] = 1.0
        reqs.append(ConvexBody(tuple(_hyperplane(floor, 0.0)), (), 0.0, d + 1))
    x0 = np.zeros(d + 1) if x0 is None else np.asarray(x0, dtype=float)
    return Scenario(d + 1, x0, reqs, {"generator": "epigraph", "params": {"T": len(functions)}, "seed": 0})
