"""The feasible region of a phase as a composite oracle.

A :class:`Region` is the enclosure ball intersected with padded requests and
with reachable-set refinements.  A :class:`ReachableConstraint` holds the
end locations of cheap paths through a block of requests, padded by r; its
exact membership test is a path program, and it also exposes a polyhedral
outer envelope (support values in fixed directions) that samplers and
Dykstra can use directly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _cone as C
from . import _kernels as K
from . import _pathsolve as PS
from .errors import DimensionMismatch
from .geometry import AffineFrame, BallConstraint, ConvexBody, SetTable, as_point, envelope_directions, shrink_atoms
from .offline import PathProgram, path_cone

ADMM_MAXIT = 4_000


def default_tol(region: "Region") -> float:
    return 1e-8 * max(1.0, region.enclosure.radius + float(np.linalg.norm(region.enclosure.center)))


@dataclass(frozen=True, eq=False)
class Region:
    enclosure: BallConstraint
    padded_requests: tuple = ()
    reachable_refinements: tuple = ()
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "padded_requests", tuple(self.padded_requests))
        object.__setattr__(self, "reachable_refinements", tuple(self.reachable_refinements))
        object.__setattr__(self, "_cuts", [])
        for b in self.padded_requests:
            if b.dim != self.dim:
                raise DimensionMismatch("padded request of the wrong dimension")
            if abs(b.pad - self.scale) > 1e-12 * max(1.0, self.scale):
                raise ValueError("padded requests must carry pad equal to the region scale")

    @classmethod
    def ball(cls, z, R: float, r: float) -> "Region":
        return cls(BallConstraint(z, R), (), (), float(r))

    @property
    def dim(self) -> int:
        return self.enclosure.dim

    @property
    def center(self) -> np.ndarray:
        return self.enclosure.center

    def with_request(self, K_raw: ConvexBody) -> "Region":
        """Omega intersected with K + rB."""
        padded = K_raw.padded(self.scale)
        key = json.dumps(padded.to_json(), sort_keys=True)
        if any(json.dumps(b.to_json(), sort_keys=True) == key for b in self.padded_requests):
            # a repeated request leaves the region unchanged
            return self
        out = Region(self.enclosure, self.padded_requests + (padded,), self.reachable_refinements, self.scale)
        out._cuts.extend(self._cuts)
        return out

    def tighten(self, y, tol: float | None = None) -> int:
        """Add tangent cuts of the padded requests that ``y`` violates.

        The cuts are valid for the exact region, so only the explicit outer
        description changes.  Returns the number of cuts added."""
        tol = default_tol(self) if tol is None else tol
        y = as_point(y, self.dim)
        added = 0
        for b in self.padded_requests:
            if b.n_constraints <= 1:
                continue
            raw = b.raw()
            p, _, st = raw.table.project(y, raw.ids, 1e-3 * tol)
            if st != K.STATUS_OK:
                continue
            dist = float(np.linalg.norm(y - p))
            if dist > b.pad + tol:
                n = (y - p) / dist
                self._cuts.append((n, float(n @ p) + b.pad))
                added += 1
        if added:
            self.__dict__.pop("_compiled0", None)
        return added

    def add_to(self, table: SetTable, cache: dict | None = None, shrink: float = 0.0) -> list[int]:
        """Compile the explicit (outer) description: enclosure, padded
        requests and reachable envelopes."""
        enc = self.enclosure
        atoms = []
        for b in self.padded_requests:
            atoms += b.outer_atoms()
        for rc in self.reachable_refinements:
            atoms += rc.outer_atoms()
        atoms += [(K.HALFSPACE, n, off) for n, off in self._cuts]
        atoms = prune_atoms(atoms, enc)
        return table.add_atoms(shrink_atoms([(K.BALL, enc.center, enc.radius), *atoms], shrink))

    def compiled(self, shrink: float = 0.0) -> tuple[SetTable, np.ndarray]:
        if shrink == 0.0:
            return self._compiled0
        t = SetTable(self.dim)
        ids = self.add_to(t, None, shrink)
        return t.finalize(), np.asarray(ids, dtype=np.int64)

    @cached_property
    def _compiled0(self):
        t = SetTable(self.dim)
        ids = self.add_to(t, None, 0.0)
        return t.finalize(), np.asarray(ids, dtype=np.int64)

    def n_constraints(self) -> dict:
        return {
            "padded_requests": len(self.padded_requests),
            "reachable_refinements": len(self.reachable_refinements),
        }

    def to_json(self) -> dict:
        return {
            "enclosure": {"c": [float(v) for v in self.enclosure.center], "r": float(self.enclosure.radius)},
            "scale": float(self.scale),
            "constraint_counts": self.n_constraints(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def prune_atoms(atoms: list, enclosure: BallConstraint) -> list:
    """Drop halfspaces implied by the enclosure ball and keep the tightest
    of halfspaces sharing a normal; order of first appearance is kept."""
    best: dict = {}
    order = []
    for kind, vec, s in atoms:
        if kind == K.HALFSPACE:
            vec = np.asarray(vec, dtype=float)
            if s >= float(vec @ enclosure.center) + enclosure.radius * float(np.linalg.norm(vec)):
                continue
            key = ("h", vec.tobytes())
            if key in best:
                if s < best[key][2]:
                    best[key] = (kind, vec, s)
                continue
            best[key] = (kind, vec, s)
        else:
            key = ("o", len(order))
            best[key] = (kind, vec, s)
        order.append(key)
    return [best[k] for k in order]


@dataclass(frozen=True, eq=False)
class ReachableConstraint:
    """End locations (padded by ``pad``) of paths y_t in K_t and the base
    region with total movement at most ``budget``."""

    requests: tuple
    base_region: Region
    budget: float
    pad: float
    frame: AffineFrame | None = None

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(self.requests))
        if not self.requests:
            raise ValueError("reachable constraint needs at least one request")
        if not self.budget > 0:
            raise ValueError("budget must be positive")

    @property
    def dim(self) -> int:
        return self.base_region.dim

    @property
    def scale(self) -> float:
        enc = self.base_region.enclosure
        return max(1.0, enc.radius + float(np.linalg.norm(enc.center)))

    @property
    def tol(self) -> float:
        return 1e-6 * max(self.budget, 1e-3 * self.scale)

    @cached_property
    def program(self) -> PathProgram:
        return PathProgram(self.dim, [[k, self.base_region] for k in self.requests])

    def _system(self, budgeted: bool):
        """Assembled cone system of the steps (plus the budget row and a
        distance epigraph when ``budgeted``), or None if not representable."""
        built = path_cone([[req, self.base_region] for req in self.requests], self.dim)
        if built is None:
            return None
        B, Y, tau, _ = built
        end = Y[-1]
        out = {"Y": Y, "tau": tau, "end": end}
        if budgeted:
            if len(tau):
                B.le(tau, np.ones(len(tau)), self.budget)
            gap = B.var(1)[0]
            # |end - q| <= gap, with q entering through the constant column
            blk = B.soc([((gap,), (1.0,), 0.0)] + [((end[i],), (1.0,), 0.0) for i in range(self.dim)])
            out["gap"] = gap
            out["q_rows"] = B.soc_offset(blk) + 1 + np.arange(self.dim)
        out["A"], out["b"], out["cones"] = B.assemble()
        out["n"] = B.nvar
        return out

    @cached_property
    def _cone(self):
        return self._system(True)

    @cached_property
    def _cone_min(self):
        return self._system(False)

    def _cone_solve(self, name: str, vec=None):
        """Optimal value of one of the programs ("min", "support", "dist")."""
        c = self._cone_min if name == "min" else self._cone
        obj = np.zeros(c["n"])
        b = c["b"]
        if name == "min":
            obj[c["tau"]] = 1.0
        elif name == "support":
            obj[c["end"]] = -np.asarray(vec, dtype=float)
        else:
            obj[c["gap"]] = 1.0
            b = b.copy()
            b[c["q_rows"]] = -np.asarray(vec, dtype=float)
        res = C.solve(obj, c["A"], b, c["cones"])
        if res.status == "infeasible":
            return (np.inf if name != "support" else -np.inf), None
        if res.status != "optimal":
            return np.nan, None
        return (-res.value if name == "support" else res.value), res.x

    @property
    def cone_slack(self) -> float:
        return 1e-7 * self.scale

    @cached_property
    def _phase_one(self):
        """Minimum movement through the steps, and a path attaining it."""
        if self._cone is not None:
            val, x = self._cone_solve("min")
            if val == np.inf:
                return np.inf, None
            if np.isfinite(val):
                return val, x[self._cone_min["Y"]]
        prog = self.program
        ptol = 1e-10 * self.scale
        start = self.base_region.enclosure.center
        try:
            greedy = prog.greedy(start, ptol)
        except Exception:
            return np.inf, None
        cost = PS.path_cost(greedy)
        if prog.n == 1 or cost == 0.0:
            return cost, greedy
        Z, _, info, status = prog.run(greedy, PS.DMODE_COST, PS.WMODE_NONE, tol=self.tol,
                                      ptol=ptol, maxit=ADMM_MAXIT, rho0=1.0 / self.scale)
        zc = PS.path_cost(Z[0])
        if zc < cost:
            return zc, Z[0]
        return cost, greedy

    @property
    def min_movement(self) -> float:
        return self._phase_one[0]

    @property
    def feasible(self) -> bool:
        return self.min_movement <= self.budget + 10 * self.tol

    def _solve(self, wmode: int, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        base = self._phase_one[1]
        Y0 = np.repeat(base[None], Q.shape[0], axis=0)
        Z, _, info, status = self.program.run(Y0, PS.DMODE_BUDGET, wmode, Q=Q, budget=self.budget,
                                              tol=self.tol, ptol=1e-10 * self.scale,
                                              maxit=ADMM_MAXIT, rho0=1.0 / self.budget)
        excess = np.array([max(0.0, PS.path_cost(z) - self.budget) for z in Z])
        return Z, excess + info[:, 2]

    def distance(self, y, tol: float | None = None) -> float:
        """min |y_T - y| over feasible paths; +inf when no path exists."""
        if not self.feasible:
            return np.inf
        y = as_point(y, self.dim)
        if self._cone is not None:
            val = self._cone_solve("dist", y)[0]
            if np.isfinite(val):
                return max(0.0, val - self.cone_slack)
        Z, slack = self._solve(PS.WMODE_DIST, y[None])
        end = Z[0, -1]
        return max(0.0, float(np.linalg.norm(end - y)) - float(slack[0]))

    def support(self, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(estimated support values of the unpadded reachable set, slack)."""
        V = np.atleast_2d(np.asarray(V, dtype=float))
        if self._cone is not None:
            h = np.empty(V.shape[0])
            for i, v in enumerate(V):
                h[i] = self._cone_solve("support", v)[0]
            if np.all(np.isfinite(h)):
                return h, np.full(V.shape[0], self.cone_slack)
        Z, slack = self._solve(PS.WMODE_LINEAR, V)
        return np.einsum("ij,ij->i", Z[:, -1], V), slack

    @cached_property
    def envelope(self) -> tuple[np.ndarray, np.ndarray]:
        """Halfspaces (normals, offsets) containing the padded reachable set."""
        dirs = envelope_directions(self.dim, self.frame)
        if not self.feasible:
            return dirs[:1], np.array([-np.inf])
        h, slack = self.support(dirs)
        margin = 1e-3 * self.budget + 10.0 * slack
        return dirs, h + self.pad + margin

    def outer_atoms(self) -> list:
        normals, offsets = self.envelope
        if not np.all(np.isfinite(offsets)):
            # empty: two opposite halfspaces with negative total width
            v = normals[0]
            return [(K.HALFSPACE, v, -1.0), (K.HALFSPACE, -v, -1.0)]
        return [(K.HALFSPACE, a, float(b)) for a, b in zip(normals, offsets)]

    def add_to(self, table: SetTable, cache: dict | None = None, shrink: float = 0.0) -> list[int]:
        return [table.add_halfspace(v, s - shrink) for _, v, s in self.outer_atoms()]


def reachable_distance(rc: ReachableConstraint, y, tol: float | None = None) -> float:
    return rc.distance(y, tol)


def refine_with_reachable(region: Region, rc: ReachableConstraint) -> Region:
    if abs(rc.pad - region.scale) > 1e-12 * max(1.0, region.scale):
        raise ValueError("reachable constraint pad must equal the region scale")
    out = Region(region.enclosure, region.padded_requests, region.reachable_refinements + (rc,), region.scale)
    out._cuts.extend(region._cuts)
    return out


def region_violation(region: Region, y, tol: float | None = None) -> float:
    """Largest excess over any explicit component (envelopes, not exact
    reachable distances)."""
    tol = default_tol(region) if tol is None else tol
    t, ids = region.compiled()
    return t.violation(as_point(y, region.dim), ids, tol * 0.1)


def region_contains(region: Region, y, tol: float | None = None, exact: bool = True) -> bool:
    tol = default_tol(region) if tol is None else tol
    y = as_point(y, region.dim)
    if region_violation(region, y, tol) > tol:
        return False
    if exact:
        for rc in region.reachable_refinements:
            if rc.distance(y) > rc.pad + tol:
                return False
    return True


def contains_many(region: Region, pts, tol: float | None = None) -> np.ndarray:
    """Vectorized membership against the explicit description."""
    tol = default_tol(region) if tol is None else tol
    t, ids = region.compiled()
    return t.violations(pts, ids, tol * 0.1) <= tol


def interior_point(region: Region, tol: float | None = None, bisections: int = 6):
    """A point with slack at least ``tol`` in every explicit constraint, or
    None when the region is (numerically) empty."""
    tol = default_tol(region) if tol is None else tol
    return slack_point(region.compiled, region.enclosure.center, region.enclosure.radius, tol, bisections)


def slack_point(compiled, z, R: float, tol: float, bisections: int = 6):
    """Dykstra from z onto constraints tightened by s, for s halving from R/2
    down to tol, then bisection on s to maximize the slack found."""
    ptol = 1e-3 * tol

    def attempt(s):
        t, ids = compiled(s)
        p, res, st = t.project(z, ids, ptol)
        return p if st == K.STATUS_OK else None

    s = 0.5 * R
    found = None
    s_fail = None
    while s >= tol:
        found = attempt(s)
        if found is not None:
            break
        s_fail = s
        s *= 0.5
    if found is None:
        return attempt(tol)
    if s_fail is not None:
        lo, hi = s, s_fail
        for _ in range(bisections):
            mid = 0.5 * (lo + hi)
            p = attempt(mid)
            if p is None:
                hi = mid
            else:
                lo, found = mid, p
    return found
