"""Offline optimum: minimum-movement paths through a request sequence.

The main entry point is :func:`solve_offline`; :func:`dp_oracle` is an
independent brute-force grid dynamic program used to validate it, and
:func:`in_phase_cost` is the restricted, free-start variant queried by the
online selector once per request.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _cone as C
from . import _kernels as K
from . import _pathsolve as PS
from .errors import GridTooCoarse, InfeasibleRequest, NotConverged
from .geometry import DYKSTRA_STALL, BallConstraint, ConvexBody, SetTable, as_point

INFINITE_COST = 1e300  # serialized sentinel for "no feasible path"


class Free:
    """Marker for a start point chosen by the solver."""

    def __repr__(self):
        return "Free"


FREE = Free()


@dataclass
class OfflinePath:
    points: np.ndarray
    cost: float
    converged: bool = True
    residual: float = 0.0
    lower_bound: float = 0.0
    feasible: bool = True

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.cost = float(self.cost)

    @property
    def steps(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    def to_json(self) -> dict:
        return {
            "cost": self.cost if self.feasible else INFINITE_COST,
            "feasible": self.feasible,
            "converged": self.converged,
            "residual": self.residual,
            "points": self.points.tolist(),
        }


@dataclass
class PathProblem:
    requests: list
    start: object = FREE
    region: object = None
    tolerance: float = 1e-6

    def __post_init__(self):
        if not self.requests:
            raise ValueError("a path problem needs at least one request")
        self.requests = list(self.requests)
        if self.start is None:
            self.start = FREE
        if not isinstance(self.start, Free):
            self.start = as_point(self.start, self.dim)

    @property
    def dim(self) -> int:
        return self.requests[0].dim

    @property
    def fixed_start(self) -> bool:
        return not isinstance(self.start, Free)


def add_constraint(table: SetTable, obj, cache: dict | None = None) -> list[int]:
    """Compile a constraint object into ``table`` (once per object)."""
    if cache is not None and id(obj) in cache:
        return cache[id(obj)]
    if obj is None:
        ids: list[int] = []
    elif isinstance(obj, ConvexBody):
        ids = table.add_body(obj)
    elif isinstance(obj, BallConstraint):
        ids = [table.add_ball(obj.center, obj.radius)]
    elif hasattr(obj, "add_to"):
        ids = list(obj.add_to(table, cache))
    elif isinstance(obj, (list, tuple)):
        ids = []
        for o in obj:
            ids.extend(add_constraint(table, o, cache))
    else:
        raise TypeError(f"cannot compile constraint of type {type(obj).__name__}")
    if cache is not None:
        cache[id(obj)] = ids
    return ids


class PathProgram:
    """Compiled per-step feasible sets C_i, shared by every path solve."""

    def __init__(self, dim: int, steps: Sequence[Sequence[object]]):
        self.dim = dim
        table = SetTable(dim)
        cache: dict = {}
        per_step = []
        for cons in steps:
            ids: list[int] = []
            for c in cons:
                ids.extend(add_constraint(table, c, cache))
            per_step.append(sorted(set(ids), key=ids.index))
        self.table = table.finalize()
        self._keep = list(cache.keys())  # ids are only unique while objects live
        self.step_ids = [np.asarray(s, dtype=np.int64) for s in per_step]
        self.ptr = np.zeros(len(per_step) + 1, dtype=np.int64)
        self.ptr[1:] = np.cumsum([len(s) for s in per_step])
        self.idx = (np.concatenate(self.step_ids) if per_step and self.ptr[-1] > 0
                    else np.zeros(0, dtype=np.int64))
        self._minv: dict = {}

    @property
    def n(self) -> int:
        return len(self.step_ids)

    def minv(self, endpoint: bool) -> np.ndarray:
        if endpoint not in self._minv:
            self._minv[endpoint] = PS.system_inverse(self.n, endpoint)
        return self._minv[endpoint]

    def project_step(self, i: int, x, tol: float):
        return self.table.project(x, self.step_ids[i], tol)

    def violation(self, i: int, x, tol: float) -> float:
        return self.table.violation(x, self.step_ids[i], tol)

    def greedy(self, x, tol: float, first: int = 0) -> np.ndarray:
        """Successive projections; raises InfeasibleRequest on an empty step."""
        out = np.empty((self.n, self.dim))
        cur = np.asarray(x, dtype=float)
        for i in range(first, self.n):
            p, res, st = self.project_step(i, cur, tol)
            if st != K.STATUS_OK:
                raise InfeasibleRequest(i, f"step {i} is empty (residual {res:.3g})")
            out[i] = cur = p
        return out

    def lazy(self, x, tol: float, first: int = 0) -> np.ndarray:
        """Stay put through maximal runs of steps with a common point.

        Each run is served by the projection of the current point onto the
        intersection of its steps."""
        out = np.empty((self.n, self.dim))
        cur = np.asarray(x, dtype=float)
        i = first
        while i < self.n:
            ids = self.step_ids[i]
            best, res, st = self.table.project(cur, ids, tol)
            if st != K.STATUS_OK:
                raise InfeasibleRequest(i, f"step {i} is empty (residual {res:.3g})")
            j = i
            while j + 1 < self.n:
                cand = np.unique(np.concatenate([ids, self.step_ids[j + 1]]))
                p, _, st = self.table.project(cur, cand, tol)
                if st != K.STATUS_OK:
                    break
                ids, best, j = cand, p, j + 1
            out[i:j + 1] = best
            cur = best
            i = j + 1
        return out

    def run(self, Y0: np.ndarray, dmode: int, wmode: int, Q: np.ndarray | None = None,
            budget: float = 0.0, tol: float = 1e-6, ptol: float = 1e-10, maxit: int = 50_000,
            rho0: float = 1.0):
        Y0 = np.ascontiguousarray(Y0, dtype=float)
        if Y0.ndim == 2:
            Y0 = Y0[None]
        B = Y0.shape[0]
        if Q is None:
            Q = np.zeros((B, self.dim))
        Q = np.ascontiguousarray(np.broadcast_to(Q, (B, self.dim)), dtype=float)
        return PS.admm_batch(Y0, self.minv(wmode != PS.WMODE_NONE), self.ptr, self.idx,
                             *self.table.args(), dmode, float(budget), wmode, Q,
                             float(rho0), float(tol), float(ptol), int(maxit), DYKSTRA_STALL)

    def support_upper(self, i: int, g: np.ndarray, start, scale: float, tol: float) -> float:
        """Certified upper bound on max_{y in C_i} g.y."""
        ng = float(np.linalg.norm(g))
        if ng == 0.0:
            return 0.0
        lo, hi, _, st = self.table.support(start, g / ng, scale, self.step_ids[i], tol)
        if st == 3:
            return np.inf
        if st == 1:
            return -np.inf
        return ng * hi


def _problem_program(problem: PathProblem, reach: float | None = None) -> PathProgram:
    """With ``reach`` (fixed start only) every step is also intersected with
    B(start, reach); any path of cost <= reach stays there."""
    bound = [] if reach is None else [BallConstraint(problem.start, reach)]
    steps = [[req, problem.region, *bound] for req in problem.requests]
    if problem.fixed_start:
        steps.insert(0, [BallConstraint(problem.start, 0.0)])
    return PathProgram(problem.dim, steps)


def _scale_of(path: np.ndarray) -> float:
    if path.shape[0] == 0:
        return 1.0
    return max(1.0, float(np.max(np.linalg.norm(path - path[0], axis=1))), float(np.max(np.abs(path))))


def cost_lower_bound(prog: PathProgram, lam: np.ndarray, path: np.ndarray, tol: float) -> float:
    """Weak-duality bound sum_j -h_{C_j}(lam_j - lam_{j-1}) for unit-clipped lam."""
    n = prog.n
    lam = np.asarray(lam, dtype=float).reshape(n - 1, prog.dim).copy()
    nrm = np.linalg.norm(lam, axis=1)
    big = nrm > 1.0
    lam[big] /= nrm[big, None]
    scale = _scale_of(path)
    total = 0.0
    for j in range(n):
        c = np.zeros(prog.dim)
        if j > 0:
            c += lam[j - 1]
        if j < n - 1:
            c -= lam[j]
        # min_{y in C_j} c.y = -max_{y in C_j} (-c).y
        total -= prog.support_upper(j, -c, path[j], scale, tol)
    return total


def add_member(builder: C.ConeBuilder, obj, y: np.ndarray) -> bool:
    """Add cone constraints for y in obj; False when obj is not representable."""
    if obj is None:
        return True
    if isinstance(obj, BallConstraint):
        builder.ball(y, obj.center, obj.radius)
    elif isinstance(obj, ConvexBody):
        C.add_table(builder, obj.table, obj.ids, y)
    elif hasattr(obj, "compiled"):
        # regions: their explicit outer description
        t, ids = obj.compiled()
        C.add_table(builder, t, ids, y)
    else:
        return False
    return True


def path_cone(steps: Sequence[Sequence], dim: int, start=None):
    """Cone system for a path through ``steps`` (lists of constraint objects)
    with step-length epigraph variables; None if some step is not
    representable.  Returns (builder, Y index array, tau indices, SOC blocks)."""
    B = C.ConeBuilder()
    n = len(steps)
    Y = np.array([B.var(dim) for _ in range(n)]).reshape(n, dim)
    tau = B.var(n - 1)
    if start is not None:
        for i in range(dim):
            B.eq([Y[0, i]], [1.0], float(start[i]))
    for j, objs in enumerate(steps):
        for obj in objs:
            if not add_member(B, obj, Y[j]):
                return None
    blocks = [B.norm_le(Y[t + 1], Y[t], tau[t]) for t in range(n - 1)]
    return B, Y, tau, blocks


def _conic_path(problem: PathProblem):
    """Exact second-order cone solve; returns (path, dual) or None."""
    steps = [[req, problem.region] for req in problem.requests]
    start = None
    if problem.fixed_start:
        steps.insert(0, [])
        start = problem.start
    built = path_cone(steps, problem.dim, start)
    if built is None:
        return None
    B, Y, tau, blocks = built
    A, b, cones = B.assemble()
    q = np.zeros(B.nvar)
    q[tau] = 1.0
    res = C.solve(q, A, b, cones)
    if res.status != "optimal":
        return None
    d = problem.dim
    lam = np.array([res.z[B.soc_offset(k) + 1: B.soc_offset(k) + 1 + d] for k in blocks]).reshape(-1, d)
    return res.x[Y], lam


def solve_offline(problem: PathProblem, warm: np.ndarray | None = None, maxit: int = 50_000,
                  strict: bool = False, certify: bool | float = False) -> OfflinePath:
    """Minimum-movement path o_0..o_T with o_t in K_t (and the region).

    With a fixed start the returned path begins at the start; with a free start
    o_0 = o_1.  The returned points are always feasible (they come from the
    projection block); ``converged`` reports whether the residuals met the
    tolerance within ``maxit`` iterations.
    """
    prog = _problem_program(problem)
    d = problem.dim
    ptol = 1e-3 * problem.tolerance
    off = 1 if problem.fixed_start else 0
    # per-request feasibility first, so errors name the offending request
    start = problem.start if problem.fixed_start else prog.table.project(
        np.zeros(d), prog.step_ids[0], ptol)[0]
    for i in range(off, prog.n):
        _, res, st = prog.project_step(i, start, ptol)
        if st != K.STATUS_OK:
            raise InfeasibleRequest(i - off, f"request {i - off} is empty (residual {res:.3g})")
    greedy = prog.greedy(start, ptol)
    greedy_cost = PS.path_cost(greedy)
    if prog.n == 1 or greedy_cost == 0.0:
        return _finish(problem, greedy, greedy_cost, True, 0.0, greedy_cost)
    lazy = prog.lazy(start, ptol)
    lazy_cost = PS.path_cost(lazy)
    if lazy_cost < greedy_cost:
        greedy, greedy_cost = lazy, lazy_cost
    if greedy_cost == 0.0:
        return _finish(problem, greedy, 0.0, True, 0.0, 0.0)
    conic = _conic_path(problem)
    if conic is not None:
        # snap onto the steps (solver precision), then certify by duality
        Zc = np.array([prog.project_step(i, conic[0][i], ptol)[0] for i in range(prog.n)])
        c_cost = PS.path_cost(Zc)
        bprog = prog
        if problem.fixed_start:
            bprog = _problem_program(problem, greedy_cost * (1 + 1e-9) + ptol)
        lb = max(cost_lower_bound(bprog, conic[1], Zc, ptol), cost_lower_bound(bprog, -conic[1], Zc, ptol))
        if c_cost > greedy_cost:
            Zc, c_cost = greedy, greedy_cost
        if c_cost - lb <= problem.tolerance * (1.0 + c_cost):
            return _finish(problem, Zc, c_cost, True, 0.0, max(0.0, min(lb, c_cost)))
    Y0 = greedy
    if warm is not None:
        warm = np.asarray(warm, dtype=float)
        if warm.shape == Y0.shape:
            Y0 = warm
        elif warm.shape[0] <= Y0.shape[0]:
            Y0 = Y0.copy()
            Y0[:warm.shape[0]] = warm
    scale = _scale_of(Y0)
    tol = problem.tolerance * (1.0 + scale) * 0.1
    Z, lam, info, status = prog.run(Y0, PS.DMODE_COST, PS.WMODE_NONE, tol=tol, ptol=ptol,
                                    maxit=maxit, rho0=1.0 / scale)
    Z = Z[0]
    z_cost = PS.path_cost(Z)
    feasible = max(prog.violation(i, Z[i], ptol) for i in range(prog.n)) <= 10 * ptol
    converged = int(status[0]) == 0
    residual = float(max(info[0, 2], info[0, 3]))
    if feasible and z_cost <= greedy_cost:
        path, cost = Z, z_cost
    else:
        path, cost = greedy, greedy_cost
    # certify=True always; a float certifies only costs at or above it
    want_lb = certify is True or (certify is not False and cost >= float(certify))
    lb = cost_lower_bound(prog, lam[0], path, ptol) if want_lb else 0.0
    if not converged and want_lb and cost - lb <= problem.tolerance * (1.0 + cost):
        # the duality gap certifies the path even though ADMM stopped early
        converged = True
    out = _finish(problem, path, cost, converged, residual, max(0.0, min(lb, cost)))
    if strict and not converged:
        raise NotConverged(f"offline solver stopped at residual {residual:.3g}", best=out)
    return out


def _finish(problem: PathProblem, path: np.ndarray, cost: float, converged: bool,
            residual: float, lb: float) -> OfflinePath:
    if not problem.fixed_start:
        path = np.vstack([path[:1], path])
    return OfflinePath(path, PS.path_cost(path), converged, residual, lb)


def in_phase_cost(requests: Sequence[ConvexBody], enclosure: BallConstraint, r: float = 0.0,
                  tolerance: float = 1e-6, warm=None, certify: bool | float = False) -> OfflinePath:
    """Free-start offline path through K_t intersected with the enclosure.

    An empty intersection gives an infeasible path with infinite cost (the
    caller's restart branch), never an exception.
    """
    problem = PathProblem(list(requests), FREE, enclosure, tolerance)
    try:
        return solve_offline(problem, warm=warm, certify=certify)
    except InfeasibleRequest:
        return OfflinePath(np.zeros((0, enclosure.dim)), np.inf, True, 0.0, np.inf, feasible=False)


def in_phase_cost_value(requests, enclosure, r: float = 0.0, tolerance: float = 1e-6) -> float:
    return in_phase_cost(requests, enclosure, r, tolerance).cost


# ---------------------------------------------------------------------------
# brute-force oracle

def _grid(lo: np.ndarray, hi: np.ndarray, h: float) -> np.ndarray:
    axes = [np.arange(a, b + 0.5 * h, h) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def dp_oracle(problem: PathProblem, grid: float | dict, bounds=None) -> float:
    """Shortest path over grid discretizations of each feasible set.

    ``grid`` is the spacing h (or a dict with "h" and optional "lo"/"hi").
    Candidates for a step are grid points inside C_t together with the
    projections onto C_t of grid points within one grid diagonal of it, so the
    value is feasible and exceeds the optimum by at most T times the diagonal.
    """
    d = problem.dim
    if d > 2 or len(problem.requests) > 6:
        raise ValueError("dp_oracle is limited to d <= 2 and T <= 6")
    if isinstance(grid, dict):
        h = float(grid["h"])
        lo = grid.get("lo")
        hi = grid.get("hi")
    else:
        h = float(grid)
        lo = hi = None
    if lo is None:
        reg = problem.region
        if isinstance(reg, BallConstraint):
            lo, hi = reg.center - reg.radius, reg.center + reg.radius
        elif bounds is not None:
            lo, hi = bounds
        else:
            raise ValueError("dp_oracle needs a bounded region or explicit grid bounds")
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    pts = _grid(lo, hi, h)
    diag = h * np.sqrt(d)
    tol = 1e-9
    prog = PathProgram(d, [[req, problem.region] for req in problem.requests])
    cands = []
    for i in range(prog.n):
        ids = prog.step_ids[i]
        viol = prog.table.violations(pts, ids, tol)
        inside = pts[viol <= tol]
        near = pts[(viol > tol) & (viol <= diag)]
        proj = []
        for p in near:
            q, res, st = prog.table.project(p, ids, tol)
            if st == K.STATUS_OK:
                proj.append(q)
        c = np.vstack([inside] + ([np.array(proj)] if proj else []))
        if c.shape[0] == 0:
            raise GridTooCoarse(f"no grid-feasible point for request {i}")
        c = np.unique(np.round(c, 12), axis=0)
        cands.append(c)
    if problem.fixed_start:
        best = np.linalg.norm(cands[0] - problem.start, axis=1)
    else:
        best = np.zeros(cands[0].shape[0])
    for i in range(1, len(cands)):
        dist = np.linalg.norm(cands[i][:, None, :] - cands[i - 1][None, :, :], axis=2)
        best = np.min(dist + best[None, :], axis=1)
    return float(best.min())
