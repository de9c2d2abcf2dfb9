"""The multiscale online selector, its constants, and a greedy baseline.

:class:`Chaser` is a per-request state machine.  Each global phase keeps a
center z, a scale r and a localization radius R = 7 alpha r, a feasible region
(enclosure, padded requests, reachable refinements) and a thin subspace V.
A lower-dimensional phase runs a nested :class:`Chaser` on slices of the
requests through an affine copy of V and, once its movement budget is spent,
refines the region with the reachable set of cheap paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (BadParams, EmptyRegion, EmptySlice, Infeasible, RequestInfeasible)
from .geometry import (AffineFrame, BallConstraint, ConvexBody, as_point, distance_to_body,
                       project_onto_body, slice_to_frame)
from .offline import in_phase_cost
from .omega import ReachableConstraint, Region, refine_with_reachable
from .sampling import (SamplerParams, enclosing_ball, estimate_centroid, find_thin_direction,
                       sample_region)

FAITHFUL = "faithful"
PRACTICAL = "practical"

SHRUNK = "Shrunk"
LOCALIZATION = "LocalizationActing"
COST_BLOWUP = "CostBlowup"
FAR_REQUEST = "FarRequest"
OPEN = "Open"
RESPONSE_TOL = 1e-9


# ---------------------------------------------------------------------------
# constants

@dataclass(frozen=True)
class ConstantsTable:
    d: int
    alpha: float
    zeta: tuple            # zeta[k-1] for k = 1..d
    omega: tuple           # omega[j] for j = 0..d (floats; inf past overflow)
    omega_log2: tuple
    beta: float
    ratio_bound: int     # 2^(30 d)
    mode: str = FAITHFUL
    R_factor: int = 7

    def R(self, r: float) -> float:
        return self.R_factor * self.alpha * r

    def zeta_k(self, k: int) -> float:
        return self.zeta[k - 1]

    def budget(self, k: int, r: float) -> float:
        """Movement budget of a lower-dimensional phase with dim V-perp = k."""
        return self.zeta_k(k) * self.omega[self.d - k] * r

    def thin_threshold(self, k: int, r: float) -> float:
        return self.alpha / (2.0 * k) * r

    def to_json(self) -> dict:
        return {
            "d": self.d, "mode": self.mode, "alpha": self.alpha, "zeta": list(self.zeta),
            "omega": list(self.omega), "omega_log2": list(self.omega_log2), "beta": self.beta,
            "ratio_bound_log2": 30 * self.d,
        }


def faithful_alpha(d: int) -> int:
    return 192 * (d + 1) ** 4


def faithful_zeta(k: int, exponent: int = 4) -> int:
    return 65 * (k + 1) ** exponent


def omega_recursion_log2(d: int) -> list[float]:
    """log2 of omega_0..omega_d for omega_j = sum_k (24k)^6 omega_{j-k}.

    Exact integer arithmetic up to d = 8, log-sum-exp in base 2 beyond.
    """
    if d <= 8:
        ints = [1]
        for j in range(1, d + 1):
            ints.append(sum((24 * k) ** 6 * ints[j - k] for k in range(1, j + 1)))
        return [math.log2(v) for v in ints]
    logs = [0.0]
    for j in range(1, d + 1):
        terms = [6 * math.log2(24 * k) + logs[j - k] for k in range(1, j + 1)]
        m = max(terms)
        logs.append(m + math.log2(sum(2.0 ** (t - m) for t in terms)))
    return logs


def omega_recursion_exact(d: int) -> list[int]:
    ints = [1]
    for j in range(1, d + 1):
        ints.append(sum((24 * k) ** 6 * ints[j - k] for k in range(1, j + 1)))
    return ints


def beta_value(d: int, alpha: float, zeta: Sequence[float], omega: Sequence[float]) -> float:
    """Movement bound per global phase; the logarithm is base 2."""
    return float(sum(50 * k * math.log2(k + 1) * (zeta[k - 1] * omega[d - k] + 7 * alpha + 1)
                     for k in range(1, d + 1)))


@dataclass(frozen=True)
class ChaserConfig:
    mode: str = PRACTICAL
    alpha_override: float | None = None
    zeta_override: float | None = None
    zeta_exponent: int = 4
    sampler: SamplerParams = SamplerParams()
    tolerance: float = 1e-6
    max_requests: int | None = None
    seed: int = 0
    inflation: float = 0.1
    max_depth: int = 8

    def __post_init__(self):
        if self.mode not in (FAITHFUL, PRACTICAL):
            raise BadParams(f"unknown mode {self.mode!r}")
        for name in ("alpha_override", "zeta_override"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise BadParams(f"{name} must be positive")
        if not self.tolerance > 0:
            raise BadParams("tolerance must be positive")


def competitive_constants(d: int, config: ChaserConfig | None = None) -> ConstantsTable:
    if d < 1:
        raise BadParams("dimension must be at least 1")
    config = config or ChaserConfig(mode=FAITHFUL)
    if config.mode == FAITHFUL:
        alpha = faithful_alpha(d)
        zeta = tuple(faithful_zeta(k, config.zeta_exponent) for k in range(1, d + 1))
        logs = omega_recursion_log2(d)
        if d <= 8:
            omega = tuple(float(v) for v in omega_recursion_exact(d))
        else:
            omega = tuple(2.0 ** v if v < 1023 else math.inf for v in logs)
    else:
        alpha = float(config.alpha_override or 8.0)
        zv = float(config.zeta_override or 4.0)
        zeta = tuple(zv for _ in range(d))
        omega = tuple(float(2 ** j) for j in range(d + 1))
        logs = [float(j) for j in range(d + 1)]
    beta = beta_value(d, alpha, zeta, omega)
    return ConstantsTable(d, alpha, zeta, omega, tuple(logs), beta, 2 ** (30 * d), config.mode)


# ---------------------------------------------------------------------------
# reports

@dataclass
class PhaseLedger:
    phase_id: int
    z: np.ndarray
    r: float
    R: float
    start_t: int
    end_t: int = -1                 # exclusive
    movement: float = 0.0
    end_condition: str = OPEN
    reoffered: bool = False         # the ending request is replayed in the next phase
    far_distance: float = 0.0       # dist(z, K) for FarRequest endings
    empty_region: bool = False
    lower_dim_calls: dict = field(default_factory=dict)
    step_movements: list = field(default_factory=list)
    Phi_before: float = float("nan")
    Phi_after: float = float("nan")
    o_start_hint: np.ndarray | None = None
    o_end_hint: np.ndarray | None = None
    box_corner_distance: float = float("nan")

    def to_json(self) -> dict:
        return {
            "phase_id": self.phase_id, "z": [float(v) for v in self.z], "r": self.r, "R": self.R,
            "start_t": self.start_t, "end_t": self.end_t, "movement": self.movement,
            "end_condition": self.end_condition, "reoffered": self.reoffered,
            "lower_dim_calls": {str(k): v for k, v in sorted(self.lower_dim_calls.items())},
        }


@dataclass
class RunReport:
    x0: np.ndarray
    responses: np.ndarray
    step_costs: np.ndarray
    phase_ids: list
    events: list
    dim_v: list
    phases: list
    selector: str = "paper"
    tolerance: float = 1e-6
    config: "ChaserConfig | None" = None

    @property
    def total_cost(self) -> float:
        return float(np.sum(self.step_costs))

    @property
    def T(self) -> int:
        return len(self.step_costs)

    def to_json(self) -> dict:
        return {
            "selector": self.selector,
            "total_cost": self.total_cost,
            "x0": [float(v) for v in self.x0],
            "trajectory": self.responses.tolist(),
            "step_costs": self.step_costs.tolist(),
            "phases": [p.to_json() for p in self.phases],
        }


# ---------------------------------------------------------------------------
# the selector

def _seed_for(seed: int, *path: int) -> int:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *[int(p) & 0xFFFFFFFF for p in path]])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def normalize_request(K: ConvexBody) -> ConvexBody:
    """Fold exact single-constraint pads; multi-constraint pads are rejected."""
    K = K.expanded()
    if K.pad > 0:
        raise BadParams("padded multi-constraint requests are not supported by the selector")
    return K


class _CostGuard:
    """Incremental test of 'minimum cost to service the phase requests
    (intersected with B(z, R)) is >= r'.

    Cheap feasible paths (greedy, lazy runs, extension of the last solve)
    clear the guard; it fires only on a certified lower bound."""

    def __init__(self, z, R, r, tol):
        self.enclosure = BallConstraint(z, R)
        self.ball = ConvexBody.ball(z, R)
        self.r = r
        self.tol = tol
        self.requests: list[ConvexBody] = []
        self.greedy_pt = None
        self.greedy_cost = 0.0
        # lazy runs: the current run of requests shares one point
        self.run_body = None
        self.run_pt = None
        self.run_len = 0
        self.run_base_cost = 0.0
        self.run_prev_pt = None
        self.lazy_points: list[np.ndarray] = []
        self.path = None      # o_1..o_T of the last exact solve (or a shortcut path)
        self.path_cost = 0.0
        self.solves = 0
        self.ambiguous = 0

    def _proj(self, x, K):
        return project_onto_body(x, K.intersect(self.ball))

    def _extend_lazy(self, K: ConvexBody) -> tuple[float, np.ndarray]:
        if self.run_body is not None:
            joint = self.run_body.intersect(K)
            try:
                p = project_onto_body(self.run_pt, joint.intersect(self.ball))
            except Infeasible:
                p = None
            if p is not None:
                self.run_body, self.run_pt = joint, p
                self.run_len += 1
                base = 0.0 if self.run_prev_pt is None else float(np.linalg.norm(p - self.run_prev_pt))
                cost = self.run_base_cost + base
                pts = self.lazy_points + [p] * self.run_len
                return cost, np.array(pts)
            # close the current run
            if self.run_prev_pt is not None:
                self.run_base_cost += float(np.linalg.norm(self.run_pt - self.run_prev_pt))
            self.lazy_points += [self.run_pt] * self.run_len
            self.run_prev_pt = self.run_pt
        start = self.run_pt if self.run_pt is not None else self.enclosure.center
        p = self._proj(start, K)
        self.run_body, self.run_pt, self.run_len = K, p, 1
        base = 0.0 if self.run_prev_pt is None else float(np.linalg.norm(p - self.run_prev_pt))
        return self.run_base_cost + base, np.array(self.lazy_points + [p])

    def add(self, K: ConvexBody) -> bool:
        """Record K; return True when the guard fires."""
        self.requests.append(K)
        try:
            g = self._proj(self.greedy_pt if self.greedy_pt is not None else self.enclosure.center, K)
            lazy_cost, lazy_path = self._extend_lazy(K)
        except Infeasible:
            return True
        if self.greedy_pt is not None:
            self.greedy_cost += float(np.linalg.norm(g - self.greedy_pt))
        self.greedy_pt = g
        cand_cost, cand_path = lazy_cost, lazy_path
        if self.greedy_cost < cand_cost:
            cand_cost, cand_path = self.greedy_cost, None
        if self.path is not None:
            last = self.path[-1]
            q = self._proj(last, K)
            ext = self.path_cost + float(np.linalg.norm(q - last))
            if ext < cand_cost:
                cand_cost = ext
                cand_path = np.vstack([self.path, q])
        if cand_cost < self.r:
            if cand_path is not None:
                self.path, self.path_cost = cand_path, cand_cost
            return False
        self.solves += 1
        res = in_phase_cost(self.requests, self.enclosure, self.r, self.tol,
                            warm=cand_path, certify=self.r)
        if not res.feasible:
            return True
        self.path = res.points[1:]
        self.path_cost = res.cost
        if res.cost < self.r:
            return False
        if res.lower_bound >= self.r * (1.0 - 1e-9):
            return True
        # movement between the certified bound and r: keep the phase going
        self.ambiguous += 1
        return False


class _Phase:
    def __init__(self, chaser: "Chaser", z, r: float, t: int):
        self.ch = chaser
        c = chaser.constants
        self.z = np.asarray(z, dtype=float)
        self.r = float(r)
        self.R = c.R(self.r)
        self.region = Region.ball(self.z, self.R, self.r)
        self.V = AffineFrame.trivial(self.z)
        self.box: list[tuple[float, float]] = []   # support interval per V basis vector
        self.x = self.z.copy()
        self.guard = _CostGuard(self.z, self.R, self.r, chaser.config.tolerance)
        self.sub: Chaser | None = None
        self.sub_frame: AffineFrame | None = None
        self.sub_requests: list[ConvexBody] = []
        self.sub_base: Region | None = None
        self.sub_budget = 0.0
        self.cloud = None   # (region, dim V, centroid) of the last sample
        self.last_points = None
        self.outer = ConvexBody.ball(self.z, self.R + self.r)
        self.ledger = PhaseLedger(chaser.next_phase_id(), self.z.copy(), self.r, self.R, t)

    @property
    def dim_v(self) -> int:
        return self.V.dim


class Chaser:
    """Online selector for requests in R^d (d = dimension of x0)."""

    def __init__(self, x0, config: ChaserConfig | None = None, depth: int = 0, seed_path=()):
        self.config = config or ChaserConfig()
        self.x0 = as_point(x0)
        self.d = self.x0.shape[0]
        self.constants = competitive_constants(self.d, self.config)
        self.depth = depth
        self.seed_path = tuple(seed_path)
        self.loc = self.x0.copy()        # selector location (internal x)
        self.last = self.x0.copy()       # last emitted response
        self.phase: _Phase | None = None
        self.phases: list[PhaseLedger] = []
        self.t = 0
        self.movement = 0.0              # waypoint movement: loc -> response -> loc'
        self.events: list[str] = []
        self._phase_counter = 0

    # bookkeeping -------------------------------------------------------
    def next_phase_id(self) -> int:
        self._phase_counter += 1
        return self._phase_counter - 1

    @property
    def tol(self) -> float:
        return 1e-9 * max(1.0, float(np.max(np.abs(self.loc))) + (self.phase.R if self.phase else 0.0))

    def _move(self, p) -> None:
        step = float(np.linalg.norm(p - self.loc))
        self.movement += step
        if self.phase is not None:
            self.phase.ledger.movement += step
        self.loc = np.asarray(p, dtype=float).copy()

    def _emit(self, p) -> np.ndarray:
        self._move(p)
        self.last = self.loc.copy()
        return self.last

    def _seed(self, *extra) -> int:
        return _seed_for(self.config.seed, self.depth, *self.seed_path, self.t, *extra)

    def _start_phase(self, z, r: float, ev: list) -> None:
        self.phase = _Phase(self, z, r, self.t)
        self.phases.append(self.phase.ledger)
        ev.append("start")

    def _end_phase(self, cond: str, end_t: int, reoffered: bool = False) -> None:
        led = self.phase.ledger
        led.end_condition = cond
        led.end_t = end_t
        led.reoffered = reoffered

    # main entry ----------------------------------------------------------
    def step(self, K) -> np.ndarray:
        """Serve one request; returns the emitted (feasible) point."""
        if K.dim != self.d:
            raise BadParams(f"request of dimension {K.dim} for a {self.d}-dimensional selector")
        ev: list[str] = []
        try:
            out = self._step(K, ev)
        finally:
            self.events.append("|".join(ev))
            self.t += 1
        return out

    def _step(self, K, ev: list) -> np.ndarray:
        tol = self.tol
        if self.phase is None:
            try:
                dist = distance_to_body(self.loc, K)
            except Infeasible as exc:
                raise RequestInfeasible(self.t, str(exc)) from exc
            if dist <= tol:
                ev.append("idle")
                return self._emit(self.loc)
            self._start_phase(self.loc, dist, ev)
            self.phase.x = self.loc.copy()
        while True:
            ph = self.phase
            x_here = ph.x if ph.sub is None else self.last
            try:
                d_x = distance_to_body(x_here, K)
            except Infeasible as exc:
                raise RequestInfeasible(self.t, str(exc)) from exc
            if d_x <= tol:
                # requests already containing the selector are served in place
                ev.append("hold")
                return self._emit(x_here)
            d_z = distance_to_body(ph.z, K)
            if d_z > ph.R + ph.r:
                ev.append(FAR_REQUEST)
                ph.ledger.far_distance = d_z
                self._end_phase(FAR_REQUEST, self.t, reoffered=True)
                self._start_phase(ph.z, 2 * ph.r, ev)
                continue
            return self._serve(K, ev)

    def _serve(self, K, ev: list) -> np.ndarray:
        ph = self.phase
        resp = None
        sliced_ok = False
        if ph.dim_v > 0 and ph.sub is None:
            self._open_sub(ev)
        if ph.sub is not None:
            try:
                Ks = slice_to_frame(K.intersect(ph.outer), ph.sub_frame)
                Ks.table  # compile
                project_onto_body(np.zeros(Ks.dim), Ks)
                sliced_ok = True
            except (EmptySlice, Infeasible):
                sliced_ok = False
            if sliced_ok:
                y = ph.sub.step(Ks)
                resp = ph.sub_frame.lift(y)
        if resp is None:
            x = ph.x if ph.sub is None else self.last
            # the outer ball is huge next to the request, so its scale must not set the tolerance
            resp = project_onto_body(x, K.intersect(ph.outer), RESPONSE_TOL * (1.0 + float(np.linalg.norm(x))))
        self._emit(resp)
        # in-phase offline cost guard
        if ph.guard.add(K):
            ev.append(COST_BLOWUP)
            self._end_phase(COST_BLOWUP, self.t + 1)
            self._start_phase(ph.z, 2 * ph.r, ev)
            self.phase.x = self.phase.z.copy()
            return self.last
        # lower-dimensional phase bookkeeping
        if ph.sub is None:
            ph.region = ph.region.with_request(K)
            ev.append("cut")
        else:
            ph.sub_requests.append(K)
            if sliced_ok and ph.sub.movement < ph.sub_budget:
                ph.x = self.last.copy()
                return self.last
            self._close_sub(ev, exhausted_by_slice=not sliced_ok)
        return self._after_cut(ev)

    def _open_sub(self, ev: list) -> None:
        ph = self.phase
        k = self.d - ph.dim_v
        ph.ledger.lower_dim_calls[k] = ph.ledger.lower_dim_calls.get(k, 0) + 1
        anchor = ph.x.copy()
        ph.sub_frame = ph.V.with_anchor(anchor)
        ph.sub_base = ph.region
        ph.sub_requests = []
        ph.sub_budget = self.constants.budget(k, ph.r)
        ph.sub = Chaser(np.zeros(ph.dim_v), self.config, self.depth + 1,
                        self.seed_path + (ph.ledger.phase_id, self.t))
        ph.sub.loc = np.zeros(ph.dim_v)
        ev.append(f"lowdim{ph.dim_v}")

    def _close_sub(self, ev: list, exhausted_by_slice: bool) -> None:
        ph = self.phase
        rc = ReachableConstraint(tuple(ph.sub_requests), ph.sub_base, ph.r, ph.r, ph.sub_frame)
        region = ph.region
        for K in ph.sub_requests:
            region = region.with_request(K)
        ph.region = refine_with_reachable(region, rc)
        ev.append("reach" + ("-empty-slice" if exhausted_by_slice else ""))
        ph.sub = None
        ph.sub_frame = None
        ph.sub_requests = []

    def _after_cut(self, ev: list) -> np.ndarray:
        ph = self.phase
        cfg = self.config
        sp = cfg.sampler
        if ph.cloud is not None and ph.cloud[0] is ph.region and ph.cloud[1] == ph.dim_v:
            # unchanged region: keep the previous estimate
            return self._respond(ph.cloud[2])
        try:
            cloud = sample_region(ph.region, sp.n, self._seed(ph.ledger.phase_id), sp.chains,
                                  sp.burn_in_per_dim * self.d, warm=ph.last_points)
        except EmptyRegion:
            ev.append("empty")
            ph.ledger.empty_region = True
            self._end_phase(LOCALIZATION, self.t + 1)
            self._start_phase(ph.z, 2 * ph.r, ev)
            return self.last
        # grow V by certified thin directions
        while ph.dim_v < self.d:
            k = self.d - ph.dim_v
            rep = find_thin_direction(ph.region, ph.V, self.constants.thin_threshold(k, ph.r), cloud)
            if rep.direction is None:
                break
            ph.V = ph.V.extended(rep.ambient)
            ph.box.append((rep.lower, rep.upper))
            ev.append("thin")
        if ph.dim_v == self.d:
            return self._finish_phase(cloud, ev)
        cg = estimate_centroid(cloud, ph.V)
        ph.last_points = cloud.points[::max(1, cloud.n // 64)]
        ph.cloud = (ph.region, ph.dim_v, cg)
        return self._respond(cg)

    def _respond(self, cg) -> np.ndarray:
        ph = self.phase
        # closest point with the centroid's V-perp coordinates, kept in B(z, R)
        Bv, Bp = ph.V.basis, ph.V.complement
        a = (cg - Bp @ (ph.z - ph.V.anchor)) @ Bp
        b = (Bv @ (ph.x - ph.z)) @ Bv
        na2 = float(a @ a)
        nb = float(np.linalg.norm(b))
        if na2 + nb * nb > ph.R ** 2 and nb > 0:
            b *= math.sqrt(max(0.0, ph.R ** 2 - na2)) / nb
        x_new = ph.z + a + b
        ph.x = x_new
        self._move(x_new)
        return self.last

    def _finish_phase(self, cloud, ev: list) -> np.ndarray:
        ph = self.phase
        B = ph.V.basis
        zc = B @ ph.z
        lo = np.array([b[0] for b in ph.box])
        hi = np.array([b[1] for b in ph.box])
        far = np.where(np.abs(hi - zc) > np.abs(lo - zc), hi, lo)
        corner_dist = float(np.linalg.norm(far - zc))
        ph.ledger.box_corner_distance = corner_dist
        if corner_dist < ph.R - ph.r - self.tol:
            ball = enclosing_ball(cloud, self.config.inflation)
            corners = np.array(np.meshgrid(*[[a, b] for a, b in zip(lo, hi)], indexing="ij"))
            corners = corners.reshape(self.d, -1).T @ B
            alpha_r = self.constants.alpha * ph.r
            if np.all(np.linalg.norm(corners - ball.center, axis=1) <= alpha_r):
                z_new = ball.center
            else:
                z_new = (0.5 * (lo + hi)) @ B
            ev.append(SHRUNK)
            self._end_phase(SHRUNK, self.t + 1)
            self._start_phase(z_new, ph.r / 2, ev)
        else:
            ev.append(LOCALIZATION)
            self._end_phase(LOCALIZATION, self.t + 1)
            self._start_phase(ph.z, 2 * ph.r, ev)
        return self.last

    def close(self) -> None:
        if self.phase is not None and self.phase.ledger.end_t < 0:
            self.phase.ledger.end_t = self.t

    @property
    def dim_v(self) -> int:
        return self.phase.dim_v if self.phase is not None else 0

    @property
    def phase_id(self) -> int:
        return self.phase.ledger.phase_id if self.phase is not None else -1


def chase(requests: Iterable[ConvexBody], x0, config: ChaserConfig | None = None) -> RunReport:
    config = config or ChaserConfig()
    ch = Chaser(x0, config)
    resp = []
    pids = []
    dims = []
    for i, K in enumerate(requests):
        if config.max_requests is not None and i >= config.max_requests:
            break
        K = normalize_request(K)
        resp.append(ch.step(K))
        pids.append(ch.phase_id)
        dims.append(ch.dim_v)
    ch.close()
    R = np.array(resp).reshape(-1, ch.d)
    prev = np.vstack([ch.x0[None], R[:-1]]) if len(R) else R
    costs = np.linalg.norm(R - prev, axis=1) if len(R) else np.zeros(0)
    return RunReport(ch.x0, R, costs, pids, list(ch.events), dims, ch.phases, "paper", config.tolerance, config)


def run_global_phase(z, r: float, requests: Sequence[ConvexBody], config: ChaserConfig | None = None):
    """Run a single global phase from (z, r); returns (ledger, responses, consumed)."""
    if not r > 0:
        raise BadParams("r must be positive")
    config = config or ChaserConfig()
    ch = Chaser(z, config)
    ev: list = []
    ch._start_phase(as_point(z), float(r), ev)
    first = ch.phase.ledger
    out = []
    for K in requests:
        out.append(ch.step(normalize_request(K)))
        if first.end_condition != OPEN:
            break
    ch.close()
    return first, np.array(out), len(out)


def run_lower_dim_phase(region: Region, V: AffineFrame, r: float, requests: Sequence[ConvexBody],
                        config: ChaserConfig | None = None) -> ReachableConstraint:
    """Consume requests with a nested selector on slices through c + V until
    its movement budget is spent; returns the reachable constraint."""
    config = config or ChaserConfig()
    requests = [normalize_request(K) for K in requests]
    d = region.dim
    if V.dim == 0:
        return ReachableConstraint((requests[0],), region, r, r, V)
    consts = competitive_constants(d, config)
    k = d - V.dim
    budget = consts.budget(k, r)
    cloud = sample_region(region, config.sampler.n, config.seed, config.sampler.chains)
    cg = estimate_centroid(cloud, V)
    anchor = V.anchor + cg @ V.complement
    frame = V.with_anchor(anchor)
    sub = Chaser(np.zeros(V.dim), config, 1)
    used = []
    outer = ConvexBody.ball(region.enclosure.center, region.enclosure.radius + r)
    for K in requests:
        used.append(K)
        try:
            Ks = slice_to_frame(K.intersect(outer), frame)
            project_onto_body(np.zeros(Ks.dim), Ks)
        except (EmptySlice, Infeasible):
            break
        sub.step(Ks)
        if sub.movement >= budget:
            break
    return ReachableConstraint(tuple(used), region, r, r, frame)


def update_thin_subspace(region: Region, V: AffineFrame, constants: ConstantsTable, cloud,
                         r: float | None = None) -> AffineFrame:
    r = region.scale if r is None else r
    d = region.dim
    while V.dim < d:
        rep = find_thin_direction(region, V, constants.thin_threshold(d - V.dim, r), cloud)
        if rep.direction is None:
            break
        V = V.extended(rep.ambient)
    return V


def greedy_selector(requests: Iterable[ConvexBody], x0, tolerance: float = 1e-6) -> RunReport:
    x = as_point(x0)
    x0 = x.copy()
    out = []
    for t, K in enumerate(requests):
        try:
            x = project_onto_body(x, K)
        except Infeasible as exc:
            raise RequestInfeasible(t, str(exc)) from exc
        out.append(x)
    R = np.array(out).reshape(-1, x0.shape[0])
    prev = np.vstack([x0[None], R[:-1]]) if len(R) else R
    costs = np.linalg.norm(R - prev, axis=1) if len(R) else np.zeros(0)
    return RunReport(x0, R, costs, [-1] * len(R), [""] * len(R), [0] * len(R), [], "greedy", tolerance)
