"""Executable checks of the geometric facts the selector relies on.

* approximate Grünbaum cuts and the inscribed-ball bound on analytic bodies;
* the per-phase potential inequality on logged runs;
* the subspace-selector weights built from a family of cheap paths;
* progress of region refinements, measured on a common probe cloud.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as K
from .chaser import FAR_REQUEST, OPEN, SHRUNK, ChaserConfig, RunReport, competitive_constants
from .errors import SingularCovariance
from .geometry import AffineFrame, BallConstraint, ConvexBody, SetTable, distance_to_body
from .offline import OfflinePath, PathProblem, solve_offline
from .omega import Region
from .sampling import _Target, support_bounds

GRUNBAUM = 1.0 - 1.0 / math.e


# ---------------------------------------------------------------------------
# analytic test bodies

@dataclass
class ZooBody:
    name: str
    body: ConvexBody
    delta: float       # minimum width
    inradius: float
    centroid: np.ndarray


def polytope_min_width(vertices: np.ndarray, n_dirs: int = 20000, seed: int = 0) -> float:
    """Minimum width of conv(vertices) by dense direction search plus local
    refinement (d <= 3)."""
    V = np.asarray(vertices, dtype=float)
    d = V.shape[1]
    if d == 1:
        return float(V.max() - V.min())
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n_dirs, d))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    P = U @ V.T
    w = P.max(axis=1) - P.min(axis=1)
    u = U[int(np.argmin(w))]
    best = float(w.min())
    step = 0.05
    for _ in range(400):
        improved = False
        for _ in range(4 * d):
            cand = u + step * rng.standard_normal(d)
            cand /= np.linalg.norm(cand)
            p = V @ cand
            wc = float(p.max() - p.min())
            if wc < best:
                best, u, improved = wc, cand, True
        if not improved:
            step *= 0.7
        if step < 1e-9:
            break
    return best


def simplex_body(d: int) -> tuple[ConvexBody, np.ndarray]:
    """conv(0, e_1, ..., e_d)."""
    A = np.vstack([-np.eye(d), np.ones((1, d))])
    b = np.concatenate([np.zeros(d), [1.0]])
    verts = np.vstack([np.zeros(d), np.eye(d)])
    return ConvexBody.polytope(A, b), verts


def analytic_zoo(d: int) -> list[ZooBody]:
    out = [ZooBody("ball", ConvexBody.ball(np.zeros(d), 1.0), 2.0, 1.0, np.zeros(d))]
    sides = np.array([1.0, 2.0, 3.0][:d]) if d > 1 else np.array([1.0])
    out.append(ZooBody("unit-cube", ConvexBody.box(np.zeros(d), np.ones(d)), 1.0, 0.5, np.full(d, 0.5)))
    out.append(ZooBody("box", ConvexBody.box(np.zeros(d), sides), float(sides.min()),
                       float(sides.min()) / 2, sides / 2))
    S, verts = simplex_body(d)
    out.append(ZooBody("simplex", S, polytope_min_width(verts), 1.0 / (d + math.sqrt(d)),
                       verts.mean(axis=0)))
    if d >= 2:
        w = 0.2
        e = np.zeros(d)
        e[-1] = 1.0
        slab = ConvexBody(ConvexBody.polytope(np.vstack([e, -e]), [w / 2, w / 2]).halfspaces,
                          (BallConstraint(np.zeros(d), 1.0),))
        out.append(ZooBody("slab-ball", slab, w, w / 2, np.zeros(d)))
    return out


# ---------------------------------------------------------------------------
# Grünbaum and inscribed ball

def _bounding_box(tgt: _Target) -> tuple[np.ndarray, np.ndarray]:
    d = tgt.dim
    lo = np.empty(d)
    hi = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        hi[i] = support_bounds(tgt, e)[1]
        lo[i] = -support_bounds(tgt, -e)[1]
    return lo, hi


def uniform_probes(body, n: int, seed: int) -> np.ndarray:
    """Uniform points of the body by rejection from its bounding box."""
    tgt = _Target(body)
    lo, hi = _bounding_box(tgt)
    rng = np.random.default_rng(seed)
    out = []
    have = 0
    while have < n:
        pts = rng.uniform(lo, hi, size=(max(2 * (n - have), 1024), tgt.dim))
        mask = tgt.table.violations(pts, tgt.ids, tgt.tol * 0.1) <= tgt.tol
        out.append(pts[mask])
        have += int(mask.sum())
    return np.vstack(out)[:n]


def check_grunbaum(body: ConvexBody, epsilon: float = 0.0, seed: int = 0, probes: int = 100_000,
                   delta: float | None = None, directions: int = 8, tolerance: float = 0.05) -> dict:
    """Largest retained mass of K intersected with (L + eps B) over random
    halfspaces L whose boundary passes through the estimated centroid."""
    d = body.dim
    if delta is None:
        # axis widths bound the minimum width from above (a stricter check)
        delta = min(support_bounds(body, e)[0] + support_bounds(body, -e)[0] for e in np.eye(d))
    cg = uniform_probes(body, probes, seed + 1).mean(axis=0)
    P = uniform_probes(body, probes, seed)
    rng = np.random.default_rng(seed + 2)
    worst = 0.0
    for _ in range(directions):
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        ratio = float(np.mean((P - cg) @ u >= -epsilon))
        worst = max(worst, ratio)
    bound = GRUNBAUM + 2 * d * (d + 1) * epsilon / delta
    return {"ratio": worst, "bound": bound, "pass": worst <= bound + tolerance, "centroid": cg}


def check_small_ball(delta: float, inradius: float, d: int) -> bool:
    return inradius >= delta / (2 * d * (d + 1))


# ---------------------------------------------------------------------------
# potential ledger

@dataclass
class PhaseCheck:
    phase_id: int
    end_condition: str
    cost: float
    Phi: float
    Phi_new: float
    lhs: float
    rhs: float
    passed: bool
    skipped: bool = False
    trap_ok: bool | None = None

    def to_json(self) -> dict:
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in self.__dict__.items()}


def _entry_point(a: np.ndarray, b: np.ndarray, body: ConvexBody, iters: int = 80) -> np.ndarray:
    """First point of the segment [a, b] inside ``body`` (b must be inside)."""
    if distance_to_body(a, body) <= 0.0:
        return a.copy()
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        m = 0.5 * (lo + hi)
        if distance_to_body(a + m * (b - a), body) > 0.0:
            lo = m
        else:
            hi = m
    return a + hi * (b - a)


def check_potential_ledger(report: RunReport, requests: Sequence[ConvexBody],
                           offline: OfflinePath | None = None, alpha: float | None = None,
                           slack: float = 1e-6) -> list[PhaseCheck]:
    """Evaluate the per-phase potential inequality along a global offline path.

    Phases ending on a far request are closed with the virtual request
    K + hB, h = dist(z, K) - R - r, whose entry point becomes the offline
    location handed to the next phase.
    """
    d = report.x0.shape[0]
    if alpha is None:
        alpha = competitive_constants(d, _config_for(report)).alpha
    if offline is None:
        offline = solve_offline(PathProblem(list(requests), report.x0, None, report.tolerance), certify=True)
    O = offline.points
    phases = [p for p in report.phases]
    checks: list[PhaseCheck] = []
    o_cur = None
    for i, ph in enumerate(phases):
        if ph.end_condition == OPEN or i + 1 >= len(phases):
            break
        nxt = phases[i + 1]
        s, e = ph.start_t, ph.end_t
        o_start = O[s] if o_cur is None else o_cur
        cost = 0.0
        prev = o_start
        for t in range(s, e):
            cost += float(np.linalg.norm(O[t + 1] - prev))
            prev = O[t + 1]
        if ph.end_condition == FAR_REQUEST:
            h = max(0.0, ph.far_distance - ph.R - ph.r)
            virt = requests[e].padded(h) if h > 0 else requests[e]
            o_end = _entry_point(prev, O[e + 1], virt)
            cost += float(np.linalg.norm(o_end - prev))
            o_cur = o_end
        else:
            o_end = prev
            o_cur = None
        Phi = max(float(np.linalg.norm(ph.z - o_start)) - alpha * ph.r, alpha * ph.r)
        Phi_new = max(float(np.linalg.norm(nxt.z - o_end)) - alpha * nxt.r, alpha * nxt.r)
        lhs = (1 + 8.5 * alpha) * cost + Phi - Phi_new
        rhs = alpha / 2 * ph.r
        ok = lhs >= rhs - slack * alpha * ph.r
        trap = None
        if ph.end_condition == SHRUNK and cost <= ph.r:
            trap = float(np.linalg.norm(nxt.z - o_end)) <= alpha * ph.r * (1 + 1e-9)
        ph.Phi_before, ph.Phi_after = Phi, Phi_new
        ph.o_start_hint, ph.o_end_hint = o_start, o_end
        checks.append(PhaseCheck(ph.phase_id, ph.end_condition, cost, Phi, Phi_new, lhs, rhs, bool(ok),
                                 not offline.converged, trap))
    return checks


def _config_for(report: RunReport) -> ChaserConfig:
    return report.config or ChaserConfig()


# ---------------------------------------------------------------------------
# subspace selector weights

@dataclass
class PathFamily:
    thetas: np.ndarray        # (M, k) points with |theta| = gamma r, V-perp coordinates
    paths: np.ndarray         # (M, T, d) frame coordinates: V part first, V-perp part last
    k: int
    gamma: float
    gamma_prime: float
    r: float

    def validate(self, tol: float = 1e-9) -> None:
        M, T, d = self.paths.shape
        mv = np.linalg.norm(np.diff(self.paths, axis=1), axis=2).sum(axis=1)
        if np.any(mv > self.r * (1 + tol)):
            raise ValueError("a path moves more than r")
        if not np.allclose(self.paths[:, -1, d - self.k:], self.thetas, atol=tol * max(1.0, self.r)):
            raise ValueError("paths must end at their theta in V-perp coordinates")
        vpart = np.linalg.norm(self.paths[:, :, : d - self.k], axis=2)
        if np.any(vpart > self.gamma_prime * self.r * (1 + tol)):
            raise ValueError("paths leave the cylinder")


@dataclass
class WeightReport:
    mu: np.ndarray            # (T, M)
    Y: np.ndarray             # (T, d)
    movement: float
    bound: float
    mean_mu_error: float
    mean_mu_u_error: float
    min_mu: float
    max_Y_perp: float
    min_eig: float
    passed: bool


def theta_set(k: int, gamma: float, r: float) -> np.ndarray:
    rad = gamma * r
    if k == 1:
        return np.tile(np.array([[rad], [-rad]]), (8, 1))
    if k == 2:
        ang = np.arange(32) * (2 * np.pi / 32)
        return rad * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    E = np.vstack([np.eye(k), -np.eye(k)])
    return rad * np.tile(E, (8, 1))


def random_family(k: int, dim_v: int, T: int, seed: int, r: float = 1.0,
                  gamma: float | None = None, gamma_prime: float = 2.0) -> PathFamily:
    """Admissible family: each path ends at (v_T, theta), moves at most r and
    stays in the cylinder."""
    gamma = 12 * k if gamma is None else gamma
    rng = np.random.default_rng(seed)
    thetas = theta_set(k, gamma, r)
    M = thetas.shape[0]
    d = dim_v + k
    paths = np.empty((M, T, d))
    for i in range(M):
        end = np.concatenate([rng.uniform(-0.5, 0.5, dim_v) * gamma_prime * r / max(1, math.sqrt(dim_v)) * 0.5,
                              thetas[i]])
        total = r * rng.uniform(0.3, 1.0)
        lens = rng.dirichlet(np.ones(T - 1)) * total
        dirs = rng.standard_normal((T - 1, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = [end]
        for j in range(T - 1):
            pts.append(pts[-1] - lens[j] * dirs[j])
        paths[i] = np.array(pts[::-1])
    return PathFamily(thetas, paths, k, gamma, gamma_prime, r)


def build_subspace_selector(family: PathFamily, slack: float = 1e-9) -> WeightReport:
    M, T, d = family.paths.shape
    k = family.k
    r = family.r
    U = family.paths[:, :, d - k:]              # (M, T, k)
    mu = np.empty((T, M))
    Y = np.empty((T, d))
    min_eig = np.inf
    lam_floor = family.gamma ** 2 * r ** 2 / (2 * k)
    for t in range(T):
        u = U[:, t, :]
        m = u.mean(axis=0)
        c = u - m
        S = c.T @ c / M
        ev = float(np.linalg.eigvalsh(S).min())
        min_eig = min(min_eig, ev)
        if ev < lam_floor - 1e-9 * max(1.0, lam_floor):
            raise SingularCovariance(f"covariance eigenvalue {ev:.4g} below {lam_floor:.4g} at step {t}")
        w = np.linalg.solve(S, m)
        mu[t] = 1.0 + (m - u) @ w
        Y[t] = (mu[t][:, None] * family.paths[:, t, :]).mean(axis=0)
    mean_err = float(np.max(np.abs(mu.mean(axis=1) - 1.0)))
    mu_u = np.einsum("tm,mtk->tk", mu, U) / M
    mu_u_err = float(np.max(np.abs(mu_u)))
    movement = float(np.linalg.norm(np.diff(Y, axis=0), axis=1).sum())
    bound = (1 + k * (2 + 4 * family.gamma_prime) / family.gamma) * r
    y_perp = float(np.max(np.abs(Y[:, d - k:])))
    scale = max(1.0, family.gamma * r)
    ok = (mean_err <= 1e-9 and mu_u_err <= 1e-9 * scale and float(mu.min()) >= -slack
          and y_perp <= 1e-9 * scale and movement <= bound * (1 + 1e-12))
    return WeightReport(mu, Y, movement, bound, mean_err, mu_u_err, float(mu.min()), y_perp, min_eig, ok)


# ---------------------------------------------------------------------------
# refinement progress

def _projected_member(tgt: _Target, frame: AffineFrame, u: np.ndarray, tol: float) -> bool:
    """Is u (V-perp coordinates) in the projection of the set onto V-perp?"""
    t = SetTable(tgt.dim)
    ids = list(tgt.obj.add_to(t) if isinstance(tgt.obj, Region) else t.add_body(tgt.obj))
    for row, val in zip(frame.complement, u):
        ids.append(t.add_hyperplane(row, float(val + row @ frame.anchor)))
    t.finalize()
    _, res, st = t.project(tgt.center, np.asarray(ids, dtype=np.int64), tol)
    return st == K.STATUS_OK


def check_cut_progress(before, after, frame: AffineFrame, probes: int = 2000, seed: int = 0) -> float:
    """Ratio of projected probe mass (after / before) on a common probe cloud."""
    tb = _Target(before)
    ta = _Target(after)
    k = frame.complement.shape[0]
    lo = np.empty(k)
    hi = np.empty(k)
    for i, row in enumerate(frame.complement):
        hi[i] = support_bounds(tb, row)[1] - row @ frame.anchor
        lo[i] = -support_bounds(tb, -row)[1] - row @ frame.anchor
    rng = np.random.default_rng(seed)
    U = rng.uniform(lo, hi, size=(probes, k))
    full = frame.dim == 0
    if full:
        pts = frame.anchor + U @ frame.complement
        mb = tb.table.violations(pts, tb.ids, tb.tol * 0.1) <= tb.tol
        ma = ta.table.violations(pts, ta.ids, ta.tol * 0.1) <= ta.tol
    else:
        mb = np.array([_projected_member(tb, frame, u, tb.tol) for u in U])
        ma = np.array([_projected_member(ta, frame, u, ta.tol) if b else False for u, b in zip(U, mb)])
    nb = int(mb.sum())
    if nb == 0:
        return float("nan")
    return float((ma & mb).sum()) / nb
