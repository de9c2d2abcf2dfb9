"""Monte-Carlo geometry: hit-and-run clouds, centroids, widths, thin
directions and enclosing balls."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import EmptyRegion
from .geometry import DYKSTRA_MAXITER, AffineFrame, BallConstraint, ConvexBody, SetTable
from .omega import Region, slack_point

DEFAULT_SAMPLES = 4096
DEFAULT_CHAINS = 8


@dataclass(frozen=True)
class SamplerParams:
    n: int = DEFAULT_SAMPLES
    chains: int = DEFAULT_CHAINS
    burn_in_per_dim: int = 40


@dataclass(eq=False)
class SampleCloud:
    points: np.ndarray
    seed: int
    chain_count: int
    burn_in: int

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(self.dim)])
            for p in self.points:
                w.writerow([repr(float(v)) for v in p])


class _Target:
    """A set (Region or ConvexBody) compiled for the kernels."""

    def __init__(self, obj):
        self.obj = obj
        if isinstance(obj, Region):
            self.compiled = obj.compiled
            self.center = obj.enclosure.center
            self.radius = obj.enclosure.radius
        elif isinstance(obj, ConvexBody):
            def compiled(shrink=0.0, _b=obj):
                if shrink == 0.0:
                    return _b.table, _b.ids
                t = SetTable(_b.dim)
                ids = t.add_body(_b, shrink)
                return t.finalize(), np.asarray(ids, dtype=np.int64)
            self.compiled = compiled
            self.radius = obj.scale()
            self.center = obj.table.project(np.zeros(obj.dim), obj.ids, 1e-9 * self.radius)[0]
        else:
            raise TypeError(f"cannot sample {type(obj).__name__}")
        self.table, self.ids = self.compiled(0.0)
        self.dim = self.table.dim
        self.tol = 1e-8 * max(1.0, self.radius + float(np.linalg.norm(self.center)))

    def refresh(self) -> None:
        self.table, self.ids = self.compiled(0.0)


def chain_seeds(seed: int, chains: int) -> list[int]:
    ss = np.random.SeedSequence(int(seed))
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in ss.spawn(chains)]


def _rounding(cov: np.ndarray) -> np.ndarray:
    d = cov.shape[0]
    reg = 1e-12 * max(float(np.trace(cov)), 1e-300) * np.eye(d)
    try:
        return np.linalg.cholesky(cov + reg)
    except np.linalg.LinAlgError:
        return np.eye(d)


def _warm_start(tgt: _Target, pts) -> np.ndarray | None:
    """The candidate with the most slack (on a halving grid), if any has
    slack at least 10 tol."""
    pts = np.ascontiguousarray(pts, dtype=float).reshape(-1, tgt.dim)
    s = 0.25 * tgt.radius
    while s >= 10 * tgt.tol:
        t, ids = tgt.compiled(s)
        ok = t.violations(pts, ids, 1e-3 * tgt.tol) <= 0.0
        if ok.any():
            inside = pts[ok]
            return inside[int(np.argmin(np.linalg.norm(inside - inside.mean(axis=0), axis=1)))].copy()
        s *= 0.25
    return None


def sample_region(region, n: int = DEFAULT_SAMPLES, seed: int = 0, chains: int = DEFAULT_CHAINS,
                  burn_in: int | None = None, start=None, rounding_rounds: int = 2,
                 warm=None) -> SampleCloud:
    """Hit-and-run cloud; chains are merged in chain-index order.

    Short pilot chains estimate the covariance first, so the final chains
    draw directions adapted to the shape of the set (thin sets mix slowly
    with isotropic directions).  ``warm`` offers candidate start points
    (typically the previous cloud) before the slack search runs."""
    tgt = _Target(region)
    d = tgt.dim
    burn = 40 * d if burn_in is None else int(burn_in)
    if start is None and warm is not None:
        start = _warm_start(tgt, warm)
    if start is None:
        start = slack_point(tgt.compiled, tgt.center, tgt.radius, tgt.tol)
        if start is None:
            raise EmptyRegion("no interior point found")
    start = np.asarray(start, dtype=float)
    args = tgt.table.args()
    L = np.eye(d)
    pilot_seeds = chain_seeds(seed + 7919, max(1, rounding_rounds))
    for k in range(rounding_rounds if d > 1 else 0):
        pts, ok = K.hit_and_run(start, 32 * d, burn, pilot_seeds[k], L, tgt.ids, *args, tgt.tol, DYKSTRA_MAXITER)
        if not ok:
            raise EmptyRegion("sampler hit an unbounded chord")
        L = _rounding(np.cov(pts, rowvar=False).reshape(d, d))
        start = pts[-1]
    chains = max(1, min(chains, n))
    per = -(-n // chains)
    parts = []
    for s in chain_seeds(seed, chains):
        pts, ok = K.hit_and_run(start, per, burn, s, L, tgt.ids, *args, tgt.tol, DYKSTRA_MAXITER)
        if not ok:
            raise EmptyRegion("sampler hit an unbounded chord")
        parts.append(pts)
    pts = np.vstack(parts)[:n]
    return SampleCloud(pts, int(seed), chains, burn)


def estimate_centroid(cloud: SampleCloud, frame: AffineFrame | None = None) -> np.ndarray:
    if cloud.n == 0:
        raise ValueError("empty cloud")
    if frame is None:
        return cloud.points.mean(axis=0)
    return ((cloud.points - frame.anchor) @ frame.complement.T).mean(axis=0)


TIGHTEN_ROUNDS = 8


def support_bounds(region, v, start=None) -> tuple[float, float]:
    """(attained, certified upper) support of the explicit description.

    For regions the maximizer is checked against the exact padded requests
    and violated ones contribute tangent cuts before the query is rerun."""
    tgt = region if isinstance(region, _Target) else _Target(region)
    v = np.asarray(v, dtype=float)
    y0 = tgt.center if start is None else np.asarray(start, dtype=float)
    for _ in range(TIGHTEN_ROUNDS):
        lo, hi, pt, st = tgt.table.support(y0, v, max(1.0, tgt.radius), tgt.ids, tgt.tol)
        if st == 3:
            return np.inf, np.inf
        if st == 1:
            return -np.inf, -np.inf
        if not isinstance(tgt.obj, Region) or not tgt.obj.tighten(pt):
            break
        tgt.refresh()
    return float(lo), float(hi)


@dataclass
class WidthReport:
    width: float
    upper: float      # certified upper support in +v
    lower: float      # certified lower bound on min over the set of v.y
    empirical: float


def width_report(region, v, cloud: SampleCloud | None = None) -> WidthReport:
    tgt = region if isinstance(region, _Target) else _Target(region)
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    if cloud is not None and cloud.n:
        proj = cloud.points @ v
        i_hi, i_lo = int(np.argmax(proj)), int(np.argmin(proj))
        s_hi, s_lo = cloud.points[i_hi], cloud.points[i_lo]
        emp = float(proj[i_hi] - proj[i_lo])
        e_hi, e_lo = float(proj[i_hi]), float(proj[i_lo])
    else:
        s_hi = s_lo = None
        emp = 0.0
        e_hi, e_lo = -np.inf, np.inf
    _, up = support_bounds(tgt, v, s_hi)
    _, dn = support_bounds(tgt, -v, s_lo)
    up = max(up, e_hi)
    low = min(-dn, e_lo)
    return WidthReport(max(up - low, emp), up, low, emp)


def directional_width(region, v, cloud: SampleCloud | None = None) -> float:
    return width_report(region, v, cloud).width


@dataclass
class ThinReport:
    direction: np.ndarray | None   # in V-perp coordinates
    width: float
    threshold: float
    ambient: np.ndarray | None = None
    upper: float = np.nan
    lower: float = np.nan


def find_thin_direction(region, V: AffineFrame, threshold: float, cloud: SampleCloud,
                        candidates: int = 4) -> ThinReport:
    """Least-variance principal directions of the cloud in V-perp, certified
    by the support-based width."""
    comp = V.complement
    k = comp.shape[0]
    if k == 0:
        raise ValueError("V already spans the space")
    coords = (cloud.points - V.anchor) @ comp.T
    if coords.shape[0] > 1:
        cov = np.cov(coords, rowvar=False).reshape(k, k)
    else:
        cov = np.eye(k)
    evals, evecs = np.linalg.eigh(cov)
    tgt = _Target(region)
    best_w = np.inf
    for i in range(min(candidates, k)):
        u = evecs[:, i]
        j = int(np.argmax(np.abs(u)))
        if u[j] < 0:
            u = -u
        amb = u @ comp
        amb = amb - V.basis.T @ (V.basis @ amb)
        amb /= np.linalg.norm(amb)
        rep = width_report(tgt, amb, cloud)
        best_w = min(best_w, rep.width)
        if rep.width <= threshold:
            return ThinReport(comp @ amb, rep.width, threshold, amb, rep.upper, rep.lower)
    return ThinReport(None, best_w, threshold)


# ---------------------------------------------------------------------------
# minimum enclosing ball (Welzl, iterative outer loop, recursion depth <= d+1)

def _circumball(R: list[np.ndarray]) -> tuple[np.ndarray | None, float]:
    if not R:
        return None, -np.inf
    p0 = R[0]
    if len(R) == 1:
        return p0.copy(), 0.0
    A = np.array([p - p0 for p in R[1:]])
    G = A @ A.T
    b = 0.5 * np.einsum("ij,ij->i", A, A)
    try:
        lam = np.linalg.solve(G, b)
    except np.linalg.LinAlgError:
        lam = np.linalg.lstsq(G, b, rcond=None)[0]
    c = p0 + lam @ A
    rad = max(float(np.linalg.norm(p - c)) for p in R)
    return c, rad


def _welzl(P: np.ndarray, n: int, R: list, d: int):
    c, rad = _circumball(R)
    if len(R) == d + 1:
        return c, rad
    i = 0
    while i < n:
        if c is None:
            j = i
        else:
            dist = np.linalg.norm(P[i:n] - c, axis=1)
            out = np.nonzero(dist > rad * (1 + 1e-12) + 1e-14)[0]
            if out.size == 0:
                break
            j = i + int(out[0])
        c, rad = _welzl(P, j, R + [P[j]], d)
        i = j + 1
    return c, rad


def minimum_enclosing_ball(points) -> BallConstraint:
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[0] == 0:
        raise ValueError("need a nonempty point array")
    P = np.unique(P, axis=0)
    order = np.random.default_rng(0).permutation(P.shape[0])
    c, rad = _welzl(P[order], P.shape[0], [], P.shape[1])
    rad = max(rad, float(np.max(np.linalg.norm(P - c, axis=1))))
    return BallConstraint(c, rad)


def enclosing_ball(cloud: SampleCloud | np.ndarray, inflation: float = 0.1) -> BallConstraint:
    pts = cloud.points if isinstance(cloud, SampleCloud) else np.asarray(cloud, dtype=float)
    b = minimum_enclosing_ball(pts)
    return BallConstraint(b.center, b.radius * (1.0 + inflation))


def probe_fraction(body_or_region, probes: np.ndarray) -> np.ndarray:
    """Membership mask of probe points against an explicit description."""
    tgt = _Target(body_or_region)
    return tgt.table.violations(probes, tgt.ids, tgt.tol * 0.1) <= tgt.tol
