"""Convex-set primitives: halfspaces, balls, padded intersections and slices.

Bodies are immutable. Heavy lifting (Dykstra projections, support ascent) is
delegated to the compiled kernels in :mod:`chasebody._kernels` through a flat
:class:`SetTable`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import _cone as C
from . import _kernels as K
from .errors import DimensionMismatch, EmptySlice, Infeasible, Unbounded

DYKSTRA_MAXITER = 10_000
DYKSTRA_STALL = 50
UNBOUNDED_CAP = 1e12


def as_point(x, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(-1)
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"expected a point of dimension {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point has non-finite coordinates")
    return arr


@dataclass(frozen=True, eq=False)
class Halfspace:
    """{y : normal . y <= offset}, with the normal scaled to unit length."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = np.asarray(self.normal, dtype=float).reshape(-1)
        n = float(np.linalg.norm(a))
        if not n > 0:
            raise ValueError("halfspace normal must be nonzero")
        if abs(n - 1.0) <= 4e-16:
            # already unit: rescaling again would perturb the last bits and break round trips
            n = 1.0
        object.__setattr__(self, "normal", a / n)
        object.__setattr__(self, "offset", float(self.offset) / n)

    @property
    def dim(self) -> int:
        return self.normal.shape[0]


@dataclass(frozen=True, eq=False)
class BallConstraint:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.radius >= 0:
            raise ValueError("ball radius must be nonnegative")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains(self, y, tol: float = 0.0) -> bool:
        return float(np.linalg.norm(as_point(y, self.dim) - self.center)) <= self.radius + tol


class SetTable:
    """Flat atom/set arrays consumed by the kernels."""

    def __init__(self, dim: int):
        self.dim = dim
        self._kinds: list[int] = []
        self._vecs: list[np.ndarray] = []
        self._scal: list[float] = []
        self._lo: list[int] = []
        self._hi: list[int] = []
        self._pad: list[float] = []
        self._frozen = False

    def _add_set(self, atoms: Sequence[tuple[int, np.ndarray, float]], pad: float) -> int:
        if self._frozen:
            raise RuntimeError("table already finalized")
        lo = len(self._kinds)
        for kind, vec, s in atoms:
            self._kinds.append(kind)
            self._vecs.append(np.asarray(vec, dtype=float))
            self._scal.append(float(s))
        self._lo.append(lo)
        self._hi.append(len(self._kinds))
        self._pad.append(float(pad))
        return len(self._lo) - 1

    def add_halfspace(self, normal, offset: float, pad: float = 0.0) -> int:
        return self._add_set([(K.HALFSPACE, normal, offset)], pad)

    def add_ball(self, center, radius: float, pad: float = 0.0) -> int:
        return self._add_set([(K.BALL, center, radius)], pad)

    def add_hyperplane(self, normal, offset: float) -> int:
        return self._add_set([(K.HYPERPLANE, normal, offset)], 0.0)

    def add_body(self, body: "ConvexBody", shrink: float = 0.0) -> list[int]:
        """Add a body; returns the set ids whose intersection is the body.

        ``shrink`` tightens the body so that its points keep at least that
        much slack in the original one.
        """
        atoms = body.atoms()
        if not atoms:
            return []
        pad = body.pad
        if pad >= shrink:
            if pad > 0 and len(atoms) > 1:
                return [self._add_set(atoms, pad - shrink)]
            if len(atoms) == 1:
                return [self._add_set(atoms, pad - shrink)]
            return [self._add_set([a], 0.0) for a in atoms]
        return self.add_atoms(shrink_atoms(atoms, shrink - pad))

    def add_atoms(self, atoms) -> list[int]:
        return [self._add_set([a], 0.0) for a in atoms]

    def finalize(self) -> "SetTable":
        d = self.dim
        self.kinds = np.asarray(self._kinds, dtype=np.int64)
        self.vecs = np.asarray(self._vecs, dtype=float).reshape(-1, d) if self._vecs else np.zeros((0, d))
        self.scal = np.asarray(self._scal, dtype=float)
        self.set_lo = np.asarray(self._lo, dtype=np.int64)
        self.set_hi = np.asarray(self._hi, dtype=np.int64)
        self.set_pad = np.asarray(self._pad, dtype=float)
        self._frozen = True
        return self

    @property
    def nsets(self) -> int:
        return len(self._lo)

    def all_ids(self) -> np.ndarray:
        return np.arange(self.nsets, dtype=np.int64)

    def args(self):
        return (self.kinds, self.vecs, self.scal, self.set_lo, self.set_hi, self.set_pad)

    # thin wrappers around the kernels -------------------------------------
    def project(self, x, ids, tol: float, maxit: int = DYKSTRA_MAXITER):
        """(point, residual, status); a stalled Dykstra run is settled by an
        exact cone program."""
        x = np.asarray(x, dtype=float)
        p, res, st = K.project(x, ids, *self.args(), tol, maxit, DYKSTRA_STALL)
        if st == K.STATUS_OK or len(ids) == 0:
            return p, res, st
        return self._cone_project(x, np.asarray(ids, dtype=np.int64), tol, (p, res, st))

    def _cone_project(self, x, ids, tol, fallback):
        B = C.ConeBuilder()
        y = B.var(self.dim)
        t = B.var(1)[0]
        C.add_table(B, self, ids, y)
        B.soc([((t,), (1.0,), 0.0)] + [((y[i],), (1.0,), -float(x[i])) for i in range(self.dim)])
        A, b, cones = B.assemble()
        q = np.zeros(B.nvar)
        q[t] = 1.0
        sol = C.solve(q, A, b, cones)
        if sol.status == "infeasible":
            return x.copy(), np.inf, K.STATUS_INFEASIBLE
        if sol.status != "optimal":
            return fallback
        p = sol.x[y]
        res = self.violation(p, ids, tol)
        if res > tol:
            # polish from the cone solution
            p2, res2, st2 = K.project(p, ids, *self.args(), tol, DYKSTRA_MAXITER, DYKSTRA_STALL)
            if st2 == K.STATUS_OK:
                return p2, res2, st2
            return p, res, K.STATUS_MAXITER
        return p, res, K.STATUS_OK

    def violation(self, x, ids, tol: float) -> float:
        return K.violation(np.asarray(x, dtype=float), ids, *self.args(), tol, DYKSTRA_MAXITER)

    def violations(self, pts, ids, tol: float) -> np.ndarray:
        pts = np.ascontiguousarray(pts, dtype=float).reshape(-1, self.dim)
        return K.violations_many(pts, ids, *self.args(), tol, DYKSTRA_MAXITER)

    def support(self, y0, v, scale: float, ids, tol: float):
        """(attained, certified upper, maximizer, status) of v.y over the sets.

        Status 0 is ok, 1 empty, 3 unbounded.  The value comes from a cone
        program (padded compound sets get an auxiliary point); projected
        ascent is the fallback when the solver fails."""
        y0 = np.asarray(y0, dtype=float)
        v = np.asarray(v, dtype=float)
        ids = np.asarray(ids, dtype=np.int64)
        out = self._cone_support(y0, v, ids, tol)
        if out is not None:
            return out
        return K.support_ascent(y0, v, float(scale), ids, *self.args(), tol, DYKSTRA_MAXITER,
                                DYKSTRA_STALL, UNBOUNDED_CAP)

    def _cone_support(self, y0, v, ids, tol):
        """Exact support as one second-order cone program; the dual
        objective gives the certified upper value."""
        d = self.dim
        empty = np.full(d, np.nan)
        builder = C.ConeBuilder()
        y = builder.var(d)
        C.add_table(builder, self, ids, y)
        A, b, cones = builder.assemble()
        if A.shape[0] == 0:
            if np.any(v != 0):
                return np.inf, np.inf, empty, 3
            return 0.0, 0.0, y0.copy(), 0
        q = np.zeros(builder.nvar)
        q[y] = -v
        res = C.solve(q, A, b, cones)
        if res.status == "infeasible":
            return -np.inf, -np.inf, empty, 1
        if res.status == "unbounded":
            return np.inf, np.inf, empty, 3
        if res.status != "optimal":
            return None
        yv = res.x[y]
        if np.max(np.abs(yv)) >= 0.5 * UNBOUNDED_CAP:
            return np.inf, np.inf, yv, 3
        upper = max(-res.value, -res.dual_value) + tol
        p0, _, pst = self.project(y0, ids, tol)
        if pst != K.STATUS_OK:
            return float(v @ yv), upper, yv, 0
        # attained value: walk from a feasible point toward the cone optimum
        lo, hi = K.chord(p0, yv - p0, ids, *self.args(), tol, DYKSTRA_MAXITER)
        pt = p0 + min(1.0, hi) * (yv - p0)
        return float(v @ pt), max(upper, float(v @ pt)), pt, 0


def shrink_atoms(atoms, m: float) -> list:
    """Tighten each atom by m; an over-shrunk ball becomes an empty pair."""
    out = []
    for kind, vec, s in atoms:
        if m > 0 and kind == K.BALL and s - m < 0:
            e = np.zeros(len(vec))
            e[0] = 1.0
            out += [(K.HALFSPACE, e, -1.0), (K.HALFSPACE, -e, -1.0)]
        else:
            out.append((kind, vec, s - max(m, 0.0)))
    return out


def envelope_directions(d: int, frame: AffineFrame | None = None) -> np.ndarray:
    """Fixed, deterministic direction set for polyhedral envelopes."""
    dirs = [np.eye(d), -np.eye(d)]
    if frame is not None:
        F = np.vstack([frame.basis, frame.complement])
        dirs += [F, -F]
    if d == 2:
        ang = np.arange(16) * (2 * np.pi / 16)
        dirs.append(np.stack([np.cos(ang), np.sin(ang)], axis=1))
    elif d >= 3:
        m = 8 * d
        i = np.arange(m) + 0.5
        # golden-angle spiral on the sphere, padded with zeros beyond three axes
        phi = np.arccos(1 - 2 * i / m)
        th = np.pi * (1 + 5 ** 0.5) * i
        pts = np.zeros((m, d))
        pts[:, 0] = np.cos(th) * np.sin(phi)
        pts[:, 1] = np.sin(th) * np.sin(phi)
        pts[:, 2] = np.cos(phi)
        if d > 3:
            rng = np.random.default_rng(12345)
            extra = rng.standard_normal((4 * d, d))
            pts = np.vstack([pts, extra / np.linalg.norm(extra, axis=1, keepdims=True)])
        dirs.append(pts)
    D = np.vstack(dirs)
    D = D / np.linalg.norm(D, axis=1, keepdims=True)
    keep = []
    for v in D:
        if all(float(v @ w) < 1 - 1e-9 for w in keep):
            keep.append(v)
    return np.array(keep)


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Intersection of halfspaces and balls, Minkowski-padded by ``pad``.

    Empty constraint lists mean the whole space, so ``dim`` must be given in
    that case.
    """

    halfspaces: tuple = ()
    balls: tuple = ()
    pad: float = 0.0
    dim: int | None = None

    def __post_init__(self):
        hs = tuple(self.halfspaces)
        bs = tuple(self.balls)
        object.__setattr__(self, "halfspaces", hs)
        object.__setattr__(self, "balls", bs)
        dims = {h.dim for h in hs} | {b.dim for b in bs}
        if self.dim is not None:
            dims.add(int(self.dim))
        if len(dims) != 1:
            raise DimensionMismatch(f"inconsistent or unknown body dimension: {sorted(dims)}")
        object.__setattr__(self, "dim", dims.pop())
        if not self.pad >= 0:
            raise ValueError("pad must be nonnegative")
        object.__setattr__(self, "pad", float(self.pad))

    # constructors -------------------------------------------------------
    @classmethod
    def whole_space(cls, dim: int) -> "ConvexBody":
        return cls(dim=dim)

    @classmethod
    def ball(cls, center, radius: float, pad: float = 0.0) -> "ConvexBody":
        return cls(balls=(BallConstraint(center, radius),), pad=pad)

    @classmethod
    def point(cls, p) -> "ConvexBody":
        return cls.ball(p, 0.0)

    @classmethod
    def polytope(cls, A, b, pad: float = 0.0) -> "ConvexBody":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        return cls(halfspaces=tuple(Halfspace(a, bi) for a, bi in zip(A, b)), pad=pad, dim=A.shape[1])

    @classmethod
    def box(cls, lo, hi, pad: float = 0.0) -> "ConvexBody":
        lo = as_point(lo)
        hi = as_point(hi, lo.shape[0])
        d = lo.shape[0]
        eye = np.eye(d)
        return cls.polytope(np.vstack([eye, -eye]), np.concatenate([hi, -lo]), pad=pad)

    def intersect(self, *others: "ConvexBody") -> "ConvexBody":
        """Intersection of unpadded bodies (and at most one padded single-atom body)."""
        bodies = [self, *others]
        hs: list = []
        bs: list = []
        for body in bodies:
            body = body.expanded()
            if body.pad > 0:
                raise ValueError("cannot intersect padded multi-constraint bodies exactly")
            hs.extend(body.halfspaces)
            bs.extend(body.balls)
        return ConvexBody(tuple(hs), tuple(bs), 0.0, self.dim)

    def padded(self, r: float) -> "ConvexBody":
        return ConvexBody(self.halfspaces, self.balls, self.pad + r, self.dim)

    def raw(self) -> "ConvexBody":
        return ConvexBody(self.halfspaces, self.balls, 0.0, self.dim)

    def expanded(self) -> "ConvexBody":
        """Fold the pad into the constraint when that is exact (one constraint)."""
        if self.pad == 0 or self.n_constraints != 1:
            return self
        if self.halfspaces:
            h = self.halfspaces[0]
            return ConvexBody((Halfspace(h.normal, h.offset + self.pad),), (), 0.0, self.dim)
        b = self.balls[0]
        return ConvexBody((), (BallConstraint(b.center, b.radius + self.pad),), 0.0, self.dim)

    # structure -----------------------------------------------------------
    @property
    def n_constraints(self) -> int:
        return len(self.halfspaces) + len(self.balls)

    @property
    def is_whole_space(self) -> bool:
        return self.n_constraints == 0

    def atoms(self) -> list[tuple[int, np.ndarray, float]]:
        return ([(K.HALFSPACE, h.normal, h.offset) for h in self.halfspaces]
                + [(K.BALL, b.center, b.radius) for b in self.balls])

    def scale(self) -> float:
        s = 1.0
        for h in self.halfspaces:
            s = max(s, abs(h.offset))
        for b in self.balls:
            s = max(s, float(np.linalg.norm(b.center)) + b.radius)
        return s + self.pad

    def default_tol(self) -> float:
        return 1e-8 * max(1.0, self.scale())

    @cached_property
    def table(self) -> SetTable:
        t = SetTable(self.dim)
        t.add_body(self)
        return t.finalize()

    @cached_property
    def ids(self) -> np.ndarray:
        return self.table.all_ids()

    def outer_atoms(self) -> list[tuple[int, np.ndarray, float]]:
        """Simple atoms whose intersection contains the body.

        Exact for unpadded bodies and single-constraint pads.  A padded
        multi-constraint body K + pB becomes the constraints of K pushed
        out by p, plus supporting halfspaces h_K(v) + p over a fixed
        direction set.
        """
        body = self.expanded()
        if body.pad == 0:
            return body.atoms()
        return self._padded_envelope

    @cached_property
    def _padded_envelope(self) -> list:
        p = self.pad
        out = [(K.HALFSPACE, h.normal, h.offset + p) for h in self.halfspaces]
        out += [(K.BALL, b.center, b.radius + p) for b in self.balls]
        t = SetTable(self.dim)
        t._add_set(self.atoms(), 0.0)
        t.finalize()
        ids = t.all_ids()
        raw = self.raw()
        tol = raw.default_tol()
        y0, _, st = t.project(np.zeros(self.dim), ids, tol)
        if st != K.STATUS_OK:
            return out
        face_normals = [h.normal for h in self.halfspaces]
        for v in envelope_directions(self.dim):
            if any(float(v @ a) > 1 - 1e-9 for a in face_normals):
                continue
            _, hi, _, st = t.support(y0, v, max(1.0, raw.scale()), ids, tol)
            if st == 0 and np.isfinite(hi):
                out.append((K.HALFSPACE, v, float(hi) + p))
        return out

    def contains(self, y, tol: float | None = None) -> bool:
        tol = self.default_tol() if tol is None else tol
        y = as_point(y, self.dim)
        return self.table.violation(y, self.ids, tol * 0.1) <= tol

    # serialization -------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "halfspaces": [{"a": [float(v) for v in h.normal], "b": float(h.offset)} for h in self.halfspaces],
            "balls": [{"c": [float(v) for v in b.center], "r": float(b.radius)} for b in self.balls],
            "pad": float(self.pad),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConvexBody":
        hs = tuple(Halfspace(h["a"], h["b"]) for h in data.get("halfspaces", []))
        bs = tuple(BallConstraint(b["c"], b["r"]) for b in data.get("balls", []))
        return cls(hs, bs, float(data.get("pad", 0.0)), data.get("dim"))

    def __repr__(self) -> str:
        return (f"ConvexBody(dim={self.dim}, halfspaces={len(self.halfspaces)}, "
                f"balls={len(self.balls)}, pad={self.pad:g})")


@dataclass(frozen=True, eq=False)
class AffineFrame:
    """anchor + span(basis); rows of ``basis`` and ``complement`` are orthonormal."""

    anchor: np.ndarray
    basis: np.ndarray
    complement: np.ndarray = field(default=None)

    def __post_init__(self):
        c = as_point(self.anchor)
        d = c.shape[0]
        B = np.asarray(self.basis, dtype=float).reshape(-1, d)
        if self.complement is None:
            C = _complete_basis(B, d)
        else:
            C = np.asarray(self.complement, dtype=float).reshape(-1, d)
        object.__setattr__(self, "anchor", c)
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "complement", C)
        full = np.vstack([B, C])
        if full.shape[0] != d or not np.allclose(full @ full.T, np.eye(d), atol=1e-10):
            raise ValueError("frame basis and complement must form an orthonormal basis")

    @classmethod
    def trivial(cls, anchor) -> "AffineFrame":
        a = as_point(anchor)
        return cls(a, np.zeros((0, a.shape[0])), np.eye(a.shape[0]))

    @classmethod
    def from_vectors(cls, anchor, vectors) -> "AffineFrame":
        a = as_point(anchor)
        V = np.asarray(vectors, dtype=float).reshape(-1, a.shape[0])
        return cls(a, _orthonormalize(V), None)

    @property
    def ambient_dim(self) -> int:
        return self.anchor.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def lift(self, y) -> np.ndarray:
        return self.anchor + np.asarray(y, dtype=float) @ self.basis

    def with_anchor(self, anchor) -> "AffineFrame":
        return AffineFrame(as_point(anchor, self.ambient_dim), self.basis, self.complement)

    def extended(self, v) -> "AffineFrame":
        """Frame spanning V plus v (v is orthogonalized against V first)."""
        v = np.asarray(v, dtype=float)
        v = v - self.basis.T @ (self.basis @ v)
        n = np.linalg.norm(v)
        if n < 1e-12:
            raise ValueError("direction lies in the frame already")
        B = np.vstack([self.basis, v / n])
        return AffineFrame(self.anchor, B, None)


def _orthonormalize(V: np.ndarray) -> np.ndarray:
    out = []
    for v in V:
        w = v.astype(float).copy()
        for u in out:
            w -= (u @ w) * u
        n = np.linalg.norm(w)
        if n > 1e-12:
            out.append(w / n)
    d = V.shape[1]
    return np.array(out).reshape(-1, d)


def _complete_basis(B: np.ndarray, d: int) -> np.ndarray:
    if B.shape[0] == 0:
        return np.eye(d)
    if B.shape[0] == d:
        return np.zeros((0, d))
    # null space of B via SVD; deterministic sign convention
    _, _, vt = np.linalg.svd(B, full_matrices=True)
    C = vt[B.shape[0]:]
    C = C - (C @ B.T) @ B
    C = _orthonormalize(C)
    for i in range(C.shape[0]):
        j = int(np.argmax(np.abs(C[i])))
        if C[i, j] < 0:
            C[i] = -C[i]
    return C


def project_subspace(x, frame: AffineFrame, onto_complement: bool = False) -> np.ndarray:
    x = as_point(x, frame.ambient_dim)
    M = frame.complement if onto_complement else frame.basis
    return M @ (x - frame.anchor)


@dataclass(frozen=True, eq=False)
class SlicedBody:
    """Slice of a padded multi-constraint body, evaluated by lifting to the
    parent space (the pad does not commute with slicing)."""

    parent: ConvexBody
    frame: AffineFrame

    @property
    def dim(self) -> int:
        return self.frame.dim

    @property
    def pad(self) -> float:
        return 0.0

    def scale(self) -> float:
        return self.parent.scale() + float(np.linalg.norm(self.frame.anchor))

    def default_tol(self) -> float:
        return 1e-8 * max(1.0, self.scale())

    @cached_property
    def _ambient(self):
        t = SetTable(self.parent.dim)
        ids = t.add_body(self.parent)
        for u in self.frame.complement:
            ids.append(t.add_hyperplane(u, float(u @ self.frame.anchor)))
        t.finalize()
        return t, np.asarray(ids, dtype=np.int64)

    def contains(self, y, tol: float | None = None) -> bool:
        tol = self.default_tol() if tol is None else tol
        y = as_point(y, self.dim)
        return self.parent.contains(self.frame.lift(y), tol)


BodyLike = "ConvexBody | SlicedBody"


def _ambient_view(body):
    """(table, ids, lift, lower) for evaluating a body with the kernels."""
    if isinstance(body, SlicedBody):
        t, ids = body._ambient
        fr = body.frame
        return t, ids, fr.lift, (lambda p: fr.basis @ (p - fr.anchor)), (lambda v: v @ fr.basis)
    ident = lambda p: p  # noqa: E731
    return body.table, body.ids, ident, ident, ident


def _pad_rule(x: np.ndarray, raw_p: np.ndarray, pad: float) -> np.ndarray:
    diff = x - raw_p
    dist = float(np.linalg.norm(diff))
    if dist <= pad:
        return x.copy()
    return raw_p + diff * (pad / dist)


def project_onto_body(x, body, tol: float | None = None) -> np.ndarray:
    """Closest point of ``body`` to ``x`` (cyclic Dykstra; exact pad rule)."""
    tol = body.default_tol() if tol is None else tol
    if not tol > 0:
        raise ValueError("tol must be positive")
    x = as_point(x, body.dim)
    t, ids, lift, lower, _ = _ambient_view(body)
    if len(ids) == 0:
        return x.copy()
    p, res, status = t.project(lift(x), ids, tol)
    if status != K.STATUS_OK:
        raise Infeasible(f"Dykstra residual {res:.3g} above tol {tol:.3g}", res)
    return lower(p)


def distance_to_body(x, body, tol: float | None = None) -> float:
    x = as_point(x, body.dim)
    return float(np.linalg.norm(x - project_onto_body(x, body, tol)))


def support_bounds(body, v, tol: float | None = None, start=None) -> tuple[float, float, np.ndarray]:
    """(attained lower value, certified upper value, maximizer estimate)."""
    tol = body.default_tol() if tol is None else tol
    v = as_point(v, body.dim)
    nv = float(np.linalg.norm(v))
    if abs(nv - 1.0) > 1e-9:
        raise ValueError("support direction must be a unit vector")
    t, ids, lift, lower, lift_dir = _ambient_view(body)
    if len(ids) == 0:
        raise Unbounded("whole space is unbounded in every direction")
    y0 = lift(np.zeros(body.dim) if start is None else as_point(start, body.dim))
    scale = max(1.0, body.scale())
    lo, hi, p, status = t.support(y0, lift_dir(v), scale, ids, tol)
    if status == 3:
        raise Unbounded(f"body is unbounded in direction {v}")
    if status == 1:
        raise Infeasible("body is empty")
    return float(lo), float(hi), lower(p)


def support_value(body, v, tol: float | None = None) -> float:
    """max over the body of v . y, for a unit vector v."""
    return support_bounds(body, v, tol)[0]


def slice_to_frame(body: ConvexBody, frame: AffineFrame):
    """The body restricted to anchor + span(basis), in frame coordinates."""
    if frame.dim < 1:
        raise ValueError("slice frame must have dimension >= 1")
    if body.dim != frame.ambient_dim:
        raise DimensionMismatch("frame and body live in different spaces")
    body = body.expanded()
    if body.pad > 0:
        return SlicedBody(body, frame)
    k = frame.dim
    B = frame.basis
    c = frame.anchor
    hs = []
    bs = []
    for h in body.halfspaces:
        a_v = B @ h.normal
        off = h.offset - float(h.normal @ c)
        if np.linalg.norm(a_v) < 1e-12:
            if off < -1e-12 * max(1.0, abs(h.offset)):
                raise EmptySlice("halfspace misses the slice entirely")
            continue
        hs.append(Halfspace(a_v, off))
    for b in body.balls:
        w = c - b.center
        perp = frame.complement @ w
        r2 = b.radius ** 2 - float(perp @ perp)
        if r2 < 0:
            if r2 < -1e-12 * max(1.0, b.radius ** 2):
                raise EmptySlice("ball constraint has imaginary radius on the slice")
            r2 = 0.0
        bs.append(BallConstraint(-(B @ w), np.sqrt(r2)))
    return ConvexBody(tuple(hs), tuple(bs), 0.0, k)


def body_violation(body, y, tol: float | None = None) -> float:
    """Distance from y to the body (0 for members), via one projection."""
    return distance_to_body(y, body, tol)


def intersect_all(bodies: Iterable[ConvexBody], dim: int) -> ConvexBody:
    bodies = list(bodies)
    if not bodies:
        return ConvexBody.whole_space(dim)
    return bodies[0].intersect(*bodies[1:])
