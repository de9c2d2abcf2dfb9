"""Matrix-form second-order cone programs solved with Clarabel.

Constraints are collected as affine rows and assembled into Clarabel's
standard form  A x + s = b,  s in (zero cone, nonnegative cone, SOCs).
"""

from __future__ import annotations

from dataclasses import dataclass

import clarabel
import numpy as np
from scipy import sparse

from . import _kernels as K

SOLVED = (clarabel.SolverStatus.Solved, clarabel.SolverStatus.AlmostSolved)
PRIMAL_INFEASIBLE = (clarabel.SolverStatus.PrimalInfeasible, clarabel.SolverStatus.AlmostPrimalInfeasible)
DUAL_INFEASIBLE = (clarabel.SolverStatus.DualInfeasible, clarabel.SolverStatus.AlmostDualInfeasible)


@dataclass
class ConeResult:
    status: str          # "optimal", "infeasible", "unbounded" or "failed"
    x: np.ndarray | None
    value: float         # primal objective (minimization)
    dual_value: float
    z: np.ndarray | None  # dual vector, rows in assembly order


class ConeBuilder:
    """Rows are (cols, coefs, rhs) meaning  coefs . x[cols] (op) rhs."""

    def __init__(self):
        self.nvar = 0
        self._eq: list = []
        self._le: list = []
        self._soc: list = []   # list of row lists; first row is the cone's t

    def var(self, n: int) -> np.ndarray:
        out = np.arange(self.nvar, self.nvar + n)
        self.nvar += n
        return out

    def eq(self, cols, coefs, rhs: float) -> None:
        self._eq.append((np.asarray(cols), np.asarray(coefs, dtype=float), float(rhs)))

    def le(self, cols, coefs, rhs: float) -> None:
        self._le.append((np.asarray(cols), np.asarray(coefs, dtype=float), float(rhs)))

    def soc(self, rows: list) -> int:
        """|(f_1, ..., f_m)| <= f_0 for affine f_i = coefs . x[cols] + const,
        given as rows (cols, coefs, const); returns the block index."""
        self._soc.append([(np.asarray(c), np.asarray(a, dtype=float), float(k)) for c, a, k in rows])
        return len(self._soc) - 1

    def ball(self, y: np.ndarray, center, radius: float) -> int:
        """|y - center| <= radius."""
        rows = [((), (), radius)]
        rows += [((y[i],), (1.0,), -float(center[i])) for i in range(len(y))]
        return self.soc(rows)

    def norm_le(self, y: np.ndarray, w: np.ndarray, t: int) -> int:
        """|y - w| <= x[t]."""
        rows = [((t,), (1.0,), 0.0)]
        rows += [((y[i], w[i]), (1.0, -1.0), 0.0) for i in range(len(y))]
        return self.soc(rows)

    def soc_offset(self, block: int) -> int:
        """Row offset of a SOC block in the assembled system (for duals)."""
        off = len(self._eq) + len(self._le)
        for blk in self._soc[:block]:
            off += len(blk)
        return off

    def assemble(self):
        ri, ci, vals, b = [], [], [], []
        row = 0

        def put(cols, coefs, sign):
            for c, a in zip(cols, coefs):
                ri.append(row)
                ci.append(int(c))
                vals.append(sign * a)

        for cols, coefs, rhs in self._eq + self._le:
            put(cols, coefs, 1.0)
            b.append(rhs)
            row += 1
        cones = []
        if self._eq:
            cones.append(clarabel.ZeroConeT(len(self._eq)))
        if self._le:
            cones.append(clarabel.NonnegativeConeT(len(self._le)))
        for blk in self._soc:
            # s = b - A x equals the affine rows
            for cols, coefs, const in blk:
                put(cols, coefs, -1.0)
                b.append(const)
                row += 1
            cones.append(clarabel.SecondOrderConeT(len(blk)))
        A = sparse.csc_matrix((vals, (ri, ci)), shape=(row, self.nvar))
        return A, np.asarray(b, dtype=float), cones


def solve(q: np.ndarray, A, b: np.ndarray, cones: list, accuracy: float = 1e-10) -> ConeResult:
    """minimize q . x over the assembled cone system."""
    n = A.shape[1]
    st = clarabel.DefaultSettings()
    st.verbose = False
    st.tol_gap_abs = st.tol_gap_rel = accuracy
    st.tol_feas = accuracy
    try:
        sol = clarabel.DefaultSolver(sparse.csc_matrix((n, n)), np.asarray(q, dtype=float), A, b,
                                     cones, st).solve()
    except Exception:
        return ConeResult("failed", None, np.nan, np.nan, None)
    if sol.status in PRIMAL_INFEASIBLE:
        return ConeResult("infeasible", None, np.inf, np.inf, None)
    if sol.status in DUAL_INFEASIBLE:
        return ConeResult("unbounded", None, -np.inf, -np.inf, None)
    if sol.status not in SOLVED:
        return ConeResult("failed", None, np.nan, np.nan, None)
    return ConeResult("optimal", np.asarray(sol.x, dtype=float), float(sol.obj_val),
                      float(sol.obj_val_dual), np.asarray(sol.z, dtype=float))


def add_table(builder: ConeBuilder, table, ids, y: np.ndarray) -> None:
    """Constraints for y in the intersection of compiled sets ``ids``."""
    d = table.dim
    for j in ids:
        lo, hi, pad = int(table.set_lo[j]), int(table.set_hi[j]), float(table.set_pad[j])
        u = y
        if pad > 0 and hi - lo > 1:
            # Minkowski pad: y = u + w with |w| <= pad
            u = builder.var(d)
            rows = [((), (), pad)] + [((y[i], u[i]), (1.0, -1.0), 0.0) for i in range(d)]
            builder.soc(rows)
            pad = 0.0
        for a in range(lo, hi):
            kind, vec, sc = int(table.kinds[a]), table.vecs[a], float(table.scal[a])
            if kind == K.HALFSPACE:
                builder.le(u, vec, sc + pad)
            elif kind == K.HYPERPLANE:
                if pad > 0:
                    builder.le(u, vec, sc + pad)
                    builder.le(u, -vec, pad - sc)
                else:
                    builder.eq(u, vec, sc)
            else:
                builder.ball(u, vec, sc + pad)
