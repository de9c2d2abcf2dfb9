"""ADMM engine for programs over a discrete path y_0..y_{N-1}.

    minimize   f(D) + g(y_{N-1})
    subject to D_i = y_{i+1} - y_i,   y_i in C_i

with f either the sum of step norms (the movement cost) or the indicator of
{sum |D_i| <= budget}, and g either absent, |y - q| or -v.y.  The splitting
keeps four blocks: Y (path), D (differences), W (copy of the endpoint) and Z
(per-step copies projected onto C_i with the Dykstra kernel).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import _kernels as K

DMODE_COST = 0
DMODE_BUDGET = 1

WMODE_NONE = 0
WMODE_DIST = 1
WMODE_LINEAR = 2


def system_inverse(n: int, endpoint: bool) -> np.ndarray:
    """(A^T A + I + e e^T)^{-1} for the path difference operator A."""
    M = np.eye(n)
    for i in range(n - 1):
        M[i, i] += 1.0
        M[i + 1, i + 1] += 1.0
        M[i, i + 1] -= 1.0
        M[i + 1, i] -= 1.0
    if endpoint:
        M[n - 1, n - 1] += 1.0
    return np.linalg.inv(M)


@njit(cache=True)
def _diff(Y):
    n, d = Y.shape
    out = np.empty((max(n - 1, 0), d))
    for i in range(n - 1):
        out[i] = Y[i + 1] - Y[i]
    return out


@njit(cache=True)
def _diff_adjoint(E, n):
    d = E.shape[1]
    out = np.zeros((n, d))
    for i in range(n - 1):
        out[i] -= E[i]
        out[i + 1] += E[i]
    return out


@njit(cache=True)
def l1_ball_weights(norms, budget):
    """Project a nonnegative vector onto {w >= 0, sum w <= budget}."""
    s = norms.sum()
    if s <= budget:
        return norms.copy()
    u = np.sort(norms)[::-1]
    css = 0.0
    theta = 0.0
    for i in range(u.shape[0]):
        css += u[i]
        t = (css - budget) / (i + 1)
        if u[i] - t > 0.0:
            theta = t
    out = norms - theta
    for i in range(out.shape[0]):
        if out[i] < 0.0:
            out[i] = 0.0
    return out


@njit(cache=True)
def _frob(A):
    s = 0.0
    for v in A.ravel():
        s += v * v
    return s


@njit(cache=True)
def admm_single(Y, Minv, ptr, idx, kinds, vecs, scal, set_lo, set_hi, set_pad,
                dmode, budget, wmode, q, rho, tol, ptol, maxit, stall):
    """Returns (Z, D, UD, rho, iterations, primal residual, dual residual, status).

    status: 0 converged, 2 iteration cap, 1 some per-step projection failed.
    """
    n, d = Y.shape
    Z = Y.copy()
    D = _diff(Y)
    W = Y[n - 1].copy()
    UZ = np.zeros((n, d))
    UD = np.zeros((max(n - 1, 0), d))
    UW = np.zeros(d)
    use_w = wmode != WMODE_NONE
    rp = np.inf
    rd = np.inf
    status = 2
    it = 0
    pstat = 0
    for it in range(1, maxit + 1):
        rhs = _diff_adjoint(D - UD, n) + (Z - UZ)
        if use_w:
            rhs[n - 1] += W - UW
        Y = Minv @ rhs
        AY = _diff(Y)
        # D block
        Dold = D
        V = AY + UD
        D = np.empty_like(V)
        if dmode == DMODE_COST:
            thr = 1.0 / rho
            for i in range(V.shape[0]):
                nv = K._norm(V[i])
                if nv > thr:
                    D[i] = V[i] * (1.0 - thr / nv)
                else:
                    D[i] = 0.0
        else:
            norms = np.empty(V.shape[0])
            for i in range(V.shape[0]):
                norms[i] = K._norm(V[i])
            w = l1_ball_weights(norms, budget)
            for i in range(V.shape[0]):
                if norms[i] > 0.0:
                    D[i] = V[i] * (w[i] / norms[i])
                else:
                    D[i] = 0.0
        # W block
        Wold = W
        if wmode == WMODE_DIST:
            a = Y[n - 1] + UW - q
            na = K._norm(a)
            thr = 1.0 / rho
            if na > thr:
                W = q + a * (1.0 - thr / na)
            else:
                W = q.copy()
        elif wmode == WMODE_LINEAR:
            W = Y[n - 1] + UW + q / rho
        # Z block
        Zold = Z
        Zin = Y + UZ
        Z, pres, pst = K.project_many(Zin, ptr, idx, kinds, vecs, scal, set_lo, set_hi, set_pad,
                                      ptol, 2000, stall)
        pstat = 0
        for i in range(n):
            if pst[i] == K.STATUS_INFEASIBLE:
                pstat = 1
        # duals
        UD += AY - D
        UZ += Y - Z
        if use_w:
            UW += Y[n - 1] - W
        if pstat == 1 and it > 5:
            status = 1
            break
        if it % 10 == 0 or it == maxit:
            rp2 = _frob(AY - D) + _frob(Y - Z)
            dz = Z - Zold
            ddd = D - Dold
            dual = _diff_adjoint(ddd, n) + dz
            if use_w:
                rp2 += _frob(Y[n - 1] - W)
                dual[n - 1] += W - Wold
            rp = np.sqrt(rp2)
            rd = rho * np.sqrt(_frob(dual))
            if rp <= tol and rd <= tol:
                status = 0
                break
            if rp > 10.0 * rd:
                rho *= 2.0
                UD /= 2.0
                UZ /= 2.0
                UW /= 2.0
            elif rd > 10.0 * rp:
                rho /= 2.0
                UD *= 2.0
                UZ *= 2.0
                UW *= 2.0
    return Z, D, UD * rho, rho, it, rp, rd, status


@njit(cache=True)
def admm_batch(Y0, Minv, ptr, idx, kinds, vecs, scal, set_lo, set_hi, set_pad,
               dmode, budget, wmode, Q, rho0, tol, ptol, maxit, stall):
    B, n, d = Y0.shape
    Zs = np.empty_like(Y0)
    lam = np.empty((B, max(n - 1, 0), d))
    info = np.empty((B, 4))
    status = np.empty(B, dtype=np.int64)
    for b in range(B):
        Z, D, L, rho, it, rp, rd, st = admm_single(
            Y0[b].copy(), Minv, ptr, idx, kinds, vecs, scal, set_lo, set_hi, set_pad,
            dmode, budget, wmode, Q[b], rho0, tol, ptol, maxit, stall)
        Zs[b] = Z
        lam[b] = L
        info[b, 0] = rho
        info[b, 1] = it
        info[b, 2] = rp
        info[b, 3] = rd
        status[b] = st
    return Zs, lam, info, status


@njit(cache=True)
def path_cost(P):
    s = 0.0
    for i in range(P.shape[0] - 1):
        s += K._norm(P[i + 1] - P[i])
    return s
