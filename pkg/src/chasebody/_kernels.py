"""Compiled inner loops for projections, chords and hit-and-run.

Every convex set handled by the package is compiled down to a flat *set table*:

* atoms: ``kinds[i]`` (HALFSPACE, BALL or HYPERPLANE), ``vecs[i]`` (unit normal
  or center) and ``scal[i]`` (offset or radius);
* sets: the atoms ``set_lo[j]:set_hi[j]`` intersected, then Minkowski-padded
  by ``set_pad[j]``.

A query lists the set indices it cares about, so one table can serve many
differently-constrained points (e.g. every step of a path program).
"""

from __future__ import annotations

import numpy as np
from numba import njit

HALFSPACE = 0
BALL = 1
HYPERPLANE = 2

STATUS_OK = 0
STATUS_INFEASIBLE = 1
STATUS_MAXITER = 2


@njit(cache=True)
def _dot(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


@njit(cache=True)
def _norm(a):
    return np.sqrt(_dot(a, a))


@njit(cache=True)
def atom_project(x, kind, vec, s, pad):
    if kind == HALFSPACE:
        viol = _dot(vec, x) - s - pad
        if viol > 0.0:
            return x - viol * vec
        return x.copy()
    elif kind == BALL:
        diff = x - vec
        dist = _norm(diff)
        rad = s + pad
        if dist > rad:
            if dist == 0.0:
                return vec.copy()
            return vec + diff * (rad / dist)
        return x.copy()
    else:
        off = _dot(vec, x) - s
        if off > pad:
            return x - (off - pad) * vec
        if off < -pad:
            return x - (off + pad) * vec
        return x.copy()


@njit(cache=True)
def atom_violation(x, kind, vec, s, pad):
    if kind == HALFSPACE:
        v = _dot(vec, x) - s - pad
    elif kind == BALL:
        v = _norm(x - vec) - s - pad
    else:
        v = abs(_dot(vec, x) - s) - pad
    return v if v > 0.0 else 0.0


@njit(cache=True)
def nnls(E, f, maxiter):
    """Lawson-Hanson nonnegative least squares min |E w - f|, w >= 0."""
    m = E.shape[1]
    w = np.zeros(m)
    passive = np.zeros(m, dtype=np.bool_)
    scale = 1.0
    for j in range(m):
        scale = max(scale, _norm(E[:, j]))
    eps = 1e-13 * scale * max(1.0, _norm(f))
    Et = np.ascontiguousarray(E.T)
    for outer in range(maxiter):
        grad = Et @ (f - E @ w)
        t = -1
        best = eps
        for j in range(m):
            if not passive[j] and grad[j] > best:
                best = grad[j]
                t = j
        if t < 0:
            break
        passive[t] = True
        for inner in range(3 * m + 3):
            cols = np.nonzero(passive)[0]
            Ep = np.ascontiguousarray(E[:, cols])
            zp = np.linalg.lstsq(Ep, f, -1.0)[0]
            if np.all(zp > 0.0):
                w[:] = 0.0
                for i in range(cols.shape[0]):
                    w[cols[i]] = zp[i]
                break
            alpha = 1.0
            for i in range(cols.shape[0]):
                if zp[i] <= 0.0:
                    wi = w[cols[i]]
                    a = wi / (wi - zp[i]) if wi - zp[i] > 0.0 else 0.0
                    if a < alpha:
                        alpha = a
            for i in range(cols.shape[0]):
                c = cols[i]
                w[c] = w[c] + alpha * (zp[i] - w[c])
                if w[c] <= 1e-15 * scale:
                    w[c] = 0.0
                    passive[c] = False
            if not np.any(passive):
                break
    return w


@njit(cache=True)
def polyhedron_project(x, N, b):
    """Exact projection onto {y : N y <= b} by least-distance programming.

    Returns (point, feasible flag)."""
    m, d = N.shape
    h = N @ x - b
    if np.all(h <= 0.0):
        return x.copy(), True
    E = np.empty((d + 1, m))
    for j in range(m):
        for i in range(d):
            E[i, j] = -N[j, i]
        E[d, j] = h[j]
    f = np.zeros(d + 1)
    f[d] = 1.0
    w = nnls(E, f, 4 * m + 10)
    r = E @ w - f
    denom = -r[d]
    if denom <= 1e-14 or _norm(r) <= 1e-14:
        return x.copy(), False
    u = r[:d] / denom
    return x + u, True


@njit(cache=True)
def exact_raw_project(x, lo, hi, kinds, vecs, scal):
    """Projection onto halfspaces/hyperplanes and at most one ball.

    The single-ball case uses y(t) = proj_P(c + t (x - c)); the distance of
    y(t) to c is monotone in t, so bisection locates the active radius.
    Returns (point, feasible flag)."""
    d = x.shape[0]
    m = 0
    ball = -1
    for a in range(lo, hi):
        if kinds[a] == HALFSPACE:
            m += 1
        elif kinds[a] == HYPERPLANE:
            m += 2
        else:
            ball = a
    N = np.empty((m, d))
    b = np.empty(m)
    k = 0
    for a in range(lo, hi):
        if kinds[a] == HALFSPACE:
            N[k] = vecs[a]
            b[k] = scal[a]
            k += 1
        elif kinds[a] == HYPERPLANE:
            N[k] = vecs[a]
            b[k] = scal[a]
            N[k + 1] = -vecs[a]
            b[k + 1] = -scal[a]
            k += 2
    if ball < 0:
        return polyhedron_project(x, N, b)
    c = vecs[ball]
    rad = scal[ball]
    y, ok = polyhedron_project(x, N, b) if m > 0 else (x.copy(), True)
    if not ok:
        return y, False
    if _norm(y - c) <= rad:
        return y, True
    yc, ok = polyhedron_project(c, N, b) if m > 0 else (c.copy(), True)
    if _norm(yc - c) > rad:
        return yc, False
    tlo = 0.0
    thi = 1.0
    ylo = yc
    for it in range(60):
        t = 0.5 * (tlo + thi)
        w = c + t * (x - c)
        yt, ok = polyhedron_project(w, N, b) if m > 0 else (w, True)
        if _norm(yt - c) <= rad:
            tlo = t
            ylo = yt
        else:
            thi = t
    return ylo, True


@njit(cache=True)
def raw_project(x, lo, hi, kinds, vecs, scal, tol, maxit):
    """Projection onto the unpadded intersection of atoms lo:hi: exact for
    sets with at most one ball, Dykstra otherwise.

    Returns (point, violation); the violation is +inf for an empty set."""
    n = hi - lo
    if n == 1:
        p = atom_project(x, kinds[lo], vecs[lo], scal[lo], 0.0)
        return p, atom_violation(p, kinds[lo], vecs[lo], scal[lo], 0.0)
    nb = 0
    for a in range(lo, hi):
        if kinds[a] == BALL:
            nb += 1
    if nb <= 1:
        p, ok = exact_raw_project(x, lo, hi, kinds, vecs, scal)
        if not ok:
            return x.copy(), np.inf
        viol = 0.0
        for a in range(lo, hi):
            v = atom_violation(p, kinds[a], vecs[a], scal[a], 0.0)
            if v > viol:
                viol = v
        return p, viol
    d = x.shape[0]
    q = np.zeros((n, d))
    y = x.copy()
    viol = 0.0
    for it in range(maxit):
        change = 0.0
        for k in range(n):
            a = lo + k
            w = y + q[k]
            p = atom_project(w, kinds[a], vecs[a], scal[a], 0.0)
            q[k] = w - p
            dp = p - y
            change += _dot(dp, dp)
            y = p
        if change <= tol * tol or it % 16 == 15:
            viol = 0.0
            for k in range(n):
                a = lo + k
                v = atom_violation(y, kinds[a], vecs[a], scal[a], 0.0)
                if v > viol:
                    viol = v
            if change <= tol * tol and viol <= tol:
                return y, viol
    viol = 0.0
    for k in range(n):
        a = lo + k
        v = atom_violation(y, kinds[a], vecs[a], scal[a], 0.0)
        if v > viol:
            viol = v
    return y, viol


@njit(cache=True)
def set_project(x, j, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit):
    lo = set_lo[j]
    hi = set_hi[j]
    pad = set_pad[j]
    if hi - lo == 1:
        return atom_project(x, kinds[lo], vecs[lo], scal[lo], pad)
    raw, _ = raw_project(x, lo, hi, kinds, vecs, scal, tol * 0.1, maxit)
    if pad <= 0.0:
        return raw
    diff = x - raw
    dist = _norm(diff)
    if dist <= pad:
        return x.copy()
    return raw + diff * (pad / dist)


@njit(cache=True)
def set_violation(x, j, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit):
    lo = set_lo[j]
    hi = set_hi[j]
    pad = set_pad[j]
    if hi - lo == 1:
        return atom_violation(x, kinds[lo], vecs[lo], scal[lo], pad)
    raw, rv = raw_project(x, lo, hi, kinds, vecs, scal, tol * 0.1, maxit)
    if rv == np.inf:
        return np.inf
    v = _norm(x - raw) - pad
    return v if v > 0.0 else 0.0


@njit(cache=True)
def violation(x, ids, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit):
    worst = 0.0
    for k in range(ids.shape[0]):
        v = set_violation(x, ids[k], kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit)
        if v > worst:
            worst = v
    return worst


@njit(cache=True)
def _gather_atoms(ids, kinds, vecs, scal, set_lo, set_hi, set_pad):
    """Flatten sets into plain atoms when the intersection is a polyhedron
    with at most one ball (pads folded into single atoms).  Returns
    (ok, kinds, vecs, scal)."""
    d = vecs.shape[1]
    m = 0
    balls = 0
    for k in range(ids.shape[0]):
        j = ids[k]
        cnt = set_hi[j] - set_lo[j]
        pad = set_pad[j]
        if cnt > 1 and pad > 0.0:
            return False, np.empty(0, np.int64), np.empty((0, d)), np.empty(0)
        for a in range(set_lo[j], set_hi[j]):
            if kinds[a] == BALL:
                balls += 1
            m += 2 if (kinds[a] == HYPERPLANE and pad > 0.0) else 1
    if balls > 1:
        return False, np.empty(0, np.int64), np.empty((0, d)), np.empty(0)
    gk = np.empty(m, np.int64)
    gv = np.empty((m, d))
    gs = np.empty(m)
    i = 0
    for k in range(ids.shape[0]):
        j = ids[k]
        pad = set_pad[j]
        for a in range(set_lo[j], set_hi[j]):
            if kinds[a] == HYPERPLANE and pad > 0.0:
                # a padded hyperplane is a slab
                gk[i] = HALFSPACE
                gv[i] = vecs[a]
                gs[i] = scal[a] + pad
                gk[i + 1] = HALFSPACE
                gv[i + 1] = -vecs[a]
                gs[i + 1] = pad - scal[a]
                i += 2
            else:
                gk[i] = kinds[a]
                gv[i] = vecs[a]
                gs[i] = scal[a] + pad
                i += 1
    return True, gk, gv, gs


@njit(cache=True)
def project(x, ids, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit, stall):
    """Cyclic Dykstra projection of x onto the intersection of sets ``ids``.

    Returns (point, residual, status). The residual is the largest distance
    of the returned point to any of the sets.
    """
    n = ids.shape[0]
    d = x.shape[0]
    if n == 0:
        return x.copy(), 0.0, STATUS_OK
    if n == 1:
        p = set_project(x, ids[0], kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit)
        res = set_violation(p, ids[0], kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit)
        return p, res, STATUS_OK if res <= tol else STATUS_INFEASIBLE
    ok, gk, gv, gs = _gather_atoms(ids, kinds, vecs, scal, set_lo, set_hi, set_pad)
    if ok:
        p, feasible = exact_raw_project(x, 0, gk.shape[0], gk, gv, gs)
        if not feasible:
            return x.copy(), np.inf, STATUS_INFEASIBLE
        res = violation(p, ids, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit)
        if res <= tol:
            return p, res, STATUS_OK
    q = np.zeros((n, d))
    y = x.copy()
    best = np.inf
    best_cycle = 0
    res = np.inf
    for it in range(maxit):
        change = 0.0
        for k in range(n):
            w = y + q[k]
            p = set_project(w, ids[k], kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit)
            q[k] = w - p
            dp = p - y
            change += _dot(dp, dp)
            y = p
        if change <= 100.0 * tol * tol or it % 10 == 9:
            res = violation(y, ids, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit)
            if res <= tol and change <= tol * tol:
                return y, res, STATUS_OK
            if res < best - tol * 0.01:
                best = res
                best_cycle = it
            elif it - best_cycle >= stall and res > tol:
                return y, res, STATUS_INFEASIBLE
    res = violation(y, ids, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit)
    if res <= tol:
        return y, res, STATUS_OK
    return y, res, STATUS_MAXITER


@njit(cache=True)
def project_many(points, ptr, idx, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit, stall):
    """Project points[i] onto the sets idx[ptr[i]:ptr[i+1]]."""
    n = points.shape[0]
    out = np.empty_like(points)
    res = np.empty(n)
    status = np.empty(n, dtype=np.int64)
    for i in range(n):
        p, r, s = project(points[i], idx[ptr[i]:ptr[i + 1]], kinds, vecs, scal,
                          set_lo, set_hi, set_pad, tol, maxit, stall)
        out[i] = p
        res[i] = r
        status[i] = s
    return out, res, status


@njit(cache=True)
def violations_many(points, ids, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit):
    n = points.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = violation(points[i], ids, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit)
    return out


@njit(cache=True)
def support_ascent(y0, v, scale, ids, kinds, vecs, scal, set_lo, set_hi, set_pad,
                   tol, maxit, stall, cap):
    """Projected ascent of v.y with geometrically growing steps.

    Returns (lower, upper, point, status) where status 3 flags an unbounded
    direction, 1 an empty set. ``lower`` is attained by ``point``; ``upper``
    adds the projection-optimality slack diam * |p - y| / step.
    """
    y, res, st = project(y0, ids, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit, stall)
    if st == STATUS_INFEASIBLE:
        return -np.inf, -np.inf, y, 1
    step = scale
    diam = 2.0 * scale
    last_gap = np.inf
    for it in range(60):
        w = y + step * v
        p, res, st = project(w, ids, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit, stall)
        if st == STATUS_INFEASIBLE:
            return -np.inf, -np.inf, y, 1
        gain = _dot(v, p) - _dot(v, y)
        if gain > 0.5 * step and step > cap:
            return np.inf, np.inf, p, 3
        diam = max(diam, 2.0 * _norm(p - y0))
        # optimality of the projection of w: v.q <= v.p + |p - y| diam / step on the set
        last_gap = diam * _norm(p - y) / step
        y = p
        if it >= 1 and last_gap <= tol:
            break
        step *= 8.0
    lower = _dot(v, y)
    return lower, lower + last_gap + tol, y, 0


@njit(cache=True)
def _set_chord(x, u, j, kinds, vecs, scal, set_lo, set_hi, set_pad):
    """Closed-form chord {s : x + s u in set j} for single-atom sets."""
    a = set_lo[j]
    pad = set_pad[j]
    kind = kinds[a]
    vec = vecs[a]
    s = scal[a]
    lo = -np.inf
    hi = np.inf
    if kind == HALFSPACE:
        au = _dot(vec, u)
        slack = s + pad - _dot(vec, x)
        if au > 1e-300:
            hi = slack / au
        elif au < -1e-300:
            lo = slack / au
    elif kind == BALL:
        diff = x - vec
        b = _dot(u, diff)
        c = _dot(diff, diff) - (s + pad) ** 2
        disc = b * b - c
        if disc < 0.0:
            disc = 0.0
        sq = np.sqrt(disc)
        lo = -b - sq
        hi = -b + sq
    else:
        au = _dot(vec, u)
        off = _dot(vec, x) - s
        if abs(au) > 1e-300:
            t1 = (pad - off) / au
            t2 = (-pad - off) / au
            lo = min(t1, t2)
            hi = max(t1, t2)
    return lo, hi


@njit(cache=True)
def chord(x, u, ids, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit):
    lo = -np.inf
    hi = np.inf
    nmulti = 0
    for k in range(ids.shape[0]):
        j = ids[k]
        if set_hi[j] - set_lo[j] == 1:
            l, h = _set_chord(x, u, j, kinds, vecs, scal, set_lo, set_hi, set_pad)
            if l > lo:
                lo = l
            if h < hi:
                hi = h
        else:
            nmulti += 1
    if lo > 0.0:
        lo = 0.0
    if hi < 0.0:
        hi = 0.0
    if nmulti > 0 and np.isfinite(lo) and np.isfinite(hi):
        for k in range(ids.shape[0]):
            j = ids[k]
            if set_hi[j] - set_lo[j] == 1:
                continue
            # the padded raw distance is convex along the line: bisect each end
            if set_violation(x + hi * u, j, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit) > 0.0:
                a, b = 0.0, hi
                for _ in range(34):
                    m = 0.5 * (a + b)
                    if set_violation(x + m * u, j, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit) > 0.0:
                        b = m
                    else:
                        a = m
                hi = a
            if set_violation(x + lo * u, j, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit) > 0.0:
                a, b = lo, 0.0
                for _ in range(34):
                    m = 0.5 * (a + b)
                    if set_violation(x + m * u, j, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit) > 0.0:
                        a = m
                    else:
                        b = m
                lo = b
    return lo, hi


@njit(cache=True)
def hit_and_run(x0, n_keep, burn_in, seed, L, ids, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit):
    """One hit-and-run chain with directions L g / |L g|, g standard normal;
    returns (samples, ok). ok is False on an unbounded chord."""
    np.random.seed(seed)
    d = x0.shape[0]
    out = np.empty((n_keep, d))
    x = x0.copy()
    total = burn_in + n_keep
    for step in range(total):
        u = L @ np.random.standard_normal(d)
        nu = _norm(u)
        while nu == 0.0:
            u = L @ np.random.standard_normal(d)
            nu = _norm(u)
        u = u / nu
        lo, hi = chord(x, u, ids, kinds, vecs, scal, set_lo, set_hi, set_pad, tol, maxit)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            return out, False
        s = lo + (hi - lo) * np.random.random()
        x = x + s * u
        if step >= burn_in:
            out[step - burn_in] = x
    return out, True
