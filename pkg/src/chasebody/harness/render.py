"""Deterministic SVG plots of planar runs: request outlines, phase
enclosures, selector paths and the offline path."""

from __future__ import annotations

import math
from xml.sax.saxutils import quoteattr

import numpy as np

from ..errors import UnsupportedDimension
from ..geometry import ConvexBody
from .experiment import ExperimentReport

CANVAS = 640
MARGIN = 32
CIRCLE_SIDES = 64
COLORS = {"paper": "#1f5fbf", "greedy": "#c0392b", "offline": "#2e8b57"}


def _f(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def _clip(poly: list, a: np.ndarray, b: float) -> list:
    """Sutherland-Hodgman step: keep the part of a convex polygon with a.x <= b."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp, fq = float(a @ p) - b, float(a @ q) - b
        if fp <= 0:
            out.append(p)
        if fp * fq < 0:
            out.append(p + (q - p) * (fp / (fp - fq)))
    return out


def _split_lines(K: ConvexBody) -> tuple[list, list]:
    """Separate opposite halfspace pairs (lines) from the other halfspaces."""
    hs = list(K.halfspaces)
    lines, rest, used = [], [], set()
    for i, h in enumerate(hs):
        if i in used:
            continue
        for j in range(i + 1, len(hs)):
            g = hs[j]
            if j not in used and np.allclose(g.normal, -h.normal, atol=1e-12) and abs(g.offset + h.offset) <= 1e-12:
                lines.append(h)
                used.update((i, j))
                break
        else:
            rest.append(h)
    return lines, rest


def _line_segment(h, rest: list, balls, lo: np.ndarray, hi: np.ndarray) -> list:
    """The part of the line {h.normal . y = h.offset} inside the box and the
    remaining constraints, as two end points (or nothing)."""
    base = h.normal * h.offset
    u = np.array([-h.normal[1], h.normal[0]])
    t_lo, t_hi = -math.inf, math.inf
    box = [(np.array([1.0, 0.0]), hi[0]), (np.array([-1.0, 0.0]), -lo[0]),
           (np.array([0.0, 1.0]), hi[1]), (np.array([0.0, -1.0]), -lo[1])]
    for a, b in box + [(g.normal, g.offset) for g in rest]:
        au, slack = float(a @ u), float(b - a @ base)
        if abs(au) < 1e-15:
            if slack < 0:
                return []
        elif au > 0:
            t_hi = min(t_hi, slack / au)
        else:
            t_lo = max(t_lo, slack / au)
    for ball in balls:
        w = base - ball.center
        wu = float(w @ u)
        disc = wu * wu - float(w @ w) + ball.radius ** 2
        if disc < 0:
            return []
        t_lo, t_hi = max(t_lo, -wu - math.sqrt(disc)), min(t_hi, -wu + math.sqrt(disc))
    if not t_lo <= t_hi:
        return []
    return [base + t_lo * u, base + t_hi * u]


def body_polygon(K: ConvexBody, lo: np.ndarray, hi: np.ndarray) -> list:
    """Vertices of K (unpadded) within the box [lo, hi]; balls are replaced
    by circumscribed polygons.  A body containing one line comes back as its
    two-point segment; two or more lines give nothing to outline."""
    lines, rest = _split_lines(K)
    if len(lines) > 1:
        return []
    if lines:
        return _line_segment(lines[0], rest, K.balls, lo, hi)
    poly = [np.array([lo[0], lo[1]]), np.array([hi[0], lo[1]]),
            np.array([hi[0], hi[1]]), np.array([lo[0], hi[1]])]
    for h in rest:
        poly = _clip(poly, h.normal, h.offset)
        if not poly:
            return []
    step = 2 * math.pi / CIRCLE_SIDES
    for ball in K.balls:
        rad = ball.radius / math.cos(step / 2)
        for i in range(CIRCLE_SIDES):
            u = np.array([math.cos(i * step), math.sin(i * step)])
            poly = _clip(poly, u, float(u @ ball.center) + rad * math.cos(step / 2))
            if not poly:
                return []
    return poly


class _View:
    def __init__(self, pts: np.ndarray):
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        span = float(max(hi - lo)) or 1.0
        mid = 0.5 * (lo + hi)
        half = 0.55 * span
        self.lo = mid - half
        self.hi = mid + half
        self.scale = (CANVAS - 2 * MARGIN) / (2 * half)

    def xy(self, p) -> tuple[str, str]:
        x = MARGIN + (p[0] - self.lo[0]) * self.scale
        y = CANVAS - MARGIN - (p[1] - self.lo[1]) * self.scale
        return _f(x), _f(y)

    def points(self, pts) -> str:
        return " ".join(",".join(self.xy(p)) for p in pts)


def render_trajectory(report: ExperimentReport, t_range=None, selectors=None) -> str:
    """SVG for requests t in ``t_range`` (a range or (start, stop); default all)."""
    sc = report.scenario
    if sc.dim != 2:
        raise UnsupportedDimension(f"trajectory plots need d = 2, got d = {sc.dim}")
    if t_range is None:
        ts = list(range(sc.T))
    elif isinstance(t_range, range):
        ts = [t for t in t_range if 0 <= t < sc.T]
    else:
        start, stop = t_range
        ts = list(range(max(0, int(start)), min(sc.T, int(stop))))
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
        f'viewBox="0 0 {CANVAS} {CANVAS}">',
        f'<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="#ffffff"/>',
    ]
    if not ts:
        return "\n".join(head + ["</svg>"]) + "\n"
    names = sorted(report.results) if selectors is None else list(selectors)
    runs = {n: report.results[n].run for n in names
            if n in report.results and report.results[n].run is not None}
    off = report.offline.points
    pts = [sc.x0[None, :], off[[0, *[t + 1 for t in ts]]]]
    for run in runs.values():
        pts.append(run.responses[ts])
    view = _View(np.vstack(pts))
    body = []
    body.append('<g id="requests" fill="none" stroke="#888888" stroke-width="1">')
    for t in ts:
        poly = body_polygon(sc.requests[t], view.lo, view.hi)
        if len(poly) >= 3:
            body.append(f'<polygon data-t="{t}" points="{view.points(poly)}"/>')
        elif len(poly) == 2:
            body.append(f'<polyline data-t="{t}" points="{view.points(poly)}"/>')
    body.append("</g>")
    if "paper" in runs:
        body.append('<g id="enclosures" fill="none" stroke="#b0b0ff" stroke-dasharray="4 3">')
        lo_t, hi_t = ts[0], ts[-1] + 1
        for ph in runs["paper"].phases:
            end = ph.end_t if ph.end_t >= 0 else hi_t
            if ph.start_t < hi_t and end > lo_t:
                cx, cy = view.xy(ph.z)
                body.append(f'<circle data-phase="{ph.phase_id}" cx="{cx}" cy="{cy}" '
                            f'r="{_f(ph.R * view.scale)}"/>')
        body.append("</g>")
    path = off[[ts[0], *[t + 1 for t in ts]]]
    body.append(f'<polyline id="offline" fill="none" stroke="{COLORS["offline"]}" stroke-width="2" '
                f'stroke-dasharray="6 3" points="{view.points(path)}"/>')
    for name, run in runs.items():
        prev = run.x0 if ts[0] == 0 else run.responses[ts[0] - 1]
        path = np.vstack([prev[None, :], run.responses[ts]])
        color = COLORS.get(name, "#444444")
        body.append(f'<polyline id={quoteattr(name)} fill="none" stroke="{color}" stroke-width="1.5" '
                    f'points="{view.points(path)}"/>')
    cx, cy = view.xy(sc.x0)
    body.append(f'<circle id="x0" cx="{cx}" cy="{cy}" r="3" fill="#000000"/>')
    return "\n".join(head + body + ["</svg>"]) + "\n"
