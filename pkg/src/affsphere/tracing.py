"""Predictor-corrector tracing of the zero set of a scalar function on a rectangle.

Seeds come from sign changes on the edges of a marching-squares grid; each
seed is refined by Newton projection and continued along (-f_t, f_s).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.spatial import cKDTree

from .errors import DegenerateSeed


@dataclass
class TracedCurve:
    points: np.ndarray              # (N, 2) in (s, t)
    closed: bool = False
    clipped: list = field(default_factory=list)   # subset of {"start", "end"}
    degenerate: list = field(default_factory=list)  # indices with vanishing gradient

    @property
    def arclength(self) -> np.ndarray:
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(seg)])


def _inside(p, window, slack=0.0):
    (s0, s1), (t0, t1) = window
    return s0 - slack <= p[0] <= s1 + slack and t0 - slack <= p[1] <= t1 + slack


def project(f, grad, p, tol, max_iter=40, grad_tol=1e-14):
    """Newton projection of p onto {f = 0} along the gradient.

    Returns (point, ok); ok is False when the gradient vanishes or the
    iteration does not reach |f| <= tol.
    """
    p = np.array(p, dtype=float)
    for _ in range(max_iter):
        v = f(p[0], p[1])
        if abs(v) <= tol * 1e-3:
            return p, True
        gv = np.asarray(grad(p[0], p[1]), dtype=float)
        gg = gv @ gv
        if gg < grad_tol ** 2:
            return p, abs(v) <= tol
        dp = v * gv / gg
        p = p - dp
        if np.linalg.norm(dp) < 1e-16 * max(1.0, np.linalg.norm(p)):
            break
    return p, abs(f(p[0], p[1])) <= tol


def find_seeds(f_grid, f, window, seed_res):
    """Zero crossings on the edges of a seed_res x seed_res cell grid."""
    (s0, s1), (t0, t1) = window
    sv = np.linspace(s0, s1, seed_res + 1)
    tv = np.linspace(t0, t1, seed_res + 1)
    V = f_grid(*np.meshgrid(sv, tv, indexing="ij"))
    seeds = []
    for i in range(len(sv)):
        for j in range(len(tv)):
            if V[i, j] == 0.0:
                seeds.append((sv[i], tv[j]))
                continue
            if i + 1 < len(sv) and V[i, j] * V[i + 1, j] < 0:
                r = optimize.brentq(lambda u: f(u, tv[j]), sv[i], sv[i + 1], xtol=1e-14)
                seeds.append((r, tv[j]))
            if j + 1 < len(tv) and V[i, j] * V[i, j + 1] < 0:
                r = optimize.brentq(lambda u: f(sv[i], u), tv[j], tv[j + 1], xtol=1e-14)
                seeds.append((sv[i], r))
    return np.array(seeds, dtype=float).reshape(-1, 2), V


def _march(f, grad, start, direction, window, step, tol, max_points, grad_tol):
    """Continue from ``start`` along ``direction``; returns (points, closed, clipped, degenerate)."""
    pts = [np.array(start, float)]
    degenerate = []
    tau = np.asarray(direction, float)
    h = step
    travelled = 0.0
    while len(pts) < max_points:
        p = pts[-1]
        gv = np.asarray(grad(p[0], p[1]), float)
        gn = np.linalg.norm(gv)
        if gn > grad_tol:
            new_tau = np.array([-gv[1], gv[0]]) / gn
            if new_tau @ tau < 0:
                new_tau = -new_tau
            tau = new_tau
        else:
            degenerate.append(len(pts) - 1)
        while True:
            pred = p + h * tau
            if not _inside(pred, window):
                return pts, False, True, degenerate
            q, ok = project(f, grad, pred, tol)
            moved = np.linalg.norm(q - p)
            if ok and 0.2 * h < moved < 2.0 * h and _turn_ok(q - p, tau):
                break
            h *= 0.5
            if h < step * 1e-6:
                return pts, False, False, degenerate
        if not _inside(q, window):
            return pts, False, True, degenerate
        travelled += np.linalg.norm(q - p)
        if travelled > 4 * step and np.linalg.norm(q - pts[0]) < 1.01 * step and len(pts) > 4:
            return pts, True, False, degenerate
        pts.append(q)
        h = min(step, 2 * h)
    return pts, False, False, degenerate


def _turn_ok(d, tau):
    n = np.linalg.norm(d)
    return n > 0 and (d @ tau) / n > np.cos(0.5)


def trace_zero_set(f, grad, window, step=1e-3, tol=1e-10, seed_res=64, f_grid=None,
                   max_points=200000, grad_tol=1e-10):
    """All components of {f = 0} inside ``window = ((s0, s1), (t0, t1))``.

    ``f`` and ``grad`` take scalar (s, t); ``f_grid`` (vectorized f) speeds up
    seeding. Raises DegenerateSeed if f vanishes on the whole seed grid.
    """
    if f_grid is None:
        f_grid = np.vectorize(f, otypes=[float])
    seeds, V = find_seeds(f_grid, f, window, seed_res)
    if np.all(np.abs(V) <= tol):
        raise DegenerateSeed("function vanishes identically on the seed grid")
    curves: list[TracedCurve] = []
    trees: list[cKDTree] = []
    cover = 2.0 * step
    skipped = 0
    for seed in seeds:
        if any(tr.query(seed)[0] < cover for tr in trees):
            continue
        p, ok = project(f, grad, seed, tol)
        gv = np.asarray(grad(p[0], p[1]), float)
        gn = np.linalg.norm(gv)
        if not ok or gn <= grad_tol or not _inside(p, window):
            skipped += 1
            continue
        if any(tr.query(p)[0] < cover for tr in trees):
            continue
        tau = np.array([-gv[1], gv[0]]) / gn
        fwd, closed, clip_end, deg_f = _march(f, grad, p, tau, window, step, tol, max_points, grad_tol)
        clipped = ["end"] if clip_end else []
        if closed:
            pts = np.array(fwd)
            degenerate = deg_f
        else:
            back, _, clip_start, deg_b = _march(f, grad, p, -tau, window, step, tol, max_points, grad_tol)
            if clip_start:
                clipped.insert(0, "start")
            nb = len(back)
            pts = np.array(back[::-1] + fwd[1:])
            degenerate = sorted({nb - 1 - k for k in deg_b} | {nb - 1 + k for k in deg_f})
        curves.append(TracedCurve(pts, closed, clipped, degenerate))
        trees.append(cKDTree(pts))
    return curves
