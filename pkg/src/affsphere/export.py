"""File emitters: OBJ meshes, CSV samples, JSON reports and hand-rolled SVG."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .area import SurfaceGrid

CSV_COLUMNS = ("s", "t", "x", "y", "g", "omega")


def to_jsonable(obj):
    """Recursively convert numpy values; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


# -- surface grids -------------------------------------------------------------

def grid_vertices(grid: SurfaceGrid) -> np.ndarray:
    """(ns * nt, 3) vertices (x, y, g), row-major in (i, j)."""
    return np.concatenate([grid.x, grid.g[..., None]], axis=-1).reshape(-1, 3)


def grid_triangles(ns: int, nt: int) -> np.ndarray:
    """Two triangles per grid cell, zero-based vertex indices."""
    i, j = np.meshgrid(np.arange(ns - 1), np.arange(nt - 1), indexing="ij")
    v00 = (i * nt + j).ravel()
    v10, v01, v11 = v00 + nt, v00 + 1, v00 + nt + 1
    return np.concatenate([np.stack([v00, v10, v11], 1), np.stack([v00, v11, v01], 1)]).reshape(-1, 3)


def write_obj(path, grid: SurfaceGrid) -> Path:
    path = Path(path)
    V = grid_vertices(grid)
    F = grid_triangles(*grid.shape)
    lines = [f"# {len(V)} vertices, {len(F)} triangles", "o surface"]
    lines += [f"v {x!r} {y!r} {z!r}" for x, y, z in V.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in F.tolist()]
    path.write_text("\n".join(lines) + "\n")
    return path


def singular_vertices(grid: SurfaceGrid) -> list[int]:
    """Vertex indices with Omega = 0 or a sign change of Omega to a grid neighbour."""
    om = grid.omega
    flag = om == 0
    flag[:-1] |= om[:-1] * om[1:] < 0
    flag[1:] |= om[:-1] * om[1:] < 0
    flag[:, :-1] |= om[:, :-1] * om[:, 1:] < 0
    flag[:, 1:] |= om[:, :-1] * om[:, 1:] < 0
    return np.flatnonzero(flag.ravel()).tolist()


def write_csv(path, grid: SurfaceGrid) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for i, s in enumerate(grid.s):
            for j, t in enumerate(grid.t):
                x, y = grid.x[i, j]
                om = grid.omega[i, j] if grid.omega is not None else float("nan")
                w.writerow([repr(float(v)) for v in (s, t, x, y, grid.g[i, j], om)])
    return path


def read_csv(path) -> SurfaceGrid:
    """Inverse of write_csv; rows must fill a tensor grid in s-major order."""
    from .errors import ConfigError

    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ConfigError(f"expected CSV header {','.join(CSV_COLUMNS)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"bad CSV value: {exc}") from None
    if data.ndim != 2 or data.shape[0] == 0:
        raise ConfigError("CSV has no samples")
    s = np.unique(data[:, 0])
    t = np.unique(data[:, 1])
    if data.shape[0] != s.size * t.size:
        raise ConfigError("CSV samples do not form a tensor grid")
    order = np.lexsort((data[:, 1], data[:, 0]))
    d = data[order].reshape(s.size, t.size, -1)
    return SurfaceGrid(s, t, d[..., 2:4], None, d[..., 4], omega=d[..., 5], meta={"source": str(path)})


# -- SVG -------------------------------------------------------------------------

class SvgCanvas:
    """Minimal SVG writer with a y-up data frame fitted to ``bounds``."""

    def __init__(self, bounds, size=640, margin=24):
        (x0, x1), (y0, y1) = bounds
        if not (x1 > x0):
            x0, x1 = x0 - 1, x1 + 1
        if not (y1 > y0):
            y0, y1 = y0 - 1, y1 + 1
        self.x0, self.y1 = x0, y1
        self.k = (size - 2 * margin) / max(x1 - x0, y1 - y0)
        self.margin = margin
        self.w = 2 * margin + self.k * (x1 - x0)
        self.h = 2 * margin + self.k * (y1 - y0)
        self.items: list[str] = []

    def _xy(self, p):
        return (self.margin + self.k * (p[0] - self.x0), self.margin + self.k * (self.y1 - p[1]))

    def polyline(self, pts, color="black", width=1.0, dash=None):
        pts = [p for p in np.asarray(pts, float).reshape(-1, 2) if np.all(np.isfinite(p))]
        if len(pts) < 2:
            return
        d = " ".join("%.3f,%.3f" % self._xy(p) for p in pts)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>')

    def marker(self, p, color="red", r=4.0):
        cx, cy = self._xy(p)
        self.items.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{r}" fill="none" stroke="{color}"/>')

    def dots(self, pts, color="black", r=1.2):
        for p in np.asarray(pts, float).reshape(-1, 2):
            if np.all(np.isfinite(p)):
                cx, cy = self._xy(p)
                self.items.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{r}" fill="{color}"/>')

    def text(self, p, label, color="black"):
        cx, cy = self._xy(p)
        self.items.append(f'<text x="{cx:.3f}" y="{cy:.3f}" font-size="11" fill="{color}">{label}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w:.0f}" height="{self.h:.0f}" '
                f'viewBox="0 0 {self.w:.3f} {self.h:.3f}">')
        return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *self.items, "</svg>"]) + "\n"


def _bounds(*point_sets):
    pts = [np.asarray(p, float).reshape(-1, 2) for p in point_sets if p is not None and len(p)]
    pts = np.concatenate(pts) if pts else np.zeros((1, 2))
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    if not len(pts):
        pts = np.zeros((1, 2))
    lo, hi = pts.min(0), pts.max(0)
    pad = 0.05 * max(float((hi - lo).max()), 1e-9)
    return (lo[0] - pad, hi[0] + pad), (lo[1] - pad, hi[1] + pad)


def evolute_svg(evolutes) -> str:
    """Area evolute polylines with circles at the cusps (swallowtail images)."""
    canvas = SvgCanvas(_bounds(*[e.points for e in evolutes]))
    for e in evolutes:
        pts = np.vstack([e.points, e.points[:1]]) if e.closed else e.points
        canvas.polyline(pts, "navy", 1.2)
        for k in e.cusps:
            canvas.marker(e.points[k], "red", 5)
    return canvas.render()


def overlay_svg(alpha_pts, beta_pts, evolutes=(), aass_midpoints=(), aess_centers=(), midlines=()) -> str:
    """alpha, beta, area evolute, AASS, AESS and midline segments in one figure."""
    ev = [e.points for e in evolutes]
    canvas = SvgCanvas(_bounds(alpha_pts, beta_pts, *ev, *aass_midpoints, *aess_centers))
    canvas.polyline(alpha_pts, "black", 1.5)
    canvas.polyline(beta_pts, "dimgray", 1.5)
    for e in evolutes:
        canvas.polyline(e.points, "navy", 1.0)
        for k in e.cusps:
            canvas.marker(e.points[k], "red", 5)
    for pts in aass_midpoints:
        canvas.polyline(pts, "crimson", 2.0)
    for pts in aess_centers:
        canvas.polyline(pts, "seagreen", 2.0)
    for p, d, length in midlines:
        p, d = np.asarray(p, float), np.asarray(d, float)
        canvas.polyline([p - length * d, p + length * d], "orange", 0.6, dash="3,2")
    return canvas.render()
