"""Symmetry sets of a curve pair.

AASS: midpoints shared by two distinct chords that also share g (the
self-intersection locus of the sphere). AESS: centers of conics with
three-point contact with alpha at alpha(s) and with beta at beta(t), together
with the midlines through the chord midpoints.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.spatial import cKDTree

from .area import CurvePair, SplitG
from .curves import det2
from .errors import (CoincidentTangentLines, ContinuationStall, DegenerateConic,
                     DegenerateSeed, NotOnE)
from .singular import _check_window
from .tracing import project, trace_zero_set

PARALLEL_TOL = 1e-12


@dataclass(frozen=True)
class AtInfinity:
    direction: np.ndarray

    def to_dict(self):
        return {"at_infinity": True, "direction": self.direction.tolist()}


def _pt(v):
    return v.to_dict() if isinstance(v, AtInfinity) else np.asarray(v).tolist()


# -- AASS ------------------------------------------------------------------------

@dataclass
class ChordPairSolution:
    s1: float
    t1: float
    s2: float
    t2: float
    midpoint: np.ndarray
    g_val: float
    residual: float = 0.0

    @property
    def z(self) -> np.ndarray:
        return np.array([self.s1, self.t1, self.s2, self.t2])

    def to_dict(self) -> dict:
        return {"s1": self.s1, "t1": self.t1, "s2": self.s2, "t2": self.t2,
                "midpoint": self.midpoint.tolist(), "g": self.g_val, "residual": self.residual}


@dataclass
class AASSBranch:
    solutions: list[ChordPairSolution]
    end_reasons: tuple[str, str]

    @property
    def midpoints(self) -> np.ndarray:
        return np.array([sol.midpoint for sol in self.solutions]).reshape(-1, 2)

    def to_dict(self) -> dict:
        return {"end_reasons": list(self.end_reasons), "solutions": [s.to_dict() for s in self.solutions]}


class _ChordSystem:
    """F(z) = (x(s1,t1) - x(s2,t2), g(s1,t1) - g(s2,t2)) with its 3x4 Jacobian."""

    def __init__(self, pair: CurvePair, quad_tol: float):
        self.pair = pair
        self.g = SplitG(pair, quad_tol)
        self.a_jet = pair.alpha.jet_fn
        self.b_jet = pair.beta.jet_fn

    def _half(self, s, t):
        pa, da = self.a_jet(s)[:2]
        pb, db = self.b_jet(t)[:2]
        chord = pb - pa
        x = 0.5 * (pa + pb)
        row_s = np.array([0.5 * da[0], 0.5 * da[1], 0.25 * det2(chord, da)])
        row_t = np.array([0.5 * db[0], 0.5 * db[1], 0.25 * det2(chord, db)])
        return x, row_s, row_t

    def eval(self, z):
        s1, t1, s2, t2 = z
        x1, r1s, r1t = self._half(s1, t1)
        x2, r2s, r2t = self._half(s2, t2)
        g1, g2 = self.g(np.array([s1, s2]), np.array([t1, t2]))
        F = np.array([x1[0] - x2[0], x1[1] - x2[1], g1 - g2])
        J = np.column_stack([r1s, r1t, -r2s, -r2t])
        return F, J, x1, g1

    def solution(self, z) -> ChordPairSolution:
        F, _, x1, g1 = self.eval(z)
        return ChordPairSolution(*map(float, z), x1, float(g1), float(np.linalg.norm(F)))


def _inside4(z, box):
    lo, hi = box
    return bool(np.all(z >= lo) and np.all(z <= hi))


def _separation(z):
    return float(np.hypot(z[0] - z[2], z[1] - z[3]))


def _gauss_newton(system, z, tol, max_iter=30):
    prev = np.inf
    for _ in range(max_iter):
        F, J, _, _ = system.eval(z)
        nf = np.linalg.norm(F)
        if nf <= tol:
            return z, True
        if nf > 2 * prev:
            return z, False
        prev = nf
        dz = np.linalg.lstsq(J, -F, rcond=None)[0]   # minimum-norm step
        z = z + dz
        if not np.all(np.isfinite(z)):
            return z, False
    F = system.eval(z)[0]
    return z, bool(np.linalg.norm(F) <= tol)


def _null_tangent(J):
    v = np.linalg.svd(J)[2][-1]
    return v / np.linalg.norm(v)


def _continue(system, z0, tau, box, step, tol, min_sep, max_points):
    pts = [z0]
    h = step
    while len(pts) < max_points:
        z = pts[-1]
        _, J, _, _ = system.eval(z)
        nt = _null_tangent(J)
        tau = nt if nt @ tau >= 0 else -nt
        while True:
            pred = z + h * tau
            if not _inside4(pred, box):
                return pts, "window"
            q, ok = _gauss_newton(system, pred, tol, max_iter=8)
            moved = np.linalg.norm(q - z)
            if ok and 0.2 * h < moved < 2 * h and (q - z) @ tau > 0.8 * moved:
                break
            h *= 0.5
            if h < step * 1e-5:
                return pts, "stall"
        if not _inside4(q, box):
            return pts, "window"
        if _separation(q) < min_sep:
            return pts, "diagonal"
        if len(pts) > 4 and np.linalg.norm(q - pts[0]) < 1.01 * step:
            return pts, "closed"
        pts.append(q)
        h = min(step, 2 * h)
    return pts, "max_points"


def _canonical(z):
    """Order the two chords so each unordered solution has one representation."""
    return z if (z[0], z[1]) <= (z[2], z[3]) else np.array([z[2], z[3], z[0], z[1]])


def aass_solve(pair: CurvePair, window, seed_grid: int = 24, tol: float = 1e-10, step: float = 1e-3,
               quad_tol: float = 1e-12, keep_quantile: float = 0.02, max_points: int = 20000) -> list[AASSBranch]:
    """Branches of the equal-midpoint, equal-g chord-pair curve inside ``window`` (used for both chords).

    An empty list is a valid result.
    """
    _check_window(pair, window)
    (s0, s1), (t0, t1) = window
    system = _ChordSystem(pair, quad_tol)
    min_sep = 10.0 * step
    lo = np.array([s0, t0, s0, t0])
    hi = np.array([s1, t1, s1, t1])
    box = (lo, hi)

    sv = np.linspace(s0, s1, seed_grid)
    tv = np.linspace(t0, t1, seed_grid)
    S, T = np.meshgrid(sv, tv, indexing="ij")
    S, T = S.ravel(), T.ravel()
    X = 0.5 * (pair.alpha(S) + pair.beta(T))
    G = system.g.grid(sv, tv).ravel()
    iu, ju = np.triu_indices(S.size, k=1)
    sep = np.hypot(S[iu] - S[ju], T[iu] - T[ju])
    res = np.abs(X[iu] - X[ju]).sum(axis=1) + np.abs(G[iu] - G[ju])
    cell = max((s1 - s0), (t1 - t0)) / (seed_grid - 1)
    far = sep > max(2 * cell, min_sep)
    # rank by residual per unit separation so near-diagonal pairs do not crowd out real seeds
    score = np.where(far, res / np.maximum(sep, 1e-300), np.inf)
    n_keep = max(1, int(keep_quantile * far.sum()))
    order = np.argsort(score, kind="stable")[:n_keep]
    order = order[np.isfinite(score[order])]

    cover = 3 * step
    seed_cover = 4 * cell
    seeds = np.array([_canonical(np.array([S[iu[k]], T[iu[k]], S[ju[k]], T[ju[k]]])) for k in order])
    # keep the best-ranked seed of each neighbourhood
    kept = []
    if len(seeds):
        tree = cKDTree(seeds)
        alive = np.ones(len(seeds), bool)
        for k in range(len(seeds)):
            if alive[k]:
                kept.append(seeds[k])
                alive[tree.query_ball_point(seeds[k], seed_cover)] = False

    branches: list[AASSBranch] = []
    trees: list[cKDTree] = []
    for z in kept:
        if any(tr.query(z)[0] < seed_cover for tr in trees):
            continue
        z, ok = _gauss_newton(system, z, tol, max_iter=12)
        if not ok or not _inside4(z, box) or _separation(z) < min_sep:
            continue
        z = _canonical(z)
        if any(tr.query(z)[0] < cover for tr in trees):
            continue
        _, J, _, _ = system.eval(z)
        tau = _null_tangent(J)
        fwd, why_f = _continue(system, z, tau, box, step, tol, min_sep, max_points)
        if why_f == "closed":
            zs, reasons = fwd, ("closed", "closed")
        else:
            back, why_b = _continue(system, z, -tau, box, step, tol, min_sep, max_points)
            zs, reasons = back[::-1] + fwd[1:], (why_b, why_f)
        if len(zs) < 2 and reasons == ("stall", "stall"):
            raise ContinuationStall(f"no progress from chord pair {z.tolist()}")
        zs = [_canonical(q) for q in zs]
        branches.append(AASSBranch([system.solution(q) for q in zs], reasons))
        trees.append(cKDTree(np.array(zs)))
    branches.sort(key=lambda b: tuple(b.solutions[0].z))
    return branches


def aass_tangent_check(pair: CurvePair, sol: ChordPairSolution, neighbor: ChordPairSolution) -> dict:
    """Angles between the midpoint secant and the chord differences alpha(s1)-alpha(s2), beta(t1)-beta(t2)."""
    d = neighbor.midpoint - sol.midpoint
    da = pair.alpha(sol.s1) - pair.alpha(sol.s2)
    db = pair.beta(sol.t1) - pair.beta(sol.t2)
    return {"angle_alpha": _line_angle(d, da), "angle_beta": _line_angle(d, db),
            "angle_alpha_beta": _line_angle(da, db)}


def _line_angle(u, v) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return float("nan")
    return float(np.arcsin(min(1.0, abs(det2(u, v)) / (nu * nv))))


# -- AESS ------------------------------------------------------------------------

class ConicKind(str, enum.Enum):
    ELLIPSE = "Ellipse"
    HYPERBOLA = "Hyperbola"
    PARABOLA = "Parabola"
    DEGENERATE_PAIR = "DegeneratePair"


@dataclass
class Conic:
    coeffs: np.ndarray          # q11, q12, q22, q13, q23, q33
    center: np.ndarray | AtInfinity
    kind: ConicKind
    singular_ratio: float = float("nan")   # sigma_5 / sigma_6 of the contact matrix

    def __call__(self, p) -> np.ndarray:
        q11, q12, q22, q13, q23, q33 = self.coeffs
        x, y = np.asarray(p, float)[..., 0], np.asarray(p, float)[..., 1]
        return q11 * x * x + 2 * q12 * x * y + q22 * y * y + 2 * q13 * x + 2 * q23 * y + q33

    def to_dict(self) -> dict:
        return {"coeffs": self.coeffs.tolist(), "center": _pt(self.center), "kind": self.kind.value}


def _contact_rows(P, D1, D2):
    """Rows of Q(c) = 0, (Q o c)' = 0, (Q o c)'' = 0 in the six conic coefficients (stacks over leading axes)."""
    x, y = P[..., 0], P[..., 1]
    xp, yp = D1[..., 0], D1[..., 1]
    xpp, ypp = D2[..., 0], D2[..., 1]
    one, zero = np.ones_like(x), np.zeros_like(x)
    r0 = np.stack([x * x, 2 * x * y, y * y, 2 * x, 2 * y, one], axis=-1)
    r1 = np.stack([2 * x * xp, 2 * (xp * y + x * yp), 2 * y * yp, 2 * xp, 2 * yp, zero], axis=-1)
    r2 = np.stack([2 * (xp * xp + x * xpp), 2 * (xpp * y + 2 * xp * yp + x * ypp),
                   2 * (yp * yp + y * ypp), 2 * xpp, 2 * ypp, zero], axis=-1)
    return np.stack([r0, r1, r2], axis=-2)


def aess_matrix(pair: CurvePair, s, t) -> np.ndarray:
    """Row-normalized 6x6 contact matrix (shape (..., 6, 6) for array input)."""
    ja, jb = pair.jets(s, t)
    ra = _contact_rows(ja.p, ja.d1, ja.d2)
    rb = _contact_rows(jb.p, jb.d1, jb.d2)
    ra, rb = np.broadcast_arrays(ra, rb)
    M = np.concatenate([ra, rb], axis=-2)
    return M / np.linalg.norm(M, axis=-1, keepdims=True)


def aess_determinant(pair: CurvePair, s, t):
    d = np.linalg.det(aess_matrix(pair, s, t))
    return float(d) if np.ndim(d) == 0 else d


def aess_conic(pair: CurvePair, s: float, t: float, tol: float = 1e-8) -> Conic:
    M = aess_matrix(pair, s, t)
    det = float(np.linalg.det(M))
    if abs(det) > tol:
        raise NotOnE(f"|det| = {det:.3e} at ({s}, {t})")
    _, sv, vt = np.linalg.svd(M)
    v = vt[-1]
    v = v / np.linalg.norm(v)
    q11, q12, q22, q13, q23, q33 = v
    full = np.array([[q11, q12, q13], [q12, q22, q23], [q13, q23, q33]])
    ratio = float(sv[-2] / sv[-1]) if sv[-1] > 0 else float("inf")
    if abs(np.linalg.det(full)) <= 1e-10:
        raise DegenerateConic(f"contact conic at ({s}, {t}) splits into lines")
    quad = full[:2, :2]
    delta = q11 * q22 - q12 * q12
    if abs(delta) <= 1e-10 * max(1.0, np.abs(quad).max() ** 2):
        w, V = np.linalg.eigh(quad)
        axis = V[:, int(np.argmin(np.abs(w)))]
        return Conic(v, AtInfinity(axis), ConicKind.PARABOLA, ratio)
    center = np.linalg.solve(quad, -np.array([q13, q23]))
    kind = ConicKind.ELLIPSE if delta > 0 else ConicKind.HYPERBOLA
    return Conic(v, center, kind, ratio)


@dataclass
class MidlineRecord:
    s: float
    t: float
    point: np.ndarray
    direction: np.ndarray
    tangent_intersection: np.ndarray | AtInfinity

    def to_dict(self) -> dict:
        return {"s": self.s, "t": self.t, "point": self.point.tolist(), "direction": self.direction.tolist(),
                "tangent_intersection": _pt(self.tangent_intersection)}


def midline(pair: CurvePair, s: float, t: float) -> MidlineRecord:
    """Line through the chord midpoint and the meeting point of the two tangent lines."""
    ja, jb = pair.jets(s, t)
    a, da, b, db = ja.p, ja.d1, jb.p, jb.d1
    x = 0.5 * (a + b)
    cross = float(det2(da, db))
    scale = float(np.linalg.norm(da) * np.linalg.norm(db))
    if abs(cross) <= PARALLEL_TOL * scale:
        if abs(det2(b - a, da)) <= PARALLEL_TOL * max(scale, float(np.linalg.norm(b - a) * np.linalg.norm(da))):
            raise CoincidentTangentLines(f"tangent lines coincide at ({s}, {t})")
        u = da / np.linalg.norm(da)
        return MidlineRecord(float(s), float(t), x, u, AtInfinity(u))
    # a + u da = b + v db
    u = float(det2(b - a, db)) / cross
    meet = a + u * da
    d = meet - x
    nd = np.linalg.norm(d)
    if nd == 0:
        raise CoincidentTangentLines(f"tangents meet at the midpoint ({s}, {t})")
    return MidlineRecord(float(s), float(t), x, d / nd, meet)


def reflection_check(pair: CurvePair, s: float, t: float) -> float:
    """Residual of the affine reflection fixing the midline along the chord mapping
    the affine tangent of alpha at s to that of beta at t (sign-free, relative)."""
    ja, jb = pair.jets(s, t)
    ml = midline(pair, s, t)
    chord = jb.p - ja.p
    B = np.column_stack([ml.direction, chord])
    R = B @ np.diag([1.0, -1.0]) @ np.linalg.inv(B)
    ta = ja.d1 / np.cbrt(det2(ja.d1, ja.d2))
    tb = jb.d1 / np.cbrt(det2(jb.d1, jb.d2))
    img = R @ ta
    return float(min(np.linalg.norm(img - tb), np.linalg.norm(img + tb)) / np.linalg.norm(tb))


@dataclass
class LocalSymmetryPoint:
    s: float
    t: float
    center: np.ndarray | AtInfinity | None
    kind: str
    midline: MidlineRecord | None
    on_singular_set: bool = False
    tangency_angle: float = float("nan")   # midline vs discrete center-locus tangent
    note: str = ""

    def to_dict(self) -> dict:
        return {"s": self.s, "t": self.t, "center": None if self.center is None else _pt(self.center),
                "kind": self.kind, "midline": None if self.midline is None else self.midline.to_dict(),
                "on_singular_set": self.on_singular_set, "tangency_angle": _num(self.tangency_angle),
                "note": self.note}


def _num(v):
    v = float(v)
    return v if np.isfinite(v) else None


@dataclass
class LocalSymmetryReport:
    branches: list[list[LocalSymmetryPoint]] = field(default_factory=list)
    degenerate_e: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def points(self) -> list[LocalSymmetryPoint]:
        return [p for b in self.branches for p in b]

    def to_dict(self) -> dict:
        return {"degenerate_E": self.degenerate_e, "diagnostics": self.diagnostics,
                "branches": [[p.to_dict() for p in b] for b in self.branches]}


def local_symmetry_points(pair: CurvePair, window, tol: float = 1e-10, step: float = 1e-3,
                          seed_res: int = 48, conic_tol: float = 1e-6, guard: int = 3) -> LocalSymmetryReport:
    """Trace E = {aess_determinant = 0} in ``window`` with centers and midlines per point."""
    _check_window(pair, window)
    (s0, s1), (t0, t1) = window
    hs = 1e-6 * max(s1 - s0, t1 - t0)

    def f(s, t):
        return aess_determinant(pair, s, t)

    def grad(s, t):
        v = aess_determinant(pair, np.array([s + hs, s - hs, s, s]), np.array([t, t, t + hs, t - hs]))
        return ((v[0] - v[1]) / (2 * hs), (v[2] - v[3]) / (2 * hs))

    try:
        curves = trace_zero_set(f, grad, window, step, tol, seed_res, f_grid=lambda S, T: aess_determinant(pair, S, T))
    except DegenerateSeed:
        sv = np.linspace(s0, s1, 9)
        tv = np.linspace(t0, t1, 9)
        pts = [LocalSymmetryPoint(float(s), float(t), None, "degenerate-E", None, note="E fills the window")
               for s in sv for t in tv]
        return LocalSymmetryReport([pts], True, {"message": "contact determinant vanishes on the whole window"})

    report = LocalSymmetryReport()
    excluded = 0
    for c in curves:
        branch = []
        for s, t in _insert_s_crossings(pair, c.points, f, grad, tol):
            ja, jb = pair.jets(s, t)
            om = 0.25 * float(det2(ja.d1, jb.d1))
            on_s = abs(om) <= 1e-8 * float(np.linalg.norm(ja.d1) * np.linalg.norm(jb.d1))
            pt = LocalSymmetryPoint(float(s), float(t), None, "", None, on_s)
            try:
                con = aess_conic(pair, s, t, conic_tol)
                pt.center, pt.kind = con.center, con.kind.value
                if isinstance(con.center, AtInfinity):
                    excluded += 1
                    pt.note = "parabola: center at infinity"
            except DegenerateConic as e:
                pt.kind, pt.note = "DegeneratePair", str(e)
            except NotOnE as e:
                pt.kind, pt.note = "Unresolved", str(e)
            try:
                pt.midline = midline(pair, s, t)
            except CoincidentTangentLines as e:
                pt.note = (pt.note + "; " if pt.note else "") + str(e)
            if on_s:
                pt.note = (pt.note + "; " if pt.note else "") + "E meets S: not a regular singular point"
            branch.append(pt)
        _tangency(branch, guard)
        report.branches.append(branch)
    report.diagnostics["parabolic_points_excluded"] = excluded
    report.diagnostics["e_meets_s"] = [(p.s, p.t) for p in report.points if p.on_singular_set]
    return report


def _insert_s_crossings(pair, pts, f, grad, tol):
    """Add the points where the traced E crosses Omega = 0."""
    a_jet, b_jet = pair.alpha.jet_fn, pair.beta.jet_fn

    def om(p):
        return float(det2(a_jet(p[0])[1], b_jet(p[1])[1]))

    vals = [om(p) for p in pts]
    out = [pts[0]]
    for k in range(1, len(pts)):
        P0, P1 = pts[k - 1], pts[k]
        if vals[k - 1] * vals[k] < 0:
            def h(u):
                return om(project(f, grad, P0 + u * (P1 - P0), tol)[0])
            u = optimize.brentq(h, 0.0, 1.0, xtol=1e-14)
            out.append(project(f, grad, P0 + u * (P1 - P0), tol)[0])
        out.append(P1)
    return np.array(out)


def _tangency(branch: list[LocalSymmetryPoint], guard: int):
    """Angle between each midline and the secant of neighbouring finite centers."""
    n = len(branch)
    bad = [k for k, p in enumerate(branch) if p.on_singular_set]
    for k in range(1, n - 1):
        if any(abs(k - b) <= guard for b in bad):
            continue
        p, a, b = branch[k], branch[k - 1], branch[k + 1]
        if p.midline is None or not all(isinstance(q.center, np.ndarray) for q in (a, b)):
            continue
        p.tangency_angle = _line_angle(b.center - a.center, p.midline.direction)
