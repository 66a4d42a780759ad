"""Singular set {Omega = 0}, its image (the area evolute) and the
cuspidal-edge / swallowtail classification of its points.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .area import CurvePair, SplitG
from .curves import det2
from .errors import ConfigError, InflectionAtSingularity, SingularParameterization
from .tracing import project, trace_zero_set

DEFAULT_LAMBDA_TOL = 1e-4
REGULARITY_TOL = 1e-9   # |curve'| below this violates the IA-map condition
INFLECTION_TOL = 1e-9   # relative |[c', c'']| / |c'|^3
HYSTERESIS = 100.0


class Kind(str, enum.Enum):
    CUSPIDAL_EDGE = "CuspidalEdge"
    SWALLOWTAIL = "Swallowtail"
    DEGENERATE = "Degenerate"
    UNCLASSIFIED = "Unclassified"


@dataclass
class SingularPoint:
    s: float
    t: float
    omega: float
    omega_s: float
    omega_t: float
    eta: np.ndarray
    lam: float
    lambda_prime: float = float("nan")
    kind: Kind = Kind.UNCLASSIFIED
    x_img: np.ndarray | None = None
    q_img: np.ndarray | None = None
    k1: float = float("nan")
    k2: float = float("nan")
    eta_residual: float = float("nan")   # |Omega_t alpha' - Omega_s beta'|, normalized
    note: str = ""

    def to_dict(self) -> dict:
        return {"s": self.s, "t": self.t, "lambda": _num(self.lam), "lambda_prime": _num(self.lambda_prime),
                "kind": self.kind.value, "x_img": self.x_img.tolist(), "q_img": self.q_img.tolist(),
                "omega_s": self.omega_s, "omega_t": self.omega_t, "k1": _num(self.k1), "k2": _num(self.k2),
                "note": self.note}


def _num(v):
    v = float(v)
    return v if np.isfinite(v) else None


@dataclass
class SingularBranch:
    points: list[SingularPoint]
    r: np.ndarray
    closed: bool = False
    clipped: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def st(self) -> np.ndarray:
        return np.array([[p.s, p.t] for p in self.points])

    def kinds(self) -> list[Kind]:
        return [p.kind for p in self.points]

    def swallowtails(self) -> list[SingularPoint]:
        return [p for p in self.points if p.kind is Kind.SWALLOWTAIL]


# -- pointwise quantities ------------------------------------------------------

def omega_gradient(pair: CurvePair, s, t):
    """(Omega_s, Omega_t) = 1/4 ([alpha'', beta'], [alpha', beta''])."""
    ja, jb = pair.jets(s, t)
    return 0.25 * det2(ja.d2, jb.d1), 0.25 * det2(ja.d1, jb.d2)


def _omega_funcs(pair: CurvePair):
    a_jet, b_jet = pair.alpha.jet_fn, pair.beta.jet_fn

    def f(s, t):
        return 0.25 * float(det2(a_jet(s)[1], b_jet(t)[1]))

    def grad(s, t):
        ja, jb = a_jet(s), b_jet(t)
        return (0.25 * float(det2(ja[2], jb[1])), 0.25 * float(det2(ja[1], jb[2])))

    def f_grid(S, T):
        return 0.25 * det2(a_jet(S)[1], b_jet(T)[1])

    return f, grad, f_grid


def _check_window(pair: CurvePair, window):
    (s0, s1), (t0, t1) = window
    if not (s0 < s1 and t0 < t1):
        raise ConfigError(f"empty window {window!r}")
    pair.alpha.check([s0, s1])
    pair.beta.check([t0, t1])


def analyze_point(pair: CurvePair, s: float, t: float, g_eval=None, g_value=None) -> SingularPoint:
    """Every classification ingredient at a point of S (kind left for ``classify``)."""
    ja, jb = pair.jets(s, t)
    a1, a2, b1, b2 = ja.d1, ja.d2, jb.d1, jb.d2
    om = 0.25 * float(det2(a1, b1))
    om_s = 0.25 * float(det2(a2, b1))
    om_t = 0.25 * float(det2(a1, b2))
    na, nb = float(np.linalg.norm(a1)), float(np.linalg.norm(b1))
    x_img = 0.5 * (ja.p + jb.p)
    g = float((g_eval or SplitG(pair))(s, t)) if g_value is None else float(g_value)
    pt = SingularPoint(float(s), float(t), om, om_s, om_t, np.full(2, np.nan), float("nan"),
                       x_img=x_img, q_img=np.array([x_img[0], x_img[1], g]))
    if na < REGULARITY_TOL or nb < REGULARITY_TOL:
        pt.kind = Kind.DEGENERATE
        pt.note = "irregular curve (vanishing velocity)"
        return pt
    if np.hypot(om_s, om_t) <= REGULARITY_TOL * na * nb:
        pt.kind = Kind.DEGENERATE
        pt.note = "degenerate singularity (grad Omega = 0)"
        return pt
    rho = float(a1 @ b1) / nb ** 2           # alpha' = rho beta'
    eta = np.array([1.0, -rho])
    pt.eta = eta / np.linalg.norm(eta)
    da, db = float(det2(a1, a2)), float(det2(b1, b2))
    pt.k1 = da / na ** 3
    # beta oriented against alpha' so that k1 = k2 / lambda^3
    pt.k2 = -np.sign(rho) * db / nb ** 3
    res = om_t * a1 - om_s * b1
    pt.eta_residual = float(np.linalg.norm(res) / (np.hypot(om_s, om_t) * max(na, nb)))
    infl_a = abs(da) <= INFLECTION_TOL * na ** 3
    infl_b = abs(db) <= INFLECTION_TOL * nb ** 3
    if infl_a and infl_b:
        pt.kind = Kind.DEGENERATE
        pt.note = "inflections of both curves with parallel tangents"
    elif infl_a:
        pt.lam = float("inf")
        pt.note = "inflection of alpha"
    elif infl_b:
        pt.lam = 0.0
        pt.note = "inflection of beta"
    else:
        pt.lam = -float(np.cbrt(db)) * rho / float(np.cbrt(da))
    return pt


def lambda_at(pair: CurvePair, p) -> float:
    """lambda with alpha_sigma = -lambda beta_tau in affine arc length.

    ``p`` is a SingularPoint or an (s, t) pair.
    """
    s, t = (p.s, p.t) if isinstance(p, SingularPoint) else p
    ja, jb = pair.jets(s, t)
    da, db = float(det2(ja.d1, ja.d2)), float(det2(jb.d1, jb.d2))
    na, nb = np.linalg.norm(ja.d1), np.linalg.norm(jb.d1)
    if nb < REGULARITY_TOL or na < REGULARITY_TOL:
        raise SingularParameterization("vanishing velocity")
    if abs(da) <= INFLECTION_TOL * na ** 3 or abs(db) <= INFLECTION_TOL * nb ** 3:
        raise InflectionAtSingularity(f"inflection at ({s}, {t})")
    # ratio through the dominant component of beta'
    k = int(np.argmax(np.abs(jb.d1)))
    rho = ja.d1[k] / jb.d1[k]
    return float(-np.cbrt(db) / np.cbrt(da) * rho)


def euclidean_curvature_check(pair: CurvePair, p) -> tuple[float, float]:
    """(k1, k2): curvature of alpha, and of beta oriented against alpha'."""
    s, t = (p.s, p.t) if isinstance(p, SingularPoint) else p
    ja, jb = pair.jets(s, t)
    na, nb = np.linalg.norm(ja.d1), np.linalg.norm(jb.d1)
    if na < REGULARITY_TOL or nb < REGULARITY_TOL:
        raise SingularParameterization("vanishing velocity")
    rho = float(ja.d1 @ jb.d1)
    return (float(det2(ja.d1, ja.d2) / na ** 3),
            float(-np.sign(rho) * det2(jb.d1, jb.d2) / nb ** 3))


# -- tracing -------------------------------------------------------------------

def trace_singular_set(pair: CurvePair, window, step: float = 1e-3, tol: float = 1e-10,
                       seed_res: int = 64) -> list[SingularBranch]:
    """Trace every component of {Omega = 0} in ``window``; points are analyzed but not classified."""
    _check_window(pair, window)
    f, grad, f_grid = _omega_funcs(pair)
    scale = _velocity_scale(pair, window)
    curves = trace_zero_set(f, grad, window, step, tol, seed_res, f_grid, grad_tol=1e-12 * scale)
    gfun = SplitG(pair)
    branches = []
    for c in curves:
        gv = gfun(c.points[:, 0], c.points[:, 1])
        pts = [analyze_point(pair, s, t, g_value=g) for (s, t), g in zip(c.points, gv)]
        branches.append(SingularBranch(pts, c.arclength, c.closed, list(c.clipped),
                                       {"degenerate_trace_indices": c.degenerate}))
    return branches


def _velocity_scale(pair, window):
    (s0, s1), (t0, t1) = window
    sa = np.linspace(s0, s1, 33)
    tb = np.linspace(t0, t1, 33)
    va = np.max(np.linalg.norm(pair.alpha.jet_fn(sa)[1], axis=-1))
    vb = np.max(np.linalg.norm(pair.beta.jet_fn(tb)[1], axis=-1))
    return max(va * vb, 1e-300)


# -- classification ------------------------------------------------------------

def _branch_lambda_fn(pair, f, grad, tol):
    def lam_at_point(p):
        q, _ = project(f, grad, p, tol)
        return lambda_at(pair, (q[0], q[1])), q
    return lam_at_point


def _lambda_prime(pair, f, grad, p0, tol, h=2e-3):
    """d(lambda)/dr at p0 for unit-speed r in (s, t); Richardson-extrapolated central differences."""
    gv = np.asarray(grad(*p0), float)
    tau = np.array([-gv[1], gv[0]]) / np.linalg.norm(gv)

    def central(hh):
        qp, _ = project(f, grad, p0 + hh * tau, tol)
        qm, _ = project(f, grad, p0 - hh * tau, tol)
        dr = np.linalg.norm(qp - p0) + np.linalg.norm(p0 - qm)
        return (lambda_at(pair, tuple(qp)) - lambda_at(pair, tuple(qm))) / dr

    return float((4 * central(h / 2) - central(h)) / 3), tau


def classify(pair: CurvePair, branch: SingularBranch, lambda_tol: float = DEFAULT_LAMBDA_TOL,
             lambda_prime_tol: float = 1e-6, tol: float = 1e-12) -> SingularBranch:
    """Fill in kinds: swallowtails are localized by root-finding lambda - 1 along the branch."""
    f, grad, _ = _omega_funcs(pair)
    gfun = SplitG(pair)
    pts = [replace(p) for p in branch.points]
    lam = np.array([p.lam if p.kind is not Kind.DEGENERATE else np.nan for p in pts])
    dev = lam - 1.0
    npts = len(pts)
    seg_count = npts if branch.closed else npts - 1
    roots = []   # (segment index, SingularPoint)
    for i in range(seg_count):
        j = (i + 1) % npts
        d0, d1 = dev[i], dev[j]
        if not (np.isfinite(d0) and np.isfinite(d1)) or abs(d0) > 0.5 or abs(d1) > 0.5:
            continue
        if d0 == 0.0 or d0 * d1 < 0:
            P0 = np.array([pts[i].s, pts[i].t])
            P1 = np.array([pts[j].s, pts[j].t])

            def h(u):
                q, _ = project(f, grad, P0 + u * (P1 - P0), tol)
                return lambda_at(pair, tuple(q)) - 1.0

            u = 0.0 if d0 == 0.0 else optimize.brentq(h, 0.0, 1.0, xtol=1e-14)
            q, _ = project(f, grad, P0 + u * (P1 - P0), tol)
            sp = analyze_point(pair, q[0], q[1], gfun)
            sp.lambda_prime, _ = _lambda_prime(pair, f, grad, q, tol)
            if abs(sp.lambda_prime) > lambda_prime_tol:
                sp.kind = Kind.SWALLOWTAIL
            else:
                sp.kind = Kind.UNCLASSIFIED
                sp.note = "lambda = 1 with vanishing lambda'"
            roots.append((i, sp))
    # drop near-threshold neighbours of a localized root; the root replaces them
    drop = set()
    for i, _ in roots:
        for start, stepdir in ((i, -1), ((i + 1) % npts, 1)):
            k = start
            while 0 <= k < npts and k not in drop and np.isfinite(dev[k]) and abs(dev[k]) <= lambda_tol:
                drop.add(k)
                k += stepdir
                if branch.closed:
                    k %= npts
    insert_after = {i: sp for i, sp in roots}
    out = []
    for k, p in enumerate(pts):
        if k not in drop:
            if p.kind is not Kind.DEGENERATE:
                if np.isfinite(dev[k]) and abs(dev[k]) <= lambda_tol:
                    p.kind = Kind.UNCLASSIFIED
                    p.note = p.note or "lambda within tolerance of 1 but no sign change"
                else:
                    p.kind = Kind.CUSPIDAL_EDGE
            out.append(p)
        if k in insert_after:
            out.append(insert_after[k])
    st = np.array([[p.s, p.t] for p in out])
    r = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(st, axis=0), axis=1))])
    result = SingularBranch(out, r, branch.closed, list(branch.clipped), dict(branch.diagnostics))
    _derivative_fill(result)
    result.diagnostics.update(criteria_report(result, lambda_tol))
    result.diagnostics["null_tangency"] = null_tangency_report(result)
    return result


def _derivative_fill(branch: SingularBranch):
    """lambda' along the branch by centred differences in r (ends one-sided)."""
    lam = np.array([p.lam for p in branch.points])
    r = branch.r
    if len(lam) < 3:
        return
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.gradient(lam, r) if np.all(np.diff(r) > 0) else np.full_like(lam, np.nan)
    for p, v in zip(branch.points, d):
        if p.kind is not Kind.SWALLOWTAIL:
            p.lambda_prime = float(v)


def criteria_report(branch: SingularBranch, lambda_tol: float) -> dict:
    """Cross-check |lambda - 1|, |k1 - k2| and the eta-tangency residual against each other."""
    disagreements = []
    for idx, p in enumerate(branch.points):
        if p.kind is Kind.DEGENERATE or not np.isfinite(p.lam):
            continue
        c1 = abs(p.lam - 1.0)
        c2 = abs(p.k1 - p.k2) / max(abs(p.k1), abs(p.k2), 1e-300)
        c3 = p.eta_residual
        small = [c <= lambda_tol for c in (c1, c2, c3)]
        large = [c > HYSTERESIS * lambda_tol for c in (c1, c2, c3)]
        if any(small) and any(large):
            disagreements.append(idx)
    return {"criteria_disagreements": disagreements}


def null_tangency_report(branch: SingularBranch) -> dict:
    """A(r) = det(eta, gamma') with eta kept continuous; sign changes should sit at swallowtails."""
    st = branch.st
    n = len(st)
    if n < 3:
        return {"A": [], "sign_changes": []}
    tang = np.gradient(st, axis=0)
    tang /= np.maximum(np.linalg.norm(tang, axis=1, keepdims=True), 1e-300)
    A = np.full(n, np.nan)
    prev = None
    for k, p in enumerate(branch.points):
        if not np.all(np.isfinite(p.eta)):
            continue
        e = p.eta if prev is None or p.eta @ prev >= 0 else -p.eta
        prev = e
        A[k] = det2(e, tang[k])
    changes = [k for k in range(n - 1)
               if np.isfinite(A[k]) and np.isfinite(A[k + 1]) and A[k] * A[k + 1] < 0]
    return {"A": A.tolist(), "sign_changes": changes}


# -- area evolute ----------------------------------------------------------------

@dataclass
class EvolutePolyline:
    points: np.ndarray
    cusps: list[int]
    max_tangent_angle: float
    closed: bool


def area_evolute(pair: CurvePair, branch: SingularBranch, guard: int = 3) -> EvolutePolyline:
    """x-images of a branch; checks the polyline tangent is parallel to alpha' at cuspidal-edge points."""
    xs = np.array([p.x_img for p in branch.points])
    kinds = branch.kinds()
    cusps = [k for k, kd in enumerate(kinds) if kd is Kind.SWALLOWTAIL]
    bad = {k for k, kd in enumerate(kinds) if kd is not Kind.CUSPIDAL_EDGE}
    worst = 0.0
    n = len(xs)
    for k in range(n):
        if any(abs(k - b) <= guard for b in bad):
            continue
        if not branch.closed and (k == 0 or k == n - 1):
            continue
        d = xs[(k + 1) % n] - xs[k - 1]
        nd = np.linalg.norm(d)
        if nd == 0:
            continue
        a1 = pair.alpha.jet(branch.points[k].s).d1
        sin = abs(det2(d, a1)) / (nd * np.linalg.norm(a1))
        worst = max(worst, float(np.arcsin(min(1.0, sin))))
    return EvolutePolyline(xs, cusps, worst, branch.closed)


def singular_analysis(pair: CurvePair, window, step=1e-3, tol=1e-10, lambda_tol=DEFAULT_LAMBDA_TOL,
                      seed_res=64, workers: int = 1) -> list[SingularBranch]:
    """Trace then classify; distinct branches may be classified concurrently."""
    branches = trace_singular_set(pair, window, step, tol, seed_res)
    if workers > 1 and len(branches) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(lambda b: classify(pair, b, lambda_tol), branches))
    return [classify(pair, b, lambda_tol) for b in branches]
