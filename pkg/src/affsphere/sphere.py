"""The immersion q = (x, g) as an improper indefinite affine sphere.

Structure checks (asymptotic coordinates, constant affine normal, conormal),
the cubic form, transformations preserving the affine normal, and the
inverse construction from surface samples back to a curve pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate

from .area import CurvePair, SplitG, SurfaceGrid, surface_grid
from .curves import PlanarCurve, det2, perp
from .errors import ConfigError, NotAsymptotic, SingularMatrix, SingularRegion

EZ = np.array([0.0, 0.0, 1.0])


def det3(u, v, w):
    return float(np.dot(u, np.cross(v, w)))


@dataclass
class ImmersionPoint:
    s: float
    t: float
    q: np.ndarray
    q_s: np.ndarray
    q_t: np.ndarray
    q_ss: np.ndarray
    q_st: np.ndarray
    q_tt: np.ndarray
    nu: np.ndarray
    L: float
    M: float
    N: float
    omega: float          # 1/4 [alpha', beta']
    g_st: float           # = -omega; the signed scale of the affine normal
    xi: np.ndarray | None  # q_st / g_st, None on the singular set

    @property
    def singular(self) -> bool:
        return self.xi is None


@dataclass(frozen=True)
class CubicFormCoeffs:
    """C = a^3 ds^3 - b^3 dt^3."""

    a: float
    b: float

    def __call__(self, ds, dt):
        return self.a ** 3 * ds ** 3 - self.b ** 3 * dt ** 3

    @property
    def null_direction(self):
        # a ds = b dt
        return (self.b, self.a)


def immerse(pair: CurvePair, s: float, t: float, g: float | None = None,
            singular_tol: float = 1e-12) -> ImmersionPoint:
    """Full second-order jet of q at (s, t) from the closed-form curve jets.

    ``g`` may be supplied by the caller (grids share one SplitG cache);
    otherwise it is integrated.
    """
    ja, jb = pair.jets(s, t)
    chord = jb.p - ja.p
    g_s = 0.25 * det2(chord, ja.d1)
    g_t = 0.25 * det2(chord, jb.d1)
    g_ss = 0.25 * det2(chord, ja.d2)
    g_tt = 0.25 * det2(chord, jb.d2)
    g_st = 0.25 * det2(jb.d1, ja.d1)
    om = 0.25 * det2(ja.d1, jb.d1)
    if g is None:
        g = float(SplitG(pair)(s, t))
    x = 0.5 * (ja.p + jb.p)
    n = 0.5 * perp(chord)
    q = np.array([x[0], x[1], g])
    q_s = np.array([0.5 * ja.d1[0], 0.5 * ja.d1[1], g_s])
    q_t = np.array([0.5 * jb.d1[0], 0.5 * jb.d1[1], g_t])
    q_ss = np.array([0.5 * ja.d2[0], 0.5 * ja.d2[1], g_ss])
    q_tt = np.array([0.5 * jb.d2[0], 0.5 * jb.d2[1], g_tt])
    # alpha' does not depend on t: the planar part of q_st vanishes identically
    q_st = np.array([0.0, 0.0, g_st])
    nu = np.array([-n[0], -n[1], 1.0])
    scale = np.linalg.norm(ja.d1) * np.linalg.norm(jb.d1)
    xi = q_st / g_st if abs(om) > singular_tol * max(scale, 1e-300) else None
    return ImmersionPoint(float(s), float(t), q, q_s, q_t, q_ss, q_st, q_tt, nu,
                          det3(q_s, q_t, q_ss), det3(q_s, q_t, q_st), det3(q_s, q_t, q_tt),
                          float(om), float(g_st), xi)


def structure_residuals(pair: CurvePair, s_vals, t_vals, singular_tol: float = 1e-9) -> dict:
    """max |L|, |N|, |M + Omega^2| and |q_st / g_st - (0, 0, 1)| over the grid s x t.

    Points within ``singular_tol`` (relative) of Omega = 0 are left out of the
    affine-normal maximum.
    """
    ja, jb = pair.jets(np.asarray(s_vals, float), np.asarray(t_vals, float))
    A = {k: getattr(ja, k)[:, None, :] for k in ("p", "d1", "d2")}
    B = {k: getattr(jb, k)[None, :, :] for k in ("p", "d1", "d2")}
    chord = B["p"] - A["p"]

    def lift(v2, third):
        v2, third = np.broadcast_arrays(v2, third[..., None])
        return np.concatenate([0.5 * v2, third[..., :1]], axis=-1)

    q_s = lift(A["d1"], 0.25 * det2(chord, A["d1"]))
    q_t = lift(B["d1"], 0.25 * det2(chord, B["d1"]))
    q_ss = lift(A["d2"], 0.25 * det2(chord, A["d2"]))
    q_tt = lift(B["d2"], 0.25 * det2(chord, B["d2"]))
    g_st = 0.25 * det2(B["d1"], A["d1"])
    q_st = np.zeros_like(q_s)
    q_st[..., 2] = g_st
    cr = np.cross(q_s, q_t)
    L = np.sum(cr * q_ss, axis=-1)
    M = np.sum(cr * q_st, axis=-1)
    N = np.sum(cr * q_tt, axis=-1)
    scale = np.linalg.norm(A["d1"], axis=-1) * np.linalg.norm(B["d1"], axis=-1)
    regular = np.abs(g_st) > singular_tol * np.maximum(scale, 1e-300)
    xi = q_st[regular] / g_st[regular][:, None]
    xi_dev = float(np.max(np.linalg.norm(xi - np.array([0.0, 0.0, 1.0]), axis=-1))) if xi.size else 0.0
    return {"max_abs_L": float(np.max(np.abs(L))), "max_abs_N": float(np.max(np.abs(N))),
            "max_abs_M_plus_omega_sq": float(np.max(np.abs(M + g_st ** 2))),
            "max_xi_deviation": xi_dev, "regular_points": int(regular.sum())}


def cubic_form(pair: CurvePair, s, t) -> CubicFormCoeffs:
    ja, jb = pair.jets(s, t)
    return CubicFormCoeffs(float(np.cbrt(det2(ja.d1, ja.d2))), float(np.cbrt(det2(jb.d1, jb.d2))))


def cubic_form_from_immersion(p: ImmersionPoint) -> tuple[float, float]:
    """(A, D) read off q_ss = (.) q_s + (A/Omega) q_t and q_tt = (D/Omega) q_s + (.) q_t."""
    basis = np.column_stack([p.q_s, p.q_t])
    c_ss = np.linalg.lstsq(basis, p.q_ss, rcond=None)[0]
    c_tt = np.linalg.lstsq(basis, p.q_tt, rcond=None)[0]
    return float(c_ss[1] * p.omega), float(c_tt[0] * p.omega)


# -- finite-difference oracle for det D^2 g = -1 ---------------------------

def _hessian_det_at(x_of, g_of, s, t, h):
    xs = (x_of(s + h, t) - x_of(s - h, t)) / (2 * h)
    xt = (x_of(s, t + h) - x_of(s, t - h)) / (2 * h)
    x0 = x_of(s, t)
    xss = (x_of(s + h, t) - 2 * x0 + x_of(s - h, t)) / h ** 2
    xtt = (x_of(s, t + h) - 2 * x0 + x_of(s, t - h)) / h ** 2
    xst = (x_of(s + h, t + h) - x_of(s + h, t - h) - x_of(s - h, t + h) + x_of(s - h, t - h)) / (4 * h * h)
    g0 = g_of(s, t)
    gs = (g_of(s + h, t) - g_of(s - h, t)) / (2 * h)
    gt = (g_of(s, t + h) - g_of(s, t - h)) / (2 * h)
    gss = (g_of(s + h, t) - 2 * g0 + g_of(s - h, t)) / h ** 2
    gtt = (g_of(s, t + h) - 2 * g0 + g_of(s, t - h)) / h ** 2
    gst = (g_of(s + h, t + h) - g_of(s + h, t - h) - g_of(s - h, t + h) + g_of(s - h, t - h)) / (4 * h * h)
    X = np.column_stack([xs, xt])
    dX = np.linalg.det(X)
    n = np.linalg.solve(X.T, [gs, gt])
    G = np.array([[gss - n @ xss, gst - n @ xst], [gst - n @ xst, gtt - n @ xtt]])
    return np.linalg.det(G) / dX ** 2, dX


def hessian_det_check(pair: CurvePair, s_vals, t_vals, h: float = 1e-4,
                      jac_tol: float = 1e-6, quad_tol: float = 1e-14) -> dict:
    """Central-difference Hessian of g with respect to x on the grid s_vals x t_vals.

    Everything (x, g and their derivatives) is differenced from point values,
    so the check is independent of the closed forms it is meant to confirm.
    """
    gfun = SplitG(pair, quad_tol)

    def x_of(s, t):
        return 0.5 * (pair.alpha(s) + pair.beta(t))

    def g_of(s, t):
        return float(gfun(s, t))

    dets = np.empty((len(s_vals), len(t_vals)))
    for i, s in enumerate(s_vals):
        for j, t in enumerate(t_vals):
            d, dX = _hessian_det_at(x_of, g_of, float(s), float(t), h)
            if abs(dX) < jac_tol:
                raise SingularRegion(f"(s,t)->x is near-singular at ({s}, {t})")
            dets[i, j] = d
    return {"det": dets, "max_deviation": float(np.max(np.abs(dets + 1.0))), "h": h}


# -- transformations preserving xi = (0, 0, 1) -----------------------------

@dataclass(frozen=True)
class SpaceTransform:
    kind: str
    w: np.ndarray = field(default_factory=lambda: np.zeros(2))
    w3: float = 0.0
    A: np.ndarray = field(default_factory=lambda: np.eye(2))

    @classmethod
    def translate(cls, w, w3=0.0):
        return cls("translate", w=np.asarray(w, float), w3=float(w3))

    @classmethod
    def planar_affine(cls, A, v=(0.0, 0.0)):
        A = np.asarray(A, float)
        if A.shape != (2, 2):
            raise ConfigError("A must be 2x2")
        if abs(np.linalg.det(A)) < 1e-14:
            raise SingularMatrix("planar map is not invertible")
        return cls("planar_affine", w=np.asarray(v, float), A=A)

    @classmethod
    def shear(cls, a):
        return cls("shear", w=np.asarray(a, float))

    def apply(self, x, g):
        """Image of surface points (x, g) in R^3.

        A planar affine map extends as (x, z) -> (Ax + v, det(A) z); this is
        the height-preserving map (Ax + v, z) exactly when det A = 1.
        """
        x = np.asarray(x, float)
        g = np.asarray(g, float)
        if self.kind == "translate":
            return x + self.w, g + self.w3
        if self.kind == "planar_affine":
            return x @ self.A.T + self.w, np.linalg.det(self.A) * g
        if self.kind == "shear":
            return x, g + x @ self.w
        raise ConfigError(f"unknown transform {self.kind!r}")


def apply_transform(pair: CurvePair, T: SpaceTransform) -> CurvePair:
    """Curve pair whose generalized area distance is T applied to that of ``pair``."""
    s0, t0 = pair.base
    if T.kind == "translate":
        return CurvePair(pair.alpha.translated(T.w), pair.beta.translated(T.w), pair.base,
                         pair.g_base + T.w3, pair.name)
    if T.kind == "planar_affine":
        return CurvePair(pair.alpha.transformed(T.A, T.w), pair.beta.transformed(T.A, T.w),
                         pair.base, float(np.linalg.det(T.A)) * pair.g_base, pair.name)
    if T.kind == "shear":
        # grad(g + a.x) = n + a needs perp(beta - alpha) to shift by 2a
        shift = perp(T.w)
        x0 = 0.5 * (pair.alpha(s0) + pair.beta(t0))
        return CurvePair(pair.alpha.translated(shift), pair.beta.translated(-shift), pair.base,
                         pair.g_base + float(T.w @ x0), pair.name)
    raise ConfigError(f"unknown transform {T.kind!r}")


# -- inverse construction ---------------------------------------------------

@dataclass
class Extraction:
    alpha: PlanarCurve
    beta: PlanarCurve
    alpha_samples: np.ndarray
    beta_samples: np.ndarray
    cross_variation: float
    swapped: bool

    def __iter__(self):
        return iter((self.alpha, self.beta))


def _gradient_from_g(grid: SurfaceGrid) -> np.ndarray:
    """grad_x g on the grid from quintic tensor splines of g and x."""
    s, t = grid.s, grid.t
    k = min(5, len(s) - 1, len(t) - 1)
    if k < 3:
        raise ConfigError("need at least 4 samples per axis to differentiate g")

    def d(z, ds, dt):
        return interpolate.RectBivariateSpline(s, t, z, kx=k, ky=k, s=0)(s, t, dx=ds, dy=dt)

    gs, gt = d(grid.g, 1, 0), d(grid.g, 0, 1)
    xs = np.stack([d(grid.x[..., c], 1, 0) for c in range(2)], axis=-1)
    xt = np.stack([d(grid.x[..., c], 0, 1) for c in range(2)], axis=-1)
    jac = np.stack([xs, xt], axis=-2)           # rows x_s, x_t
    rhs = np.stack([gs, gt], axis=-1)[..., None]
    try:
        return np.linalg.solve(jac, rhs)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise NotAsymptotic("(s,t)->x is singular somewhere on the grid") from exc


def _variation(c: np.ndarray, axis: int) -> tuple[np.ndarray, float]:
    mean = np.mean(c, axis=axis, keepdims=True)
    return np.squeeze(mean, axis=axis), float(np.max(np.linalg.norm(c - mean, axis=-1)))


def extract_curves(grid: SurfaceGrid, tol: float = 1e-6) -> Extraction:
    """Recover (alpha, beta) from samples of x and grad g in asymptotic coordinates.

    alpha and beta are x +/- perp(n); the one constant along t is alpha.
    ``tol`` bounds the cross-variation relative to the extent of x.
    """
    if len(grid.s) < 6 or len(grid.t) < 6:
        raise ConfigError("need at least 6 samples per axis")
    n = grid.n if grid.n is not None else _gradient_from_g(grid)
    plus = grid.x + perp(n)
    minus = grid.x - perp(n)
    scale = max(float(np.ptp(grid.x.reshape(-1, 2), axis=0).max()), 1e-300)
    options = []
    for swapped, (c_alpha, c_beta) in ((False, (plus, minus)), (True, (minus, plus))):
        a_mean, va = _variation(c_alpha, axis=1)
        b_mean, vb = _variation(c_beta, axis=0)
        options.append((max(va, vb), swapped, a_mean, b_mean))
    var, swapped, a_mean, b_mean = min(options, key=lambda o: o[0])
    if not np.isfinite(var) or var > tol * scale:
        raise NotAsymptotic(f"cross-variation {var:.3e} exceeds {tol * scale:.3e}")
    return Extraction(PlanarCurve.from_samples(grid.s, a_mean), PlanarCurve.from_samples(grid.t, b_mean),
                      a_mean, b_mean, var / scale, swapped)


def forward_grid(pair: CurvePair, s_vals, t_vals, quad_tol: float = 1e-10) -> SurfaceGrid:
    return surface_grid(pair, np.asarray(s_vals, float), np.asarray(t_vals, float), quad_tol)
