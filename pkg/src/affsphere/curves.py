"""Planar parametric curves with derivative jets up to order three.

Vectors are plain ``numpy`` arrays whose last axis has length 2, so every
helper here works pointwise on a single vector or on a stack of them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, interpolate, optimize

from .errors import (ConfigError, InflectionInDomain, ParamOutOfDomain,
                     SingularMatrix, SingularParameterization)

DEFAULT_TOL = 1e-9


def vec(x, y) -> np.ndarray:
    return np.array([x, y], dtype=float)


def det2(u, v):
    """Determinant [u, v] = u.x*v.y - u.y*v.x (broadcasts over leading axes)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def perp(u) -> np.ndarray:
    """Anticlockwise quarter turn, (x, y) -> (-y, x)."""
    u = np.asarray(u, dtype=float)
    return np.stack([-u[..., 1], u[..., 0]], axis=-1)


def real_cbrt(x):
    # np.cbrt keeps the sign of negative arguments
    return np.cbrt(x)


@dataclass(frozen=True)
class CurveJet:
    param: float | np.ndarray
    p: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray


def _poly_derivs(coeffs: Sequence[float], order: int) -> list[np.ndarray]:
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0:
        c = np.zeros(1)
    out = [c]
    for _ in range(order):
        c = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.zeros(1)
        out.append(c)
    return out


def _horner(c: np.ndarray, u):
    r = c[-1] + 0.0 * u
    for ck in c[-2::-1]:
        r = r * u + ck
    return r


@dataclass(frozen=True, eq=False)
class PlanarCurve:
    """Immutable parametric curve.

    ``jet_fn(u)`` must return ``(p, d1, d2, d3)`` for scalar or array ``u``;
    ``d4_fn`` is optional and only used where fourth derivatives are needed
    (affine arc-length reparameterization).
    """

    jet_fn: Callable
    domain: tuple[float, float]
    backend: str = "callable"
    d4_fn: Callable | None = None
    meta: dict = field(default_factory=dict)

    # -- construction -----------------------------------------------------
    @classmethod
    def polynomial(cls, x_coeffs, y_coeffs, domain=(-1.0, 1.0)) -> "PlanarCurve":
        """Polynomial curve; coefficients in ascending degree."""
        xs = _poly_derivs(x_coeffs, 4)
        ys = _poly_derivs(y_coeffs, 4)

        def jet_fn(u):
            return tuple(np.stack([_horner(xs[k], u), _horner(ys[k], u)], axis=-1)
                         for k in range(4))

        def d4_fn(u):
            return np.stack([_horner(xs[4], u), _horner(ys[4], u)], axis=-1)

        meta = {"x_coeffs": [float(c) for c in x_coeffs],
                "y_coeffs": [float(c) for c in y_coeffs]}
        return cls(jet_fn, _check_domain(domain), "polynomial", d4_fn, meta)

    @classmethod
    def from_samples(cls, u, xy, degree: int = 5) -> "PlanarCurve":
        """Interpolating spline (not-a-knot ends) through ``xy[i]`` at ``u[i]``."""
        u = np.asarray(u, dtype=float)
        xy = np.asarray(xy, dtype=float)
        if degree < 5:
            raise ConfigError("third derivatives need at least a quintic spline")
        if u.ndim != 1 or xy.shape != (u.size, 2) or u.size < degree + 1:
            raise ConfigError(f"need >= {degree + 1} samples of shape (n, 2)")
        order = np.argsort(u)
        u, xy = u[order], xy[order]
        if np.any(np.diff(u) <= 0):
            raise ConfigError("sample parameters must be distinct")
        spl = interpolate.make_interp_spline(u, xy, k=degree)
        ders = [spl] + [spl.derivative(k) for k in range(1, 5)]

        def jet_fn(t):
            return tuple(ders[k](t) for k in range(4))

        return cls(jet_fn, (float(u[0]), float(u[-1])), "samples", ders[4],
                   {"samples": np.column_stack([u, xy]).tolist()})

    @classmethod
    def from_callable(cls, jet_fn, domain, d4_fn=None) -> "PlanarCurve":
        return cls(jet_fn, _check_domain(domain), "callable", d4_fn)

    @classmethod
    def from_dict(cls, d: dict) -> "PlanarCurve":
        backend = d.get("backend", "samples" if "samples" in d else "polynomial")
        if backend == "polynomial":
            if "x_coeffs" not in d or "y_coeffs" not in d:
                raise ConfigError("polynomial curve needs x_coeffs and y_coeffs")
            return cls.polynomial(d["x_coeffs"], d["y_coeffs"], tuple(d.get("domain", (-1.0, 1.0))))
        if backend == "samples":
            s = np.asarray(d.get("samples", []), dtype=float)
            if s.ndim != 2 or s.shape[1] != 3:
                raise ConfigError("samples must be a list of [u, x, y] rows")
            return cls.from_samples(s[:, 0], s[:, 1:])
        raise ConfigError(f"unknown curve backend {backend!r}")

    def to_dict(self) -> dict:
        if self.backend == "polynomial":
            return {"backend": "polynomial", **self.meta, "domain": list(self.domain)}
        if self.backend == "samples":
            return {"backend": "samples", **self.meta}
        raise ConfigError("callable curves are not serializable")

    # -- evaluation -------------------------------------------------------
    def check(self, u):
        lo, hi = self.domain
        slack = 1e-12 * max(1.0, hi - lo)
        ua = np.asarray(u, dtype=float)
        if not np.all(np.isfinite(ua)) or np.any(ua < lo - slack) or np.any(ua > hi + slack):
            raise ParamOutOfDomain(f"parameter outside domain [{lo}, {hi}]")

    def jet(self, u) -> CurveJet:
        self.check(u)
        p, d1, d2, d3 = self.jet_fn(u)
        return CurveJet(u, np.asarray(p, float), np.asarray(d1, float),
                        np.asarray(d2, float), np.asarray(d3, float))

    def __call__(self, u) -> np.ndarray:
        return self.jet(u).p

    def d4(self, u) -> np.ndarray:
        self.check(u)
        if self.d4_fn is not None:
            return np.asarray(self.d4_fn(u), float)
        lo, hi = self.domain
        h = 1e-4 * max(hi - lo, 1e-3)
        u = np.clip(np.asarray(u, float), lo + h, hi - h)
        return (self.jet_fn(u + h)[3] - self.jet_fn(u - h)[3]) / (2 * h)

    def transformed(self, A=None, v=(0.0, 0.0)) -> "PlanarCurve":
        """Image of the curve under ``p -> A p + v``."""
        A = np.eye(2) if A is None else np.asarray(A, dtype=float)
        v = np.asarray(v, dtype=float)
        if A.shape != (2, 2):
            raise ConfigError("A must be 2x2")
        if abs(np.linalg.det(A)) < 1e-14:
            raise SingularMatrix("planar map is not invertible")
        base, base_d4 = self.jet_fn, self.d4

        def jet_fn(u):
            p, d1, d2, d3 = base(u)
            return (p @ A.T + v, d1 @ A.T, d2 @ A.T, d3 @ A.T)

        def d4_fn(u):
            return base_d4(u) @ A.T

        meta = {}
        if self.backend == "polynomial":
            xc = np.zeros(max(len(self.meta["x_coeffs"]), len(self.meta["y_coeffs"])))
            yc = xc.copy()
            xc[:len(self.meta["x_coeffs"])] = self.meta["x_coeffs"]
            yc[:len(self.meta["y_coeffs"])] = self.meta["y_coeffs"]
            nx = A[0, 0] * xc + A[0, 1] * yc
            ny = A[1, 0] * xc + A[1, 1] * yc
            nx[0] += v[0]
            ny[0] += v[1]
            return PlanarCurve.polynomial(nx, ny, self.domain)
        return PlanarCurve(jet_fn, self.domain, "callable", d4_fn, meta)

    def translated(self, w) -> "PlanarCurve":
        return self.transformed(None, w)


def _check_domain(domain) -> tuple[float, float]:
    lo, hi = (float(domain[0]), float(domain[1]))
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ConfigError(f"bad domain {domain!r}")
    return lo, hi


def eval_jet(curve: PlanarCurve, u) -> CurveJet:
    return curve.jet(u)


def cubic_coefficient(curve: PlanarCurve, u):
    """Real cube root of [c', c''] (negative for clockwise turning)."""
    j = curve.jet(u)
    return real_cbrt(det2(j.d1, j.d2))


def euclidean_curvature(curve: PlanarCurve, u, tol: float = DEFAULT_TOL):
    j = curve.jet(u)
    speed = np.hypot(j.d1[..., 0], j.d1[..., 1])
    if np.any(speed < tol):
        raise SingularParameterization("vanishing velocity")
    return det2(j.d1, j.d2) / speed ** 3


def find_inflections(curve: PlanarCurve, tol: float = DEFAULT_TOL, samples: int = 2001) -> list[float]:
    """Parameters where [c', c''] changes sign (or vanishes on a sample node)."""
    lo, hi = curve.domain
    u = np.linspace(lo, hi, samples)

    def f(x):
        j = curve.jet_fn(x)
        return float(det2(j[1], j[2]))

    vals = det2(*curve.jet_fn(u)[1:3])
    roots: list[float] = []
    for i in range(samples - 1):
        if vals[i] == 0.0:
            roots.append(float(u[i]))
        elif vals[i] * vals[i + 1] < 0:
            roots.append(float(optimize.brentq(f, u[i], u[i + 1], xtol=tol)))
    if vals[-1] == 0.0:
        roots.append(float(u[-1]))
    return roots


def affine_arclength_reparam(curve: PlanarCurve, tol: float = DEFAULT_TOL,
                             table_size: int = 257) -> PlanarCurve:
    """Reparameterize by affine arc length sigma, d(sigma)/du = [c', c'']^(1/3).

    The returned curve is a callable-backend curve on the sigma interval;
    jets are exact up to the inversion tolerance (order three uses the
    fourth derivative of the source curve).
    """
    lo, hi = curve.domain
    probe = np.linspace(lo, hi, 2001)
    D = det2(*curve.jet_fn(probe)[1:3])
    if np.min(np.abs(D)) < tol or np.any(np.sign(D) != np.sign(D[0])):
        raise InflectionInDomain("[c', c''] vanishes in the domain")

    def a_of(u):
        j = curve.jet_fn(u)
        return real_cbrt(det2(j[1], j[2]))

    nodes = np.linspace(lo, hi, table_size)
    sig = np.zeros(table_size)
    for k in range(1, table_size):
        sig[k] = sig[k - 1] + integrate.quad(a_of, nodes[k - 1], nodes[k], epsabs=1e-15, epsrel=1e-13)[0]

    def sigma_of(u):
        k = min(int(np.searchsorted(nodes, u, side="right")) - 1, table_size - 2)
        k = max(k, 0)
        return sig[k] + integrate.quad(a_of, nodes[k], u, epsabs=1e-15, epsrel=1e-13)[0]

    increasing = sig[-1] > sig[0]
    sig_sorted, nodes_sorted = (sig, nodes) if increasing else (sig[::-1], nodes[::-1])

    def u_of_scalar(s):
        u = float(np.interp(s, sig_sorted, nodes_sorted))
        for _ in range(50):
            du = (sigma_of(u) - s) / a_of(u)
            u = min(max(u - du, lo), hi)
            if abs(du) < 1e-15 * max(1.0, abs(u)):
                break
        return u

    def jet_fn(s):
        u = np.vectorize(u_of_scalar, otypes=[float])(s)
        p, d1, d2, d3 = curve.jet_fn(u)
        d4 = curve.d4(u)
        Dv = det2(d1, d2)
        Dp = det2(d1, d3)
        Dpp = det2(d2, d3) + det2(d1, d4)
        a = real_cbrt(Dv)
        a_s = Dp / (3 * a ** 2)
        a_ss = Dpp / (3 * a ** 2) - 2 * Dp ** 2 / (9 * a ** 5)
        s1 = 1.0 / a
        s2 = -a_s / a ** 3
        s3 = (-a_ss / a ** 3 + 3 * a_s ** 2 / a ** 4) / a
        s1, s2, s3 = (np.asarray(x)[..., None] for x in (s1, s2, s3))
        return (p, d1 * s1, d2 * s1 ** 2 + d1 * s2,
                d3 * s1 ** 3 + 3 * d2 * s1 * s2 + d1 * s3)

    domain = (float(min(sig[0], sig[-1])), float(max(sig[0], sig[-1])))
    out = PlanarCurve(jet_fn, domain, "callable")
    out.meta["source_param"] = lambda s: np.vectorize(u_of_scalar, otypes=[float])(s)
    return out
