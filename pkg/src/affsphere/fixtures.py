"""Built-in curve pairs with machine-checkable expectations.

Expectations are residual functions of (s, t) rather than point lists, so
they hold at any trace resolution.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .area import CurvePair, SurfaceGrid
from .curves import PlanarCurve
from .errors import ConfigError


@dataclass
class Fixture:
    name: str
    pair: CurvePair
    singular_window: tuple
    local_window: tuple
    symmetry_window: tuple | None
    expected: dict = field(default_factory=dict)


def excusp1_pair(eps: float = 1.0) -> CurvePair:
    alpha = PlanarCurve.polynomial([0, 1], [-1, 0, 1, 1], (-eps, eps))
    beta = PlanarCurve.polynomial([0, 1], [1, 0, -1, -1], (-eps, eps))
    return CurvePair(alpha, beta, (0.0, 0.0), 0.0, "excusp1")


def excusp2_pair(eps: float = 2.0) -> CurvePair:
    alpha = PlanarCurve.polynomial([0, 0, 1, -1], [0, 0, 1, 1], (-eps, eps))
    beta = PlanarCurve.polynomial([0, 0, 1, -1], [0, 0, -1, -1], (-eps, eps))
    return CurvePair(alpha, beta, (0.0, 0.0), 0.0, "excusp2")


def excusp1_printed_g(s, t):
    return (2 * s + 2 * t + s ** 3 / 3 + s ** 4 / 2 + t ** 3 / 3 + t ** 4 / 2
            - s * t ** 2 - t * s ** 2 - s * t ** 3 - t * s ** 3)


def excusp2_printed_g(s, t):
    return 0.5 * (s ** 2 * t ** 2 - s ** 3 * t ** 3 - (s ** 5 + t ** 5) / 5)


def excusp1_lambda(s, t):
    # tan^(1/3) of the circle angle r, with tan r = (3t+1)/(3s+1)
    return np.cbrt((3 * t + 1) / (3 * s + 1))


def excusp2_lambda(s, t):
    r = 1.5 * s
    return -np.cbrt(r) ** 5


def excusp2_published_grid(s_vals, t_vals) -> SurfaceGrid:
    """Published (u, v) closed forms for excusp2, resampled at s = u + v, t = u - v."""
    S, T = np.meshgrid(np.asarray(s_vals, float), np.asarray(t_vals, float), indexing="ij")
    u, v = (S + T) / 2, (S - T) / 2
    x = np.stack([u ** 2 + v ** 2 - u ** 3 - 3 * u * v ** 2, 2 * u * v + 3 * u ** 2 * v + v ** 3], axis=-1)
    n = np.stack([u ** 2 + v ** 2 + u ** 3 + 3 * u * v ** 2, -2 * u * v + 3 * u ** 2 * v + v ** 3], axis=-1)
    return SurfaceGrid(np.asarray(s_vals, float), np.asarray(t_vals, float), x, n,
                       np.full(S.shape, np.nan), meta={"source": "excusp2 published (u,v) data"})


def flat_pair() -> CurvePair:
    """Two lines generating the hyperbolic paraboloid g = xy (+ const)."""
    alpha = PlanarCurve.polynomial([0], [0, 2], (-1, 1))
    beta = PlanarCurve.polynomial([0, 2], [0], (-1, 1))
    return CurvePair(alpha, beta, (0.0, 0.0), 0.0, "flat")


def circle(radius=1.0, center=(0.0, 0.0), domain=(-np.pi, np.pi), phase=0.0) -> PlanarCurve:
    cx, cy = center

    def jet_fn(u):
        c, s = np.cos(u + phase), np.sin(u + phase)
        r = radius
        return (np.stack([cx + r * c, cy + r * s], axis=-1), np.stack([-r * s, r * c], axis=-1),
                np.stack([-r * c, -r * s], axis=-1), np.stack([r * s, -r * c], axis=-1))

    def d4_fn(u):
        c, s = np.cos(u + phase), np.sin(u + phase)
        return np.stack([radius * c, radius * s], axis=-1)

    return PlanarCurve.from_callable(jet_fn, domain, d4_fn)


def conic_pair() -> CurvePair:
    """Two arcs of the unit circle: every (s, t) admits a 3+3 conic."""
    alpha = circle(1.0, domain=(-0.6, 0.6))
    beta = circle(1.0, domain=(-0.6, 0.6), phase=np.pi * 0.75)
    return CurvePair(alpha, beta, (0.0, 0.0), 0.0, "conic")


def _excusp1() -> Fixture:
    return Fixture(
        "excusp1", excusp1_pair(),
        singular_window=((-0.9, 0.3), (-0.9, 0.3)),
        local_window=((-0.3, 0.3), (-0.3, 0.3)),
        symmetry_window=((-0.15, 0.15), (-0.15, 0.15)),
        expected={
            "singular_residual": lambda s, t: (3 * s + 1) ** 2 + (3 * t + 1) ** 2 - 2,
            "swallowtails_local": [(0.0, 0.0)],
            "swallowtails_full": [(0.0, 0.0), (-2 / 3, -2 / 3)],
            "lambda": excusp1_lambda,
            "printed_g": excusp1_printed_g,
            # the printed closed form is -4 times the potential with grad g = n
            "printed_g_scale": -4.0,
            "printed_4omega": lambda s, t: 2 * s + 3 * s ** 2 + 2 * t + 3 * t ** 2,
            "aass_side": -1,
            "aess_side": +1,
        })


def _excusp2() -> Fixture:
    return Fixture(
        "excusp2", excusp2_pair(),
        singular_window=((-1.5, 1.5), (-1.5, 1.5)),
        local_window=((-1.5, -0.1), (-1.5, -0.1)),
        symmetry_window=None,
        expected={
            "singular_residual": lambda s, t: 9 * s * t - 4,
            "degenerate_residual": lambda s, t: s * t,
            "swallowtails_local": [(-2 / 3, -2 / 3)],
            "lambda": excusp2_lambda,
            "printed_g": excusp2_printed_g,
            "printed_g_scale": 1.0,
            "printed_2omega": lambda s, t: -s * t * (4 - 9 * s * t),
        })


FIXTURES: dict[str, Callable[[], Fixture]] = {"excusp1": _excusp1, "excusp2": _excusp2}


def get_fixture(name: str) -> Fixture:
    try:
        return FIXTURES[name.lower()]()
    except KeyError:
        raise ConfigError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
