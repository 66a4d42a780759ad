import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from affsphere.area import (CurvePair, SplitG, accumulate_g, chord_area, g_partials, grid_axes,
                            half_normal, midpoint, omega, surface_grid)
from affsphere.curves import PlanarCurve
from affsphere.errors import ConfigError, ParamOutOfDomain
from affsphere.fixtures import circle, excusp1_pair, excusp2_pair

params = st.floats(-0.9, 0.9, allow_nan=False)


def test_midpoint_examples(ex1, ex2):
    assert np.allclose(midpoint(ex1, 0.0, 0.0), [0, 0])
    assert np.allclose(midpoint(ex2, 1.0, 1.0), [0, 0])
    same = CurvePair(PlanarCurve.polynomial([2], [3]), PlanarCurve.polynomial([2], [3]))
    assert np.allclose(midpoint(same, 0.4, -0.2), [2, 3])


def test_midpoint_out_of_domain(ex1):
    with pytest.raises(ParamOutOfDomain):
        midpoint(ex1, 2.0, 0.0)


def test_half_normal_examples(ex1):
    assert np.allclose(half_normal(ex1, 0.0, 0.0), [-1, 0])
    cross = CurvePair(PlanarCurve.polynomial([0, 1], [0]), PlanarCurve.polynomial([0], [0, 1]))
    assert np.allclose(half_normal(cross, 0.0, 0.0), [0, 0])


def test_half_normal_length_and_orthogonality(ex1, rng):
    s, t = rng.uniform(-0.9, 0.9, (2, 100))
    n = half_normal(ex1, s, t)
    chord = ex1.beta(t) - ex1.alpha(s)
    assert np.allclose(np.linalg.norm(n, axis=1), 0.5 * np.linalg.norm(chord, axis=1))
    assert np.allclose(np.sum(n * chord, axis=1), 0, atol=1e-15)


def test_g_partials_excusp1(ex1):
    gs, gt = g_partials(ex1, 0.0, 0.0)
    assert gs == pytest.approx(-0.5)
    assert gt == pytest.approx(-0.5)


def test_g_partials_vanish_on_zero_chord():
    cross = CurvePair(PlanarCurve.polynomial([0, 1], [0, 0, 1]), PlanarCurve.polynomial([0, 0, 1], [0, 1]))
    assert np.allclose(g_partials(cross, 0.0, 0.0), 0)


def test_g_partials_match_finite_differences(ex1):
    G = SplitG(ex1, 1e-13)
    h = 1e-5
    s = np.linspace(-0.8, 0.8, 20)
    S, T = np.meshgrid(s, s, indexing="ij")
    fd_s = (G(S + h, T) - G(S - h, T)) / (2 * h)
    fd_t = (G(S, T + h) - G(S, T - h)) / (2 * h)
    gs, gt = g_partials(ex1, S, T)
    assert np.max(np.abs(fd_s - gs)) < 1e-6
    assert np.max(np.abs(fd_t - gt)) < 1e-6


def test_g_partials_are_second_order_accurate(ex1):
    errs = []
    for h in (1e-2, 5e-3):
        fd = (accumulate_g(ex1, 0.3 + h, -0.2, 1e-13) - accumulate_g(ex1, 0.3 - h, -0.2, 1e-13)) / (2 * h)
        errs.append(abs(fd - g_partials(ex1, 0.3, -0.2)[0]))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)


def test_accumulate_g_at_base():
    pair = excusp1_pair()
    pair = CurvePair(pair.alpha, pair.beta, (0.2, -0.1), 1.75)
    assert accumulate_g(pair, 0.2, -0.1) == 1.75


@given(params, params)
def test_accumulate_g_path_independent(s, t):
    pair = excusp1_pair()
    tol = 1e-10
    assert abs(accumulate_g(pair, s, t, tol) - accumulate_g(pair, s, t, tol, t_first=True)) < 2 * tol


def test_path_independence_on_random_targets(ex2, rng):
    tol = 1e-10
    for s, t in rng.uniform(-1.8, 1.8, (100, 2)):
        assert abs(accumulate_g(ex2, s, t, tol) - accumulate_g(ex2, s, t, tol, t_first=True)) < 2 * tol


def test_excusp1_printed_g_is_minus_four_times_g(fx1):
    s = np.linspace(-0.2, 0.2, 9)
    S, T = np.meshgrid(s, s, indexing="ij")
    g = SplitG(fx1.pair, 1e-13).grid(s, s)
    diff = fx1.expected["printed_g"](S, T) - (-4.0) * g
    assert np.ptp(diff) < 1e-12


def test_excusp2_printed_g_matches_exactly(fx2):
    s = np.linspace(-0.5, 0.5, 9)
    S, T = np.meshgrid(s, s, indexing="ij")
    g = SplitG(fx2.pair, 1e-13).grid(s, s)
    assert np.max(np.abs(fx2.expected["printed_g"](S, T) - g)) < 1e-12


def test_split_g_agrees_with_path_integral(ex1, rng):
    G = SplitG(ex1, 1e-12)
    for _ in range(4):
        s, t = rng.uniform(-0.9, 0.9, (2, int(rng.integers(1, 20))))
        ref = np.array([accumulate_g(ex1, a, b, 1e-12) for a, b in zip(s, t)])
        assert np.max(np.abs(G(s, t) - ref)) < 1e-11


def test_split_g_for_non_polynomial_curves():
    pair = CurvePair(circle(1.0, domain=(-1, 1)), circle(2.0, domain=(-1, 1), phase=2.5))
    G = SplitG(pair, 1e-12)
    s = np.linspace(-1, 1, 11)
    ref = np.array([accumulate_g(pair, a, a / 2, 1e-12) for a in s])
    assert np.max(np.abs(G(s, s / 2) - ref)) < 1e-11


def test_chord_area_at_base(ex1):
    assert chord_area(ex1, 0.0, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_chord_area_minus_g_constant(ex1):
    s = np.linspace(-0.5, 0.5, 10)
    vals = [chord_area(ex1, a, b) / 2 - accumulate_g(ex1, a, b) for a in s for b in s]
    assert np.ptp(vals) < 1e-8


def test_chord_area_concentric_arcs_shoelace():
    alpha = circle(1.0, domain=(0, np.pi))
    beta = circle(2.0, domain=(0, np.pi))
    pair = CurvePair(alpha, beta, (0.0, 0.0))
    n = 10_000
    # loop: alpha(0) -> beta(0..pi/2) -> alpha(pi/2..0)
    u = np.linspace(0, np.pi / 2, n // 2)
    poly = np.vstack([beta(u), alpha(u[::-1])])
    x, y = poly[:, 0], poly[:, 1]
    shoelace = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    A = chord_area(pair, np.pi / 2, np.pi / 2, 1e-12)
    assert A == pytest.approx(shoelace, rel=1e-6)
    assert abs(A) == pytest.approx(3 * np.pi / 4, rel=1e-6)


def test_omega_examples(fx1, fx2):
    s = np.linspace(-0.9, 0.9, 11)
    S, T = np.meshgrid(s, s, indexing="ij")
    assert np.allclose(np.abs(4 * omega(fx1.pair, S, T)), np.abs(fx1.expected["printed_4omega"](S, T)))
    assert np.allclose(2 * omega(fx2.pair, S, T), fx2.expected["printed_2omega"](S, T))


def test_omega_parallel_tangents_zero():
    pair = CurvePair(PlanarCurve.polynomial([0, 1], [0]), PlanarCurve.polynomial([0, 3], [1]))
    assert omega(pair, 0.3, -0.4) == 0


def test_mixed_partials_agree_with_omega(ex1):
    h = 1e-5
    s = np.linspace(-0.8, 0.8, 12)
    S, T = np.meshgrid(s, s, indexing="ij")
    gs_t = (g_partials(ex1, S, T + h)[0] - g_partials(ex1, S, T - h)[0]) / (2 * h)
    gt_s = (g_partials(ex1, S + h, T)[1] - g_partials(ex1, S - h, T)[1]) / (2 * h)
    assert np.max(np.abs(gs_t - gt_s)) < 1e-6
    assert np.max(np.abs(np.abs(gs_t) - np.abs(omega(ex1, S, T)))) < 1e-6


def test_surface_grid_fields(ex1):
    s, t = grid_axes((-0.5, 0.5), (-0.4, 0.4), (7, 5))
    grid = surface_grid(ex1, s, t)
    assert grid.shape == (7, 5)
    i, j = 3, 1
    assert np.allclose(grid.x[i, j], midpoint(ex1, s[i], t[j]))
    assert grid.g[i, j] == pytest.approx(accumulate_g(ex1, s[i], t[j]), abs=1e-10)
    # g_s = n . x_s and g_t = n . x_t
    xs = 0.5 * ex1.alpha.jet(s[i]).d1
    xt = 0.5 * ex1.beta.jet(t[j]).d1
    assert grid.g_s[i, j] == pytest.approx(grid.n[i, j] @ xs)
    assert grid.g_t[i, j] == pytest.approx(grid.n[i, j] @ xt)
    samples = list(grid.samples())
    assert len(samples) == 35 and samples[i * 5 + j].omega == pytest.approx(omega(ex1, s[i], t[j]))


def test_grid_axes_rejects_small_resolution():
    with pytest.raises(ConfigError):
        grid_axes((0, 1), (0, 1), (1, 4))


def test_pair_rejects_base_outside_domain():
    c = PlanarCurve.polynomial([0, 1], [0], (-1, 1))
    with pytest.raises(ParamOutOfDomain):
        CurvePair(c, c, (3.0, 0.0))
