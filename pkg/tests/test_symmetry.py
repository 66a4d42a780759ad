import numpy as np
import pytest
from scipy import optimize

from affsphere.area import CurvePair, SplitG, midpoint
from affsphere.curves import PlanarCurve
from affsphere.errors import CoincidentTangentLines, NotOnE
from affsphere.fixtures import circle, conic_pair, excusp1_pair
from affsphere.singular import Kind, singular_analysis
from affsphere.symmetry import (AtInfinity, ConicKind, aass_solve, aass_tangent_check, aess_conic,
                                aess_determinant, aess_matrix, local_symmetry_points, midline,
                                reflection_check)

WINDOW = ((-0.15, 0.15), (-0.15, 0.15))


@pytest.fixture(scope="module")
def aass1():
    return aass_solve(excusp1_pair(), WINDOW)


@pytest.fixture(scope="module")
def aess1():
    return local_symmetry_points(excusp1_pair(), WINDOW)


def mirror_pair():
    a = PlanarCurve.polynomial([0, 1], [-1, 0, 0.5, 0.3, 0.2], (-0.4, 0.4))
    return CurvePair(a, a.transformed(np.diag([1.0, -1.0])))


def hyperbola(sign, domain=(0.5, 2.0)):
    def jet_fn(u):
        u = np.asarray(u, float)
        return tuple(sign * np.stack(c, axis=-1) for c in
                     ((u, 1 / u), (np.ones_like(u), -1 / u ** 2), (np.zeros_like(u), 2 / u ** 3),
                      (np.zeros_like(u), -6 / u ** 4)))
    return PlanarCurve.from_callable(jet_fn, domain)


def unimodular(rng):
    A = rng.normal(size=(2, 2))
    while abs(np.linalg.det(A)) < 0.2:
        A = rng.normal(size=(2, 2))
    if np.linalg.det(A) < 0:
        A[:, 0] *= -1
    return A / np.sqrt(np.linalg.det(A))


def perturbed_quintic(rng, scale=0.05):
    base = excusp1_pair()
    ca = np.array([[0, 1, 0, 0, 0, 0], [-1, 0, 1, 1, 0, 0]], float)
    cb = np.array([[0, 1, 0, 0, 0, 0], [1, 0, -1, -1, 0, 0]], float)
    ca[:, 2:] += scale * rng.normal(size=(2, 4))
    cb[:, 2:] += scale * rng.normal(size=(2, 4))
    return CurvePair(PlanarCurve.polynomial(*ca, base.alpha.domain), PlanarCurve.polynomial(*cb, base.beta.domain))


def dist_to_polyline(p, poly):
    a, b = poly[:-1], poly[1:]
    d = b - a
    u = np.clip(np.sum((p - a) * d, axis=1) / np.maximum(np.sum(d * d, axis=1), 1e-300), 0, 1)
    return float(np.min(np.linalg.norm(a + u[:, None] * d - p, axis=1)))


class TestAASS:
    def test_excusp1_branch_on_negative_axis(self, aass1):
        assert len(aass1) == 1
        m = aass1[0].midpoints
        assert len(m) > 50
        assert np.all(m[:, 0] < 0) and np.max(np.abs(m[:, 1])) < 1e-8

    def test_solutions_satisfy_the_system(self, aass1):
        pair = excusp1_pair()
        G = SplitG(pair, 1e-12)
        for sol in aass1[0].solutions[::25]:
            x1, x2 = midpoint(pair, sol.s1, sol.t1), midpoint(pair, sol.s2, sol.t2)
            assert np.max(np.abs(x1 - x2)) < 1e-9
            assert abs(G(sol.s1, sol.t1) - G(sol.s2, sol.t2)) < 1e-9
            assert np.hypot(sol.s1 - sol.s2, sol.t1 - sol.t2) > 1e-2

    def test_branch_ends_at_swallowtail_image(self, aass1):
        b = aass1[0]
        ends = {b.end_reasons[0]: b.midpoints[0], b.end_reasons[1]: b.midpoints[-1]}
        assert "diagonal" in ends
        assert np.linalg.norm(ends["diagonal"]) < 1e-3

    def test_secants_are_parallel(self, aass1):
        pair = excusp1_pair()
        sols = aass1[0].solutions
        worst = max(max(aass_tangent_check(pair, a, b).values()) for a, b in zip(sols[:-1], sols[1:]))
        assert worst < 1e-2

    def test_chord_differences_are_parallel(self, aass1):
        pair = excusp1_pair()
        for sol in aass1[0].solutions[::10]:
            da = pair.alpha(sol.s1) - pair.alpha(sol.s2)
            db = pair.beta(sol.t1) - pair.beta(sol.t2)
            assert abs(da[0] * db[1] - da[1] * db[0]) < 1e-9 * np.linalg.norm(da) * np.linalg.norm(db)

    def test_mirror_pair_axis(self):
        br = aass_solve(mirror_pair(), ((-0.3, 0.3), (-0.3, 0.3)))
        assert br
        for b in br:
            assert np.max(np.abs(b.midpoints[:, 1])) < 1e-8
            sols = b.solutions
            d = sols[-1].midpoint - sols[0].midpoint
            assert abs(d[1]) < 1e-8 * np.linalg.norm(d)
            for sol in sols[::20]:
                assert sol.s2 == pytest.approx(sol.t1, abs=1e-8) and sol.t2 == pytest.approx(sol.s1, abs=1e-8)

    def test_no_solutions_is_valid(self):
        c = circle(1.0, domain=(-1, 1))
        pair = CurvePair(c, circle(3.0, domain=(-1, 1), phase=np.pi), (0.0, 0.0))
        assert aass_solve(pair, ((-0.2, 0.2), (-0.2, 0.2)), seed_grid=10) == []

    def test_deterministic(self, aass1):
        again = aass_solve(excusp1_pair(), WINDOW)
        assert [s.z.tolist() for s in again[0].solutions] == [s.z.tolist() for s in aass1[0].solutions]


class TestDeterminant:
    def test_fixed_conic_pair_vanishes(self, rng):
        pair = conic_pair()
        s, t = rng.uniform(-0.6, 0.6, (2, 50))
        assert np.max(np.abs(aess_determinant(pair, s, t))) < 1e-12

    def test_array_and_scalar_agree(self):
        pair = excusp1_pair()
        s = np.array([0.1, -0.2])
        t = np.array([0.05, 0.3])
        v = aess_determinant(pair, s, t)
        assert v[1] == pytest.approx(aess_determinant(pair, -0.2, 0.3))

    def test_rows_are_normalized(self):
        M = aess_matrix(excusp1_pair(), 0.1, -0.2)
        assert np.allclose(np.linalg.norm(M, axis=1), 1)
        assert abs(aess_determinant(excusp1_pair(), 0.1, -0.2)) <= 1

    def test_sign_change_brackets_a_traced_root(self, rng):
        for _ in range(3):
            pair = perturbed_quintic(rng)
            window = ((-0.2, 0.2), (-0.2, 0.2))
            report = local_symmetry_points(pair, window)
            polys = [np.array([[p.s, p.t] for p in b]) for b in report.branches]
            found = 0
            for t in np.linspace(-0.15, 0.15, 4):
                s_vals = np.linspace(-0.2, 0.2, 81)
                d = aess_determinant(pair, s_vals, np.full_like(s_vals, t))
                for k in np.flatnonzero(d[:-1] * d[1:] < 0):
                    root = optimize.brentq(lambda s: aess_determinant(pair, s, t), s_vals[k], s_vals[k + 1],
                                           xtol=1e-14)
                    assert min(dist_to_polyline(np.array([root, t]), P) for P in polys) < 1e-6
                    found += 1
            assert found > 0

    def test_equi_affine_invariance_of_zero_set(self, rng):
        pair = excusp1_pair()
        window = ((-0.2, 0.2), (-0.2, 0.2))
        ref = local_symmetry_points(pair, window)
        ref_polys = [np.array([[p.s, p.t] for p in b]) for b in ref.branches]
        for _ in range(3):
            A, v = unimodular(rng), rng.normal(size=2)
            moved = CurvePair(pair.alpha.transformed(A, v), pair.beta.transformed(A, v))
            rep = local_symmetry_points(moved, window)
            pts = np.array([[p.s, p.t] for p in rep.points])
            assert len(pts) > 10
            assert max(min(dist_to_polyline(q, P) for P in ref_polys) for q in pts) < 1e-6

    def test_null_space_is_one_dimensional_on_e(self, aess1):
        pair = excusp1_pair()
        generic = [p for p in aess1.points if not p.on_singular_set][::20]
        for p in generic:
            assert aess_conic(pair, p.s, p.t, 1e-6).singular_ratio >= 1e3


class TestConic:
    def test_unit_circle(self):
        c = aess_conic(conic_pair(), 0.2, -0.3)
        assert c.kind is ConicKind.ELLIPSE
        assert np.allclose(c.center, 0, atol=1e-10)
        theta = np.linspace(0, 2 * np.pi, 9)
        on = np.column_stack([np.cos(theta), np.sin(theta)])
        assert np.max(np.abs(c(on))) < 1e-10 * np.max(np.abs(c.coeffs))

    def test_hyperbola(self):
        pair = CurvePair(hyperbola(1.0), hyperbola(-1.0), (1.0, 1.0))
        c = aess_conic(pair, 0.7, 1.6)
        assert c.kind is ConicKind.HYPERBOLA
        assert np.allclose(c.center, 0, atol=1e-10)

    def test_parabola_center_at_infinity(self):
        par = PlanarCurve.polynomial([0, 1], [0, 0, 1], (-1, 1))
        c = aess_conic(CurvePair(par, par), -0.5, 0.4)
        assert c.kind is ConicKind.PARABOLA
        assert isinstance(c.center, AtInfinity)
        assert abs(c.center.direction[0]) < 1e-8

    def test_off_e_raises(self):
        with pytest.raises(NotOnE):
            aess_conic(excusp1_pair(), 0.1, -0.05)

    def test_excusp1_centers_on_positive_axis(self, aess1):
        centers = np.array([p.center for p in aess1.points if not p.on_singular_set])
        assert np.all(centers[:, 0] > 0) and np.max(np.abs(centers[:, 1])) < 1e-4


class TestMidline:
    def test_elementary_intersection(self):
        a = PlanarCurve.polynomial([0, 1], [0], (-1, 1))
        b = PlanarCurve.polynomial([2], [2, 1], (-1, 1))
        m = midline(CurvePair(a, b), 0.0, 0.0)
        assert np.allclose(m.point, [1, 1])
        assert np.allclose(m.tangent_intersection, [2, 0])
        assert abs(m.direction[0] + m.direction[1]) < 1e-15

    def test_parallel_tangents(self):
        m = midline(excusp1_pair(), 0.0, 0.0)
        assert isinstance(m.tangent_intersection, AtInfinity)
        assert abs(m.direction[1]) < 1e-15 and np.allclose(m.point, [0, 0])

    def test_coincident_tangent_lines(self):
        a = PlanarCurve.polynomial([0, 1], [0], (-1, 1))
        b = PlanarCurve.polynomial([3, 2], [0], (-1, 1))
        with pytest.raises(CoincidentTangentLines):
            midline(CurvePair(a, b), 0.0, 0.0)

    def test_tangent_to_center_locus(self, aess1):
        angles = [p.tangency_angle for p in aess1.points]
        assert np.nanmax(angles) < 1e-2 and np.isfinite(angles).sum() > 100

    def test_reflection_maps_affine_tangents(self, aess1):
        pair = excusp1_pair()
        for p in aess1.points[::30]:
            if not p.on_singular_set:
                assert reflection_check(pair, p.s, p.t) < 1e-8
        assert reflection_check(pair, 0.1, -0.05) > 1e-2


class TestLocalSymmetry:
    def test_e_meets_s_is_flagged(self, aess1):
        hits = [p for p in aess1.points if p.on_singular_set]
        assert len(hits) == 1 and abs(hits[0].s) < 1e-10 and abs(hits[0].t) < 1e-10
        assert "not a regular" in hits[0].note
        sing = singular_analysis(excusp1_pair(), ((-0.3, 0.3), (-0.3, 0.3)))
        tails = [q for b in sing for q in b.points if q.kind is Kind.SWALLOWTAIL]
        assert abs(tails[0].s - hits[0].s) < 1e-8

    def test_fixed_conic_is_degenerate(self):
        rep = local_symmetry_points(conic_pair(), ((-0.5, 0.5), (-0.5, 0.5)))
        assert rep.degenerate_e and len(rep.points) == 81
        assert all(p.kind == "degenerate-E" for p in rep.points)

    def test_report_serializes(self, aess1):
        import json
        from affsphere.export import dumps
        d = json.loads(dumps(aess1))
        assert d["degenerate_E"] is False and len(d["branches"][0]) == len(aess1.points)
