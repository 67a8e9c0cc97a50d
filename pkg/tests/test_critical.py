import math

import numpy as np
import pytest

from hotspots.geometry import (Polygon, unit_square, isosceles_triangle,
                               triangle_from_angles)
from hotspots.mesh import triangulate, refine
from hotspots.eigensolver import solve_second, AnalyticSolution
from hotspots.critical import (find_critical_points, index_of, verify_index_formula,
                               cusp_diagnostic, classify_vertex, CriticalPoint,
                               estimate_hessian)
from hotspots.nodal import ScalarField, trace
from hotspots.corpus import random_simple_polygon


@pytest.fixture(scope="module")
def obtuse_sol(solve_cached):
    return solve_cached(triangle_from_angles(math.radians(30), math.radians(35)), 0.035)


@pytest.fixture(scope="module")
def isosceles_sol(solve_cached):
    return solve_cached(isosceles_triangle(math.radians(50)), 0.035)


class TestIndexOf:
    def test_interior_local_max(self):
        P = unit_square()
        f = lambda p: 1.0 - (p[:, 0] - 0.5) ** 2 - (p[:, 1] - 0.5) ** 2
        gf = lambda p: np.column_stack([-2 * (p[:, 0] - 0.5), -2 * (p[:, 1] - 0.5)])
        sol = AnalyticSolution(P, 1.0, f, gf, h_nominal=0.02)
        res = index_of(sol, np.array([0.5, 0.5]), "interior")
        assert res.index == 1 and res.n_arcs == 0

    def test_interior_saddle(self):
        P = unit_square()
        f = lambda p: (p[:, 0] - 0.5) ** 2 - (p[:, 1] - 0.5) ** 2
        gf = lambda p: np.column_stack([2 * (p[:, 0] - 0.5), -2 * (p[:, 1] - 0.5)])
        sol = AnalyticSolution(P, 1.0, f, gf, h_nominal=0.02)
        res = index_of(sol, np.array([0.5, 0.5]), "interior")
        assert res.index == -1 and res.n_arcs == 4

    def test_isosceles_base_midpoint(self, isosceles_sol):
        res = index_of(isosceles_sol, np.array([0.5, 0.0]), ("side", 0))
        assert res.index == -1

    def test_acute_vertex_extremum(self, obtuse_sol):
        info = classify_vertex(obtuse_sol, 0)
        assert info["index"] == 1
        assert info["probe_index"] == 1 and info["agree"]


class TestFindCriticalPoints:
    def test_obtuse_triangle_exactly_two_acute_vertices(self, obtuse_sol):
        cs = find_critical_points(obtuse_sol)
        assert not cs.degenerate
        assert len(cs.points) == 2
        assert {p.locus for p in cs.points} == {("vertex", 0), ("vertex", 1)}
        assert all(p.index == 1 and p.is_extremum for p in cs.points)

    def test_isosceles_four_points(self, isosceles_sol):
        cs = find_critical_points(isosceles_sol)
        vertex_pts = cs.by_kind("vertex")
        side_pts = cs.by_kind("side")
        assert len(vertex_pts) == 3 and all(p.index == 1 for p in vertex_pts)
        assert len(side_pts) == 1
        saddle = side_pts[0]
        assert saddle.index == -1
        h = float(isosceles_sol.h_at(saddle.location[None, :])[0])
        assert np.linalg.norm(saddle.location - [0.5, 0.0]) < 2 * h
        assert len(cs.points) == 4

    def test_u_nonzero_on_base(self, isosceles_sol):
        s = np.linspace(0, 1, 300)
        base = np.column_stack([s, np.zeros_like(s)])
        vals = isosceles_sol.eval(base, strict=False)
        assert np.nanmin(np.abs(vals)) > 0.05 * np.abs(isosceles_sol.coef).max()

    def test_rectangle_like_degenerate(self):
        P = unit_square()
        f = lambda p: np.cos(math.pi * p[:, 0])
        gf = lambda p: np.column_stack([-math.pi * np.sin(math.pi * p[:, 0]),
                                        np.zeros(len(p))])
        sol = AnalyticSolution(P, math.pi ** 2, f, gf, h_nominal=0.03)
        cs = find_critical_points(sol)
        assert cs.degenerate
        assert {d.description.split()[-1] for d in cs.degenerate_loci if d.kind == "side"} \
            == {"1", "3"}

    def test_nonvertex_indices_in_range(self, corpus_solutions):
        # second-eigenfunction nonvertex indices are 1, 0 or -1
        for sol in corpus_solutions[:5]:
            cs = find_critical_points(sol)
            for p in cs.points:
                if p.kind != "vertex" and p.index is not None:
                    assert p.index in (-1, 0, 1)

    def test_first_two_coefficients_not_both_zero(self, corpus_solutions):
        # simply connected: c0 and c1 cannot both vanish at a vertex
        from hotspots.bessel import fit_coefficients
        for sol in corpus_solutions[:5]:
            for vid in range(sol.polygon.n):
                mags = fit_coefficients(sol, vid).magnitudes()
                assert max(mags[0], mags[1]) > 1e-4


class TestIndexFormula:
    def test_obtuse(self, obtuse_sol):
        rep = verify_index_formula(obtuse_sol)
        assert rep.passed and rep.rhs == 2

    def test_isosceles(self, isosceles_sol):
        rep = verify_index_formula(isosceles_sol)
        assert rep.passed and rep.rhs == 2
        assert rep.terms["boundary_sum"] == 2

    def test_degenerate_inconclusive(self):
        P = unit_square()
        f = lambda p: np.cos(math.pi * p[:, 0])
        gf = lambda p: np.column_stack([-math.pi * np.sin(math.pi * p[:, 0]),
                                        np.zeros(len(p))])
        sol = AnalyticSolution(P, math.pi ** 2, f, gf, h_nominal=0.03)
        rep = verify_index_formula(sol)
        assert rep.passed is None and rep.degenerate


class TestStability:
    def test_total_index_stable_under_refinement(self):
        T = isosceles_triangle(math.radians(50))
        m = triangulate(T, 0.06)
        sol1 = solve_second(m)
        sol2 = solve_second(refine(m))
        cs1 = find_critical_points(sol1)
        cs2 = find_critical_points(sol2)
        assert cs1.S == cs2.S
        idx1 = sorted(p.index for p in cs1.nonzero_index_points())
        idx2 = sorted(p.index for p in cs2.nonzero_index_points())
        assert idx1 == idx2

    def test_boundary_extrema_are_critical(self, isosceles_sol):
        # global extrema live on the boundary and are reported critical points
        cs = find_critical_points(isosceles_sol)
        coefs = isosceles_sol.coef
        pts = isosceles_sol.space.dof_points()
        torig = pts[np.argmax(coefs)]
        tmin = pts[np.argmin(coefs)]
        locs = np.array([p.location for p in cs.nonzero_index_points()])
        for q in (torig, tmin):
            assert np.min(np.linalg.norm(locs - q, axis=1)) < 3 * 0.035


class TestRotationalDegreeOne:
    def test_degree_one_nodes_are_nonzero_index_points(self, obtuse_sol):
        # convex polygon without right angles, w interior
        T = obtuse_sol.polygon
        fld = ScalarField.rotational(obtuse_sol, T.centroid)
        g = trace(fld)
        cs = find_critical_points(obtuse_sol)
        locs = np.array([p.location for p in cs.nonzero_index_points()])
        deg1 = g.degree_one_nodes()
        assert len(deg1) >= 2
        for n in deg1:
            h = float(obtuse_sol.h_at(n.point[None, :])[0])
            assert np.min(np.linalg.norm(locs - n.point, axis=1)) < 3 * h


class TestCusp:
    def _cusp_solution(self):
        P = unit_square()
        f = lambda p: p[:, 1] ** 2 - (p[:, 0] - 0.5) ** 3
        gf = lambda p: np.column_stack([-3 * (p[:, 0] - 0.5) ** 2, 2 * p[:, 1]])
        return AnalyticSolution(P, 1.0, f, gf, h_nominal=0.02)

    def test_manufactured_cusp(self):
        sol = self._cusp_solution()
        res = index_of(sol, np.array([0.5, 0.0]), ("side", 0))
        assert res.index == 0
        cp = CriticalPoint(np.array([0.5, 0.0]), ("side", 0), 0, False)
        d = cusp_diagnostic(sol, cp)
        assert d.tangent_cusp and d.k == 3
        assert abs(d.slope_estimate - 3.0) < 0.1

    def test_quintic_cusp(self):
        P = unit_square()
        f = lambda p: p[:, 1] ** 2 - (p[:, 0] - 0.5) ** 5
        gf = lambda p: np.column_stack([-5 * (p[:, 0] - 0.5) ** 4, 2 * p[:, 1]])
        sol = AnalyticSolution(P, 1.0, f, gf, h_nominal=0.01)
        cp = CriticalPoint(np.array([0.5, 0.0]), ("side", 0), 0, False)
        d = cusp_diagnostic(sol, cp)
        assert d.tangent_cusp and d.k == 5

    def test_saddle_rejected(self):
        P = unit_square()
        f = lambda p: p[:, 1] ** 2 - (p[:, 0] - 0.5) ** 2
        gf = lambda p: np.column_stack([-2 * (p[:, 0] - 0.5), 2 * p[:, 1]])
        sol = AnalyticSolution(P, 1.0, f, gf, h_nominal=0.02)
        res = index_of(sol, np.array([0.5, 0.0]), ("side", 0))
        assert res.index == -1
        with pytest.raises(ValueError):
            cusp_diagnostic(sol, CriticalPoint(np.array([0.5, 0.0]), ("side", 0),
                                               res.index, False))

    def test_interior_point_rejected(self):
        sol = self._cusp_solution()
        with pytest.raises(ValueError):
            cusp_diagnostic(sol, CriticalPoint(np.array([0.5, 0.5]), "interior", 0, False))


class TestHessian:
    def test_interior_quadratic(self):
        P = unit_square()
        f = lambda p: 2 * (p[:, 0] - 0.5) ** 2 - 3 * (p[:, 1] - 0.5) ** 2
        gf = lambda p: np.column_stack([4 * (p[:, 0] - 0.5), -6 * (p[:, 1] - 0.5)])
        sol = AnalyticSolution(P, 1.0, f, gf, h_nominal=0.02)
        H = estimate_hessian(sol, np.array([0.5, 0.5]))
        assert np.allclose(H, np.diag([4.0, -6.0]), atol=1e-6)

    def test_side_one_sided(self):
        P = unit_square()
        f = lambda p: 2 * (p[:, 0] - 0.5) ** 2 - 3 * p[:, 1] ** 2
        gf = lambda p: np.column_stack([4 * (p[:, 0] - 0.5), -6 * p[:, 1]])
        sol = AnalyticSolution(P, 1.0, f, gf, h_nominal=0.02)
        H = estimate_hessian(sol, np.array([0.5, 0.0]), side=0)
        assert np.allclose(H, np.diag([4.0, -6.0]), atol=1e-6)
