import math

import numpy as np
import pytest

from hotspots.geometry import Polygon, unit_square, isosceles_triangle, triangle_from_angles
from hotspots.eigensolver import AnalyticSolution
from hotspots.bessel import bessel_j
from hotspots.nodal import (ScalarField, trace, arc_ends_at_vertex, degree_one_vertices,
                            wedge_probe, analytic_arc_verdict, NodalGraph)


def cos_mode_solution():
    P = unit_square()
    f = lambda p: np.cos(math.pi * p[:, 0])
    gf = lambda p: np.column_stack([-math.pi * np.sin(math.pi * p[:, 0]),
                                    np.zeros(len(p))])
    return AnalyticSolution(P, math.pi ** 2, f, gf, h_nominal=0.02)


def sector_solution(beta, coeffs, mu=5.0, extent=1.0):
    """Manufactured Neumann sector data on a wedge-shaped triangle."""
    nu = math.pi / beta
    P = Polygon([[0, 0], [extent, 0], [extent * math.cos(beta), extent * math.sin(beta)]])

    def u(pts):
        r = np.linalg.norm(pts, axis=1)
        th = np.arctan2(pts[:, 1], pts[:, 0])
        out = np.zeros(len(pts))
        for n, c in enumerate(coeffs):
            out += c * bessel_j(n * nu, math.sqrt(mu) * r) * np.cos(n * nu * th)
        return out

    def gu(pts):
        d = 1e-7
        ex = np.array([d, 0.0])
        ey = np.array([0.0, d])
        gx = (u(pts + ex) - u(pts - ex)) / (2 * d)
        gy = (u(pts + ey) - u(pts - ey)) / (2 * d)
        return np.column_stack([gx, gy])

    return AnalyticSolution(P, mu, u, gu, h_nominal=0.01)


class TestTraceClosedForm:
    def test_square_nodal_line(self):
        g = trace(ScalarField.u(cos_mode_solution()))
        rep = g.simple_arc_report()
        assert rep["is_simple_arc"]
        assert rep["endpoint_sides"] == [0, 2]
        pts = g.polyline_points()
        assert np.abs(pts[:, 0] - 0.5).max() < 1e-6

    def test_square_derivative_field_boundary_only(self):
        # Z(d/dx u) = sides x=0 and x=1; interior part empty
        g = trace(ScalarField.directional(cos_mode_solution(), 0.0))
        assert sorted(g.zero_sides) == [1, 3]
        assert len(g.edges) == 0

    def test_sign_consistency_along_polyline(self):
        sol = cos_mode_solution()
        g = trace(ScalarField.u(sol))
        for _, _, pl in g.edges:
            mid = pl[len(pl) // 2]
            tangent = pl[len(pl) // 2 + 1] - pl[len(pl) // 2 - 1]
            n = np.array([-tangent[1], tangent[0]])
            n /= np.linalg.norm(n)
            d = 1e-3
            va = sol.eval((mid + d * n)[None, :])[0]
            vb = sol.eval((mid - d * n)[None, :])[0]
            assert va * vb < 0

    def test_empty_graph_has_no_degree_one_nodes(self):
        # strictly positive field: empty zero set
        P = unit_square()
        sol = AnalyticSolution(P, 1.0, lambda p: 1.0 + p[:, 0],
                               lambda p: np.column_stack([np.ones(len(p)), np.zeros(len(p))]))
        g = trace(ScalarField.u(sol))
        assert len(g.edges) == 0
        assert degree_one_vertices(g) == []


class TestTraceFEM:
    def test_obtuse_triangle_simple_arc(self, solve_cached):
        T = triangle_from_angles(math.radians(30), math.radians(35))
        sol = solve_cached(T, 0.035)
        g = trace(ScalarField.u(sol))
        rep = g.simple_arc_report()
        assert rep["is_simple_arc"]
        assert len(set(rep["endpoint_sides"])) == 2
        # no critical point on the nodal line: gradient stays above the floor
        pts = g.polyline_points()
        gn = np.linalg.norm(sol.eval_grad(pts, strict=False), axis=1)
        gn = gn[np.isfinite(gn)]
        assert gn.min() > 1e-3 * math.sqrt(sol.mu) * np.abs(sol.coef).max()

    def test_isosceles_axis_arc(self, solve_cached):
        # u is symmetric, so d/dx u vanishes on the symmetry axis: the traced
        # graph contains an arc from the base midpoint to the apex vertex
        T = isosceles_triangle(math.radians(50))
        sol = solve_cached(T, 0.035)
        g = trace(ScalarField.directional(sol, 0.0))
        deg1 = degree_one_vertices(g)
        assert len(deg1) >= 2
        assert any(n.locus == ("vertex", 2) for n in deg1)       # apex, off the base
        pts = g.polyline_points()
        assert np.abs(pts[:, 0] - 0.5).max() < 0.02              # the axis


class TestArcAtVertex:
    def test_case_a_interval(self):
        # c0-dominant, beta = pi/3: arc iff psi in [pi/2, pi/2 + beta] mod pi
        beta = math.pi / 3
        sol = sector_solution(beta, [1.0, 0.0, 0.2])
        v_in = arc_ends_at_vertex(ScalarField.directional(sol, math.pi / 2 + beta / 2), 0)
        assert v_in.verdict is True and v_in.agree
        v_out = arc_ends_at_vertex(ScalarField.directional(sol, math.pi / 4), 0)
        assert v_out.verdict is False and v_out.agree

    def test_case_b_interval(self):
        # c1 != 0, beta = 2pi/3: arc iff psi in [beta - pi/2, pi/2] mod pi;
        # psi = 0 is outside [pi/6, pi/2]
        beta = 2 * math.pi / 3
        sol = sector_solution(beta, [0.6, 1.0])
        v = arc_ends_at_vertex(ScalarField.directional(sol, 0.0), 0)
        assert v.verdict is False and v.agree
        v2 = arc_ends_at_vertex(ScalarField.directional(sol, math.pi / 3), 0)
        assert v2.verdict is True and v2.agree

    def test_at_most_one_arc(self):
        beta = math.pi / 3
        sol = sector_solution(beta, [1.0, 0.0, 0.2])
        probe = wedge_probe(ScalarField.directional(sol, math.pi / 2 + beta / 2),
                            sol.polygon, 0)
        assert all(n <= 1 for n in probe.n_roots)

    def test_rotational_field_extremum_criterion(self, solve_cached):
        # convex polygon, w interior: arc of Z(R_w u) ends at v iff v extremum
        T = triangle_from_angles(math.radians(30), math.radians(35))
        sol = solve_cached(T, 0.035)
        w = T.centroid
        fld = ScalarField.rotational(sol, w)
        v0 = arc_ends_at_vertex(fld, 0)      # acute vertex: extremum
        v2 = arc_ends_at_vertex(fld, 2)      # obtuse vertex: not an extremum
        assert v0.verdict is True
        assert v2.verdict is False

    def test_right_angle_falls_back_to_geometric(self):
        sol = cos_mode_solution()
        v = arc_ends_at_vertex(ScalarField.directional(sol, 0.3), 0)
        assert v.method == "geometric"
        assert "pi/2" in v.notes


class TestAnalyticVerdict:
    def test_reflex_interval(self):
        # beta > pi: interval [pi/2, beta - pi/2]
        beta = 4 * math.pi / 3
        sol = sector_solution(beta, [0.5, 1.0], extent=0.8)
        exp_fit = None
        from hotspots.bessel import fit_sector_coefficients
        exp_fit = fit_sector_coefficients(sol.eval, sol.mu, [0, 0], 0.0, beta,
                                          0.02, 0.2)
        v, margin, near, note = analytic_arc_verdict(exp_fit, psi_local=0.6 * math.pi)
        assert v is True
        v2, *_ = analytic_arc_verdict(exp_fit, psi_local=0.1)
        assert v2 is False

    def test_near_boundary_flagged(self):
        beta = math.pi / 3
        sol = sector_solution(beta, [1.0])
        from hotspots.bessel import fit_sector_coefficients
        exp_fit = fit_sector_coefficients(sol.eval, sol.mu, [0, 0], 0.0, beta,
                                          0.05, 0.4)
        v, margin, near, note = analytic_arc_verdict(exp_fit,
                                                     psi_local=math.pi / 2 + 0.01)
        assert near is True and abs(margin) <= 0.05
