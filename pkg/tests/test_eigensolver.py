import math

import numpy as np
import pytest

from hotspots.geometry import (unit_square, rectangle, equilateral_triangle,
                               isosceles_triangle, triangle_from_angles)
from hotspots.mesh import triangulate, refine, structured_triangle_mesh
from hotspots.eigensolver import (P2Space, assemble, solve_second,
                                  AnalyticSolution, OutsideDomainError)

PI2 = math.pi ** 2


@pytest.fixture(scope="module")
def square_sol(solve_cached):
    return solve_cached(unit_square(), 0.06)


class TestAssemble:
    def test_matrix_structure(self):
        m = triangulate(unit_square(), 0.15)
        K, M = assemble(m)
        assert abs(K - K.T).max() < 1e-14
        assert abs(M - M.T).max() < 1e-14
        # constants in the stiffness kernel
        assert np.abs(K @ np.ones(K.shape[0])).max() < 1e-10
        # partition of unity: total mass = area
        assert abs(M.sum() - 1.0) < 1e-10

    def test_mass_total_on_triangle(self):
        T = triangle_from_angles(math.radians(35), math.radians(40))
        m = triangulate(T, 0.1)
        _, M = assemble(m)
        assert abs(M.sum() - T.area) < 1e-10 * T.area


class TestSolveSecond:
    def test_square_mu2(self, square_sol):
        assert abs(square_sol.mu - PI2) / PI2 < 1e-4
        assert square_sol.multiplicity_flag          # cos(pi x), cos(pi y)
        assert square_sol.residual < 1e-8

    def test_rectangle_simple(self, solve_cached):
        sol = solve_cached(rectangle(2.0, 1.0), 0.07)
        exact = PI2 / 4
        assert abs(sol.mu - exact) / exact < 1e-4
        assert not sol.multiplicity_flag
        assert sol.gap > 1.0

    def test_equilateral_multiplicity_two(self, solve_cached):
        sol = solve_cached(equilateral_triangle(), 0.04)
        exact = 16 * PI2 / 9
        assert abs(sol.mu - exact) / exact < 1e-3
        assert sol.multiplicity_flag

    def test_mean_zero(self, square_sol):
        assert abs(square_sol.integral()) < 1e-10

    def test_normalization(self, square_sol):
        assert abs(np.abs(square_sol.coef).max() - 1.0) < 1e-14

    def test_monotone_decrease_and_order(self):
        # refinement decreases mu (to tolerance) and converges at order >= 2
        m0 = triangulate(unit_square(), 0.2, seed=1)
        sols = [solve_second(m0)]
        m = m0
        for _ in range(2):
            m = refine(m)
            sols.append(solve_second(m))
        mus = [s.mu for s in sols]
        assert mus[1] <= mus[0] + 1e-10
        assert mus[2] <= mus[1] + 1e-10
        e = [abs(mu - PI2) for mu in mus]
        order = math.log2(e[0] / e[1])
        assert order >= 2.0

    def test_isosceles_symmetry(self):
        # symmetric lattice: the discrete eigenvector inherits the reflection
        T = isosceles_triangle(math.radians(50))
        m = structured_triangle_mesh(T, 40)
        sol = solve_second(m)
        rng = np.random.default_rng(0)
        w = rng.dirichlet(np.ones(3), 400)
        pts = w @ T.vertices
        mirrored = pts.copy()
        mirrored[:, 0] = 1.0 - mirrored[:, 0]
        du = np.abs(sol.eval(pts) - sol.eval(mirrored))
        assert du.max() <= 1e-6 * np.abs(sol.coef).max()


class TestEval:
    def test_eval_at_nodes_matches_coef(self, square_sol):
        space = square_sol.space
        nodes = space.mesh.nodes[:25]
        vals = square_sol.eval(nodes)
        assert np.allclose(vals, square_sol.coef[:25], atol=1e-11)

    def test_gradient_structure_of_pure_mode(self, square_sol):
        # rotate the degenerate pair onto cos(pi x): grad = (-pi sin(pi x), 0)
        sol = square_sol.select_from_pair(lambda p: np.cos(math.pi * p[:, 0]))
        pts = np.column_stack([np.full(9, 0.5), np.linspace(0.1, 0.9, 9)])
        g = sol.eval_grad(pts)
        assert np.abs(g[:, 1]).max() < 5e-3          # y-component vanishes
        assert np.abs(g[:, 0] + math.pi).max() < 5e-2

    def test_recovered_gradient_is_continuous_estimate(self, square_sol):
        pts = np.random.default_rng(1).random((50, 2)) * 0.8 + 0.1
        raw = square_sol.eval_grad(pts)
        rec = square_sol.eval_grad_recovered(pts)
        assert np.abs(raw - rec).max() < 5e-2

    def test_outside_point_raises(self, square_sol):
        with pytest.raises(OutsideDomainError):
            square_sol.eval(np.array([[2.0, 2.0]]))

    def test_quadrature_mean_zero(self, square_sol):
        # restating the integral invariant through the mass matrix
        _, M = square_sol.space.matrices
        assert abs(np.ones(square_sol.space.ndof) @ (M @ square_sol.coef)) < 1e-10


class TestPairSelection:
    def test_select_from_pair_square(self, square_sol):
        assert square_sol.neighbor_coef is not None
        solx = square_sol.select_from_pair(lambda p: np.cos(math.pi * p[:, 0]))
        pts = np.random.default_rng(2).random((200, 2))
        err = np.abs(solx.eval(pts) - np.cos(math.pi * pts[:, 0])).max()
        assert err < 1e-3

    def test_align_sign(self, square_sol):
        flipped = square_sol.with_coef(-square_sol.coef)
        fixed = flipped.align_sign_with(square_sol)
        assert float(fixed.coef @ square_sol.coef) > 0


class TestAnalyticSolution:
    def test_interface(self):
        P = unit_square()
        sol = AnalyticSolution(P, PI2, lambda p: np.cos(math.pi * p[:, 0]),
                               lambda p: np.column_stack([-math.pi * np.sin(math.pi * p[:, 0]),
                                                          np.zeros(len(p))]))
        assert abs(sol.eval(np.array([[0.25, 0.5]]))[0] - math.cos(math.pi / 4)) < 1e-15
        g = sol.eval_grad(np.array([[0.25, 0.5]]))[0]
        assert abs(g[0] + math.pi * math.sin(math.pi / 4)) < 1e-15
        assert sol.scale <= 1.0 + 1e-12
