import math

import numpy as np
import pytest

from hotspots.geometry import Polygon, unit_square, isosceles_triangle
from hotspots.mesh import (triangulate, refine, structured_triangle_mesh,
                           default_grading, MeshingError)
from hotspots.corpus import random_simple_polygon


@pytest.fixture(scope="module")
def square_mesh():
    return triangulate(unit_square(), 0.1)


class TestTriangulate:
    def test_square_edge_lengths_in_band(self, square_mesh):
        ell = square_mesh.edge_lengths()
        assert ell.min() >= 0.05 and ell.max() <= 0.2

    def test_polygon_vertices_are_nodes(self):
        T = Polygon([[0, 0], [1, 0], [0, 1]])
        m = triangulate(T, 0.5)
        for i in range(3):
            assert np.allclose(m.nodes[m.vertex_map[i]], T.vertices[i])

    def test_reflex_vertex_grading(self):
        L = Polygon([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]])
        assert abs(default_grading(L)[3] - (1 - math.pi / (1.5 * math.pi))) < 1e-12
        h = 0.1
        m = triangulate(L, h)
        rv = m.vertex_map[3]
        adj = [np.linalg.norm(m.nodes[a] - m.nodes[b])
               for a, b, s in m.boundary_edges if rv in (a, b)]
        assert min(adj) < h / 4

    def test_area_matches(self, square_mesh):
        assert abs(square_mesh.triangle_areas().sum() - 1.0) < 1e-10

    def test_boundary_nodes_on_sides(self, square_mesh):
        P = square_mesh.polygon
        for a, b, sid in square_mesh.boundary_edges:
            for nid in (a, b):
                assert P.distance_to_side(square_mesh.nodes[nid], sid) <= 1e-12 * P.diameter

    def test_quality_bound(self, square_mesh):
        assert square_mesh.min_angle() >= 20.0

    def test_quality_on_random_polygons(self):
        rng = np.random.default_rng(5)
        for _ in range(6):
            P = random_simple_polygon(rng, int(rng.integers(4, 8)))
            m = triangulate(P, P.diameter / 18)
            assert m.min_angle() >= 20.0
            assert abs(m.triangle_areas().sum() - P.area) < 1e-10 * P.area

    def test_deterministic_given_seed(self):
        P = unit_square()
        m1 = triangulate(P, 0.17, seed=4)
        m2 = triangulate(P, 0.17, seed=4)
        assert np.array_equal(m1.triangles, m2.triangles)
        assert np.allclose(m1.nodes, m2.nodes)

    def test_bad_h_rejected(self):
        with pytest.raises(MeshingError):
            triangulate(unit_square(), -0.1)


class TestRefine:
    def test_counts_and_lengths(self, square_mesh):
        m2 = refine(square_mesh)
        assert m2.n_triangles == 4 * square_mesh.n_triangles
        assert len(m2.boundary_edges) == 2 * len(square_mesh.boundary_edges)
        assert abs(m2.edge_lengths().max() - square_mesh.edge_lengths().max() / 2) < 1e-12

    def test_quality_preserved(self, square_mesh):
        m2 = refine(square_mesh)
        assert abs(m2.min_angle() - square_mesh.min_angle()) < 1e-9

    def test_area_and_boundary_invariants(self, square_mesh):
        m2 = refine(square_mesh)
        assert abs(m2.triangle_areas().sum() - 1.0) < 1e-10
        P = m2.polygon
        for a, b, sid in m2.boundary_edges:
            assert P.distance_to_side(m2.nodes[a], sid) <= 1e-12

    def test_h_at_scales(self, square_mesh):
        m2 = refine(square_mesh)
        pts = np.array([[0.5, 0.5]])
        assert abs(m2.h_at(pts)[0] - square_mesh.h_at(pts)[0] / 2) < 1e-12


class TestStructured:
    def test_symmetric_lattice(self):
        T = isosceles_triangle(math.radians(50))
        m = structured_triangle_mesh(T, 8)
        assert m.n_nodes == 45
        assert abs(m.triangle_areas().sum() - T.area) < 1e-12
        # reflection about the axis maps the node set to itself
        ref = m.nodes.copy()
        ref[:, 0] = 1.0 - ref[:, 0]
        d = np.abs(ref[:, None, :] - m.nodes[None, :, :]).sum(axis=2).min(axis=1)
        assert d.max() < 1e-12

    def test_quality_is_triangle_quality(self):
        T = isosceles_triangle(math.radians(50))
        m = structured_triangle_mesh(T, 6)
        assert abs(m.min_angle() - math.degrees(T.angles.min())) < 1e-9
