#!/usr/bin/env python3
"""Fourier-Bessel coefficients at polygon vertices.

Near a vertex of angle beta the eigenfunction expands in modes
J_{n pi/beta}(sqrt(mu) r) cos(n pi theta / beta).  The leading coefficient
(c0 for acute vertices, c1 for obtuse ones) decides whether a nodal arc of a
side-direction derivative field ends at the vertex, which in turn encodes
whether the vertex is an extremum.
"""
import math

import numpy as np

from hotspots import (triangle_from_angles, triangulate, solve_second,
                      fit_coefficients, leading_coefficient_test,
                      ScalarField, arc_ends_at_vertex)

T = triangle_from_angles(math.radians(30), math.radians(35))
sol = solve_second(triangulate(T, T.diameter / 30))
print("obtuse triangle, angles:", np.round(np.degrees(T.angles), 1))

for vid in range(3):
    exp = fit_coefficients(sol, vid)
    lead = leading_coefficient_test(exp)
    print(f"\nvertex {vid} (beta = {math.degrees(exp.beta):.1f} deg, "
          f"nu = {exp.nu:.3f}):")
    print("  coefficients c0..c4:", np.round(exp.coeffs, 5))
    print("  relative contributions:", np.round(exp.magnitudes(), 5),
          f" fit residual {exp.residual:.1e}")
    print(f"  leading coefficient = c{lead.leading_index}: ratio {lead.ratio:.4f} "
          f"-> {'vanishes' if lead.vanishes else 'does not vanish'}")

# at an extremum vertex no side-direction arc arrives; the rotational field
# about an interior point sends an arc exactly to the extrema
w = T.centroid
print(f"\narcs of Z(R_w u), w = centroid {np.round(w, 3)}:")
for vid in range(3):
    v = arc_ends_at_vertex(ScalarField.rotational(sol, w), vid)
    print(f"  vertex {vid}: arc ends here = {v.verdict}  "
          f"(geometric {v.geometric}, analytic {v.analytic})")
