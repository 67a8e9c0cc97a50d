#!/usr/bin/env python3
"""Lip-1 polygons: classification and reduction to an obtuse triangle.

A polygon is isometric to a Lip-1 domain exactly when its outward normals
admit a contiguous bipartition with nonnegative dot products inside each
class and nonpositive across.  Such polygons (without orthogonal sides)
reduce to an obtuse triangle by collapsing same-class corners, and their
eigenfunction has exactly two critical points, the acute vertices.
"""
import math

import numpy as np

from hotspots import (Polygon, unit_square, equilateral_triangle,
                      triangle_from_angles, break_triangle,
                      lip1_classify, lip1_reduction_path, lip1_no_hotspots)

gallery = [
    ("equilateral triangle", equilateral_triangle()),
    ("right triangle", Polygon([[0, 0], [1, 0], [0, 1]])),
    ("obtuse triangle", triangle_from_angles(math.radians(30), math.radians(40))),
    ("unit square", unit_square()),
]
T = triangle_from_angles(math.radians(30), math.radians(40))
Q = break_triangle(T, 0, T.side_point(0, 0.5), 0.004)
gallery.append(("slightly broken obtuse triangle", Q))

for name, P in gallery:
    res = lip1_classify(P)
    tag = f"Lip-1 (partition {res.partition}, {res.partition_count} found)" \
        if res.is_lip1 else "not Lip-1"
    print(f"{name:32s} -> {tag}")

print("\nreduction of the broken triangle back to a triangle:")
path = lip1_reduction_path(Q)
for t in (0.0, 0.5, 1.0):
    Pt = path.polygon_at(t)
    print(f"  t={t:.1f}: angles {np.round(np.degrees(Pt.angles), 2)}")

print("\nfull no-hot-spots verification on the obtuse triangle:")
verdict = lip1_no_hotspots(T, steps=2, h=lambda P_: P_.diameter / 20)
print(f"  passed = {verdict.passed}; critical set = acute vertices "
      f"{verdict.acute_vertices}; S values {verdict.run.S_values()}, "
      f"V values {verdict.run.V_values()}")
