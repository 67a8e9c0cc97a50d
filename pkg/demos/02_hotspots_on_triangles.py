#!/usr/bin/env python3
"""Critical points and their indices on triangles.

An obtuse triangle carries exactly two critical points, the acute vertices
(the global hot and cold spots).  A sub-equilateral isosceles triangle adds
an index -1 saddle at the base midpoint.  Both configurations satisfy the
index identity  sum_interior 2*ind + sum_boundary ind = 2.
"""
import math
import os

import numpy as np

from hotspots import (triangle_from_angles, isosceles_triangle, triangulate,
                      solve_second, find_critical_points, verify_index_formula)
from hotspots.report import SvgScene

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)


def show(name, T, fname):
    sol = solve_second(triangulate(T, T.diameter / 30))
    cs = find_critical_points(sol)
    print(f"\n{name} (angles {np.round(np.degrees(T.angles), 1)}):")
    for p in cs.points:
        print(f"  {str(p.locus):14s} index {p.index:+d}  extremum={p.is_extremum}  "
              f"at {np.round(p.location, 4)}")
    rep = verify_index_formula(sol, cs)
    print(f"  index identity: {rep.terms['interior_sum']}*2 + {rep.terms['boundary_sum']} "
          f"= {rep.rhs}  (expected 2, passed={rep.passed})")
    scene = SvgScene(T)
    scene.add_critical_set(cs)
    scene.write(os.path.join(OUT, fname))
    print("  wrote", os.path.join(OUT, fname))


show("obtuse triangle", triangle_from_angles(math.radians(30), math.radians(35)),
     "obtuse_critical.svg")
show("isosceles, apex 50 deg", isosceles_triangle(math.radians(50)),
     "isosceles_critical.svg")
