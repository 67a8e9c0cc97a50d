#!/usr/bin/env python3
"""Solve the second Neumann eigenproblem on simple shapes.

Computes the first nonconstant eigenpair on the unit square, a 2x1
rectangle, and the unit equilateral triangle, compares against the closed
forms, and traces the nodal line of u on the square.  SVG output lands in
demos/out/.
"""
import math
import os

import numpy as np

from hotspots import (unit_square, rectangle, equilateral_triangle,
                      triangulate, solve_second, ScalarField, trace)
from hotspots.report import SvgScene

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

cases = [
    ("unit square", unit_square(), math.pi ** 2),
    ("2x1 rectangle", rectangle(2, 1), math.pi ** 2 / 4),
    ("equilateral triangle", equilateral_triangle(), 16 * math.pi ** 2 / 9),
]

for name, P, exact in cases:
    mesh = triangulate(P, P.diameter / 30)
    sol = solve_second(mesh)
    print(f"{name:22s} mu2 = {sol.mu:.6f}  exact = {exact:.6f}  "
          f"rel err = {abs(sol.mu - exact) / exact:.1e}  "
          f"multiplicity-2 flag = {sol.multiplicity_flag}")

# the square's eigenspace is 2-dimensional; pick the cos(pi x) member and
# trace its nodal line (the vertical segment x = 1/2)
P = unit_square()
sol = solve_second(triangulate(P, 0.04))
solx = sol.select_from_pair(lambda p: np.cos(math.pi * p[:, 0]))
graph = trace(ScalarField.u(solx))
rep = graph.simple_arc_report()
print("\nnodal set of the cos(pi x) member:")
print("  simple arc:", rep["is_simple_arc"], " endpoints on sides", rep["endpoint_sides"])
pts = graph.polyline_points()
print(f"  arc x-range: [{pts[:, 0].min():.6f}, {pts[:, 0].max():.6f}] (expect 0.5)")

scene = SvgScene(P)
scene.add_nodal_graph(graph)
scene.write(os.path.join(OUT, "square_nodal_line.svg"))
print("wrote", os.path.join(OUT, "square_nodal_line.svg"))
