#!/usr/bin/env python3
"""The breaking experiment: chasing an index -1 point past an obtuse vertex.

Take an isosceles triangle with apex below 60 degrees: its eigenfunction has
three vertex extrema and one index -1 saddle at the base midpoint.  Breaking
the base at a moving point w_t (with amplitude eps sin(pi t)) produces a
family of convex quadrilaterals whose obtuse vertex sweeps past the saddle.
An index -1 point cannot sit at a vertex with angle in (pi/2, pi), so the
saddle is blocked: watch it disappear into the obtuse vertex (the c1 ratio
there collapses) and reappear on the other side.
"""
import math

from hotspots import isosceles_triangle, breaking_experiment

T = isosceles_triangle(math.radians(50))
rep = breaking_experiment(T, eps_rel=0.01, steps=8, h=lambda P: P.diameter / 20)

print("N-membership evidence:", {k: (round(v, 5) if isinstance(v, float) else v)
                                 for k, v in rep.membership.evidence.items()})
print(f"\nbranch: {rep.branch}")
print(f"blocking window bracket: {rep.window}")
print(f"eps used: {rep.eps:.4f}\n")
print(" t      -1 point   c1 ratio at w   hypotheses (1)(2)(3)")
for c in rep.conditions:
    lead = c["w_leading_ratio"]
    print(f" {c['t']:.3f}  {str(c['minus_one_side']):9s}  "
          f"{lead if lead is None else round(lead, 5)!s:14s} "
          f"{c['no_interior']} {c['nonzero_on_break_sides']} {c['acute_extrema']}")
print("\nevents:")
for e in rep.events:
    print(f"  [{e.t_lo:.3f}, {e.t_hi:.3f}] {e.kind}: {e.detail[:70]}")
