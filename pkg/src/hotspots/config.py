"""Central defaults for tolerances and discretization knobs.

Every threshold that a verdict depends on lives here so that runs are
reproducible from a config record alone.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class Defaults:
    # geometry
    eps_geom: float = 1e-9          # minimum vertex separation, relative to diameter
    tau_orth: float = 1e-9          # |n_i . n_j| below this counts as orthogonal sides
    angle_tol: float = 1e-9         # tolerance when comparing angles to pi/2 multiples
    lip1_tol: float = 1e-12         # slack in the normal-vector dot-product criterion

    # meshing
    mesh_quality_min_angle: float = 20.0   # degrees
    mesh_seed: int = 0
    mesh_relax_iters: int = 60

    # eigensolver
    solver_tol: float = 1e-10
    solver_maxiter: int = 500
    degenerate_gap: float = 1e-4    # relative gap below which a 2-dim basis is returned

    # vertex expansions
    bessel_K: int = 4
    annulus_inner: float = 0.05     # fraction of distance to nearest non-adjacent side
    annulus_outer: float = 0.25
    fit_n_theta: int = 24
    fit_n_radii: int = 12
    vanish_threshold: float = 1e-3  # relative magnitude below which a coefficient "vanishes"

    # nodal tracing
    trace_resolution: int = 256
    trace_max_depth: int = 3
    side_zero_rtol: float = 5e-3    # max |field| on a side below this * scale => side lies in Z
    psi_boundary_band: float = 0.05  # rad; verdicts inside the band report raw margin

    # critical points
    probe_radius_factor: float = 3.0   # probe radius = factor * local mesh size
    probe_samples: int = 360
    sign_band_frac: float = 0.02       # |value| below band * max => suppressed in sign counting
    grad_zero_rtol: float = 2e-2       # |grad u(p)| below this * max|grad u| accepts a zero
    interior_scan_grid: int = 96
    degenerate_collinear_count: int = 10

    # continuation
    track_steps: int = 64
    track_max_halvings: int = 5
    gap_floor: float = 1e-5
    match_radius_factor: float = 5.0   # critical-point matching radius = factor * h
    w_margin: float = 0.1              # break-point path keeps this * |e| away from p

    # nodal arc / grad floor along Z(u)
    grad_floor_rel: float = 1e-3       # floor = rel * sqrt(mu) * max|u|

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULTS = Defaults()
