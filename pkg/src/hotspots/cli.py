"""Configuration-driven command line entry point.

Commands: solve, critical, nodal, lip1, path, break, verify-index.  Every
run writes report.json (and optional SVGs) into the output directory; errors
produce error.json and a nonzero exit status.

Spec file formats (JSON):
  polygon: {"vertices": [[x, y], ...], "labels": [...]}
  path:    {"kind": "vertex-lerp", "from": [[x, y], ...], "to": [[x, y], ...]}
           {"kind": "breaking", "triangle": [[x, y], ...], "side": 0,
            "w0": 0.3, "w1": 0.7, "eps": 0.01}
           {"kind": "lip1-reduction", "polygon": [[x, y], ...]}
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULTS
from .geometry import (Polygon, DeformationPath, GeometryError,
                       lip1_classify, lip1_reduction_path, orthogonal_side_pairs,
                       breaking_family)
from .mesh import triangulate, MeshingError
from .eigensolver import solve_second, SolverError
from .bessel import fit_coefficients, FitError
from .nodal import ScalarField, trace
from .critical import find_critical_points, verify_index_formula
from .continuation import track, breaking_experiment
from .report import write_report, to_jsonable, SvgScene

COMMANDS = ("solve", "critical", "nodal", "lip1", "path", "break", "verify-index")


@dataclass
class RunConfig:
    command: str
    spec: str
    h: float = 0.05
    tol: float = DEFAULTS.solver_tol
    out: str = "hotspots-out"
    svg: bool = False
    steps: int = 12
    seed: int = 0
    K: int = DEFAULTS.bessel_K
    field: str = "u"
    resolution: int = DEFAULTS.trace_resolution
    eps: float = 0.01
    dump_mesh: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise ValueError(f"command must be one of {COMMANDS}")
        for name in ("h", "tol", "eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.steps <= 0 or self.resolution <= 0 or self.K < 0:
            raise ValueError("steps, resolution and K must be positive")


def _load_json(path):
    with open(path) as f:
        return json.load(f)


def _load_polygon(path) -> Polygon:
    return Polygon.from_dict(_load_json(path))


def _load_path(path) -> DeformationPath:
    d = _load_json(path)
    kind = d.get("kind")
    if kind == "vertex-lerp":
        return DeformationPath.from_breakpoints(
            "vertex-lerp", [0.0, 1.0],
            [np.asarray(d["from"], dtype=float), np.asarray(d["to"], dtype=float)])
    if kind == "breaking":
        T = Polygon(d["triangle"])
        e = int(d["side"])
        a, sv = T.vertices[e], T.side_vectors[e]
        w0 = a + float(d["w0"]) * sv
        w1 = a + float(d["w1"]) * sv
        return breaking_family(T, e, (w0, w1), float(d["eps"]) * T.side_lengths[e])
    if kind == "lip1-reduction":
        return lip1_reduction_path(Polygon(d["polygon"]))
    raise ValueError(f"unknown path kind {kind!r}")


def _parse_field(sol, spec: str) -> ScalarField:
    if spec == "u":
        return ScalarField.u(sol)
    if spec.startswith("L:"):
        return ScalarField.directional(sol, math.radians(float(spec[2:])))
    if spec.startswith("side:"):
        return ScalarField.side_directional(sol, int(spec[5:]))
    if spec.startswith("R:"):
        x, y = (float(v) for v in spec[2:].split(","))
        return ScalarField.rotational(sol, (x, y))
    raise ValueError("field must be 'u', 'L:<deg>', 'side:<i>' or 'R:<x>,<y>'")


def _solve(cfg: RunConfig, P: Polygon):
    mesh = triangulate(P, cfg.h, seed=cfg.seed)
    sol = solve_second(mesh, tol=cfg.tol)
    return mesh, sol


def run(cfg: RunConfig) -> int:
    """Execute one command; writes report.json (+ SVGs) into cfg.out."""
    cfg.validate()
    os.makedirs(cfg.out, exist_ok=True)
    payload = {"command": cfg.command, "config": to_jsonable(vars(cfg))}

    if cfg.command == "lip1":
        P = _load_polygon(cfg.spec)
        res = lip1_classify(P)
        payload["polygon"] = P.to_dict()
        payload["is_lip1"] = res.is_lip1
        payload["partition"] = res.partition
        payload["partition_count"] = res.partition_count
        payload["orthogonal_side_pairs"] = orthogonal_side_pairs(P)
        if res.is_lip1 and not orthogonal_side_pairs(P):
            try:
                path = lip1_reduction_path(P)
                payload["reduction_legs"] = path.params.get("n_legs")
            except GeometryError as e:
                payload["reduction_error"] = str(e)

    elif cfg.command == "solve":
        P = _load_polygon(cfg.spec)
        mesh, sol = _solve(cfg, P)
        payload["polygon"] = P.to_dict()
        payload["mesh"] = {"n_nodes": mesh.n_nodes, "n_triangles": mesh.n_triangles,
                           "min_angle_deg": mesh.min_angle()}
        payload["mu"] = sol.mu
        payload["gap"] = sol.gap
        payload["multiplicity_2_flag"] = sol.multiplicity_flag
        payload["solver"] = sol.diagnostics
        payload["vertex_expansions"] = [fit_coefficients(sol, i, K=cfg.K).to_dict()
                                        for i in range(P.n)]
        if cfg.dump_mesh:
            write_report(os.path.join(cfg.out, "mesh.json"), mesh.to_dict())

    elif cfg.command in ("critical", "verify-index"):
        P = _load_polygon(cfg.spec)
        mesh, sol = _solve(cfg, P)
        cset = find_critical_points(sol)
        payload["mu"] = sol.mu
        payload["critical"] = cset.to_dict()
        rep = verify_index_formula(sol, cset)
        payload["index_formula"] = rep.to_dict()
        if cfg.svg:
            scene = SvgScene(P)
            scene.add_critical_set(cset)
            scene.write(os.path.join(cfg.out, "critical.svg"))
        if cfg.command == "verify-index" and rep.passed is False:
            payload["error"] = "index formula violated"

    elif cfg.command == "nodal":
        P = _load_polygon(cfg.spec)
        mesh, sol = _solve(cfg, P)
        fld = _parse_field(sol, cfg.field)
        g = trace(fld, resolution=cfg.resolution)
        payload["mu"] = sol.mu
        payload["graph"] = g.to_dict()
        payload["simple_arc"] = g.simple_arc_report() if cfg.field == "u" else None
        if cfg.svg:
            scene = SvgScene(P)
            scene.add_nodal_graph(g)
            scene.write(os.path.join(cfg.out, "nodal.svg"))

    elif cfg.command == "path":
        path = _load_path(cfg.spec)
        run_ = track(path, steps=cfg.steps, h=cfg.h)
        payload["track"] = run_.to_dict()
        payload["summary"] = [{"t": s.t, "mu": s.mu, "S": s.S, "V": s.V}
                              for s in run_.samples]
        if cfg.svg:
            for k, s in enumerate(run_.samples):
                scene = SvgScene(s.polygon)
                scene.add_critical_set(s.critical)
                scene.write(os.path.join(cfg.out, f"frame_{k:03d}.svg"))

    elif cfg.command == "break":
        T = _load_polygon(cfg.spec)
        rep = breaking_experiment(T, eps_rel=cfg.eps, steps=cfg.steps,
                                  h=lambda P_: P_.diameter / max(8, round(P_.diameter / cfg.h)))
        payload["breaking"] = rep.to_dict()
        payload["summary"] = [{"t": c["t"], "minus_one_side": c["minus_one_side"],
                               "w_leading_ratio": c["w_leading_ratio"]}
                              for c in rep.conditions]

    write_report(os.path.join(cfg.out, "report.json"), payload)
    return 0 if "error" not in payload else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="hotspots",
                                 description="Second Neumann eigenfunctions on polygons: "
                                             "solve, analyze, trace, run experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--spec", required=True, help="polygon or path spec file (JSON)")
    ap.add_argument("--h", type=float, default=0.05, help="target mesh edge length")
    ap.add_argument("--tol", type=float, default=DEFAULTS.solver_tol)
    ap.add_argument("--out", default="hotspots-out")
    ap.add_argument("--svg", action="store_true", help="emit SVG plots")
    ap.add_argument("--steps", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--K", type=int, default=DEFAULTS.bessel_K)
    ap.add_argument("--field", default="u", help="nodal field: u, L:<deg>, side:<i>, R:<x>,<y>")
    ap.add_argument("--resolution", type=int, default=DEFAULTS.trace_resolution)
    ap.add_argument("--eps", type=float, default=0.01, help="relative break distance")
    ap.add_argument("--dump-mesh", action="store_true", help="write mesh.json (solve)")
    ns = ap.parse_args(argv)
    cfg = RunConfig(command=ns.command, spec=ns.spec, h=ns.h, tol=ns.tol, out=ns.out,
                    svg=ns.svg, steps=ns.steps, seed=ns.seed, K=ns.K, field=ns.field,
                    resolution=ns.resolution, eps=ns.eps, dump_mesh=ns.dump_mesh)
    try:
        return run(cfg)
    except (GeometryError, MeshingError, SolverError, FitError, ValueError,
            FileNotFoundError, json.JSONDecodeError) as e:
        os.makedirs(cfg.out, exist_ok=True)
        write_report(os.path.join(cfg.out, "error.json"),
                     {"error": type(e).__name__, "message": str(e),
                      "command": cfg.command})
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
