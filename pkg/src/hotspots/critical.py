"""Critical points of the eigenfunction and their Poincare-Hopf indices.

A point p gets index 1 - n/2 (interior) or 1 - n (boundary), where n counts
the level-set arcs of u through u(p) that emanate from p.  The count is
measured by sign changes of u - u(p) on probe circles at two radii, which
must agree for the index to be accepted.  Vertices are always examined and
classified independently through their fitted vertex expansions: with k the
smallest positive mode index whose coefficient does not vanish,

    u(v) = 0 or beta > k pi/2   ->  ind = 1 - k
    u(v) != 0 and beta < k pi/2 ->  ind = 1
    beta = k pi/2               ->  decided by |a|, a = c0 g0'(0) / (c_k g_2(0)),

and the probe count cross-checks the expansion route wherever both resolve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .config import DEFAULTS
from . import bessel as _bessel


@dataclass
class CriticalPoint:
    location: np.ndarray
    locus: tuple | str                 # 'interior' | ('side', i) | ('vertex', i)
    index: int | None                  # None = unresolved
    is_extremum: bool
    diagnostics: dict = dc_field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.locus if isinstance(self.locus, str) else self.locus[0]

    def to_dict(self) -> dict:
        return {"location": [float(self.location[0]), float(self.location[1])],
                "locus": list(self.locus) if isinstance(self.locus, tuple) else self.locus,
                "index": self.index, "is_extremum": self.is_extremum,
                "diagnostics": {k: v for k, v in self.diagnostics.items()
                                if isinstance(v, (int, float, str, bool, list))}}


@dataclass
class DegenerateLocus:
    kind: str                          # 'side' | 'line'
    description: str
    points: np.ndarray


@dataclass
class CriticalSet:
    points: list[CriticalPoint]
    vertex_table: dict                 # vid -> {'expansion', 'index', 'note', ...}
    degenerate_loci: list[DegenerateLocus] = dc_field(default_factory=list)
    notes: list[str] = dc_field(default_factory=list)

    @property
    def degenerate(self) -> bool:
        return len(self.degenerate_loci) > 0

    def nonzero_index_points(self) -> list[CriticalPoint]:
        return [p for p in self.points if p.index not in (None, 0)]

    def unresolved_points(self) -> list[CriticalPoint]:
        return [p for p in self.points if p.index is None]

    def by_kind(self, kind: str) -> list[CriticalPoint]:
        return [p for p in self.points if p.kind == kind]

    @property
    def S(self) -> int:
        """Number of nonzero-index critical points."""
        return len(self.nonzero_index_points())

    def to_dict(self) -> dict:
        return {"points": [p.to_dict() for p in self.points],
                "degenerate": self.degenerate,
                "notes": list(self.notes),
                "vertex_table": {str(k): {kk: vv for kk, vv in v.items() if kk != "expansion"}
                                 for k, v in self.vertex_table.items()}}


# ---------------------------------------------------------------------------
# probe-circle arc counting
# ---------------------------------------------------------------------------

def _count_sign_changes(vals: np.ndarray, *, cyclic: bool, band: float) -> int | None:
    ok = np.isfinite(vals)
    v = vals[ok]
    if len(v) < 8:
        return None
    keep = np.abs(v) > band
    s = np.sign(v[keep])
    if len(s) == 0:
        return None
    # collapse runs
    runs = s[np.concatenate([[True], s[1:] != s[:-1]])]
    changes = len(runs) - 1
    if cyclic and len(runs) >= 1 and runs[0] != runs[-1]:
        changes += 1
    return int(changes)


def _arc_points(p, r, phi0, phi1, m):
    phis = np.linspace(phi0, phi1, m)
    return p[None, :] + r * np.column_stack([np.cos(phis), np.sin(phis)])


@dataclass
class IndexResult:
    index: int | None
    n_arcs: int | None
    counts: list
    radii: list
    note: str = ""


def _probe_index(sol, p, locus, *, radii=None, m=None) -> IndexResult:
    """Arc count on two probe radii; locus decides the arc span and formula."""
    P = sol.polygon
    p = np.asarray(p, dtype=float)
    if m is None:
        m = DEFAULTS.probe_samples
    h = float(sol.h_at(p[None, :])[0])
    if radii is None:
        r1 = DEFAULTS.probe_radius_factor * h
        bd = float(P.boundary_distance(p[None, :])[0])
        if locus == "interior" or locus[0] == "interior":
            r1 = min(r1, 0.7 * bd)
        elif locus[0] == "side":
            i = locus[1]
            others = [P.distance_to_side(p, j) for j in range(P.n) if j != i]
            vdist = [np.linalg.norm(p - P.vertices[k]) for k in range(P.n)]
            r1 = min(r1, 0.7 * min(others), 0.45 * min(vdist))
        else:  # vertex
            vid = locus[1]
            r1 = min(r1, 0.5 * _bessel.annulus_reference(P, vid))
        radii = [r1, 0.5 * r1]

    u0 = float(sol.eval(p[None, :], strict=False)[0])
    counts = []
    for r in radii:
        if locus == "interior":
            pts = _arc_points(p, r, 0.0, 2 * math.pi, m + 1)[:-1]
            vals = sol.eval(pts, strict=False) - u0
            band = DEFAULTS.sign_band_frac * np.nanmax(np.abs(vals)) if np.any(np.isfinite(vals)) else 0
            counts.append(_count_sign_changes(vals, cyclic=True, band=band))
        else:
            if locus[0] == "side":
                # semicircle from +tangent through the interior to -tangent
                i = locus[1]
                t = P.side_tangents[i]
                phi_t = math.atan2(t[1], t[0])
                phis = np.linspace(phi_t, phi_t + math.pi, max(m // 2, 90))
                pts = p[None, :] + r * np.column_stack([np.cos(phis), np.sin(phis)])
            else:
                vid = locus[1]
                apex, alpha, beta = P.vertex_frame(vid)
                phis = np.linspace(alpha, alpha + beta, max(m // 2, 90))
                pts = p[None, :] + r * np.column_stack([np.cos(phis), np.sin(phis)])
            vals = sol.eval(pts, strict=False) - u0
            band = DEFAULTS.sign_band_frac * np.nanmax(np.abs(vals)) if np.any(np.isfinite(vals)) else 0
            counts.append(_count_sign_changes(vals, cyclic=False, band=band))

    if any(c is None for c in counts):
        return IndexResult(None, None, counts, list(radii), "probe failed")
    if counts[0] != counts[1]:
        return IndexResult(None, None, counts, list(radii), "radius disagreement")
    n = counts[0]
    if locus == "interior":
        if n % 2 == 1:
            return IndexResult(None, n, counts, list(radii), "odd interior arc count")
        idx = 1 - n // 2
    else:
        idx = 1 - n
    return IndexResult(idx, n, counts, list(radii))


def index_of(sol, p, locus="interior", *, radii=None) -> IndexResult:
    """Poincare-Hopf index of an isolated critical point by probe-circle counts."""
    return _probe_index(sol, p, locus, radii=radii)


# ---------------------------------------------------------------------------
# vertex classification through the expansion
# ---------------------------------------------------------------------------

def classify_vertex(sol, vid: int, *, expansion=None,
                    threshold: float | None = None,
                    probe_radii=None, composite: bool = False) -> dict:
    """Vertex index from the fitted expansion, with the probe cross-check.

    When probe and expansion give different resolved answers, the probe wins:
    it measures the total index of everything inside the probe disk, which is
    the quantity that is stable at mesh resolution (unresolvably close side
    structure gets absorbed into the vertex count).  The expansion-route
    index is kept in the diagnostics.
    """
    if threshold is None:
        threshold = DEFAULTS.vanish_threshold
    P = sol.polygon
    vid = vid % P.n
    if expansion is None:
        expansion = _bessel.fit_coefficients(sol, vid)
    beta = expansion.beta
    mags = expansion.magnitudes()
    sig0 = mags[0] > threshold
    k = expansion.smallest_nonvanishing_k(threshold)
    note = ""
    unresolved = False
    a_val = None
    if k is None:
        idx = 1 if sig0 else None
        note = "all c_k, k >= 1, vanish at threshold" if sig0 else \
               "all coefficients vanish at threshold"
        unresolved = idx is None
    elif not sig0:
        idx = 1 - k
        note = "u(v) = 0"
    elif abs(beta - k * math.pi / 2) <= DEFAULTS.angle_tol:
        # beta = k pi/2: decided by |a| (k nu = 2 expansion competition)
        c0 = expansion.coeffs[0]
        ck = expansion.coeffs[k]
        a_val = (c0 * _bessel.g0_prime_at_zero(expansion.mu)
                 / (ck * _bessel.g_at_zero(k * expansion.nu, expansion.mu)))
        if abs(a_val) > 1.05:
            idx = 1
        elif abs(a_val) < 0.95:
            idx = 1 - k
        else:
            idx = None
            unresolved = True
            note = f"|a| = {abs(a_val):.4f} near 1: undecidable at truncation order"
    elif beta < k * math.pi / 2:
        idx = 1
    else:
        idx = 1 - k

    probe = _probe_index(sol, P.vertices[vid], ("vertex", vid), radii=probe_radii)
    agree = (probe.index == idx) if (probe.index is not None and idx is not None) else None
    final = idx
    if probe.index is not None:
        if idx is None:
            final = probe.index
            unresolved = False
            note = (note + "; " if note else "") + "resolved by probe count"
        elif probe.index != idx:
            final = probe.index
            if composite:
                note = (note + "; " if note else "") + \
                    f"composite: probe total {probe.index} absorbs sub-resolution " \
                    f"structure (expansion index {idx})"
            else:
                note = (note + "; " if note else "") + \
                    f"probe total {probe.index} overrides expansion index {idx}"
    elif idx is None:
        unresolved = True
    return {"vertex": vid, "index": final, "expansion_index": idx, "k": k, "a": a_val,
            "expansion": expansion, "magnitudes": [float(x) for x in mags],
            "leading_ratio": None if expansion.leading_index is None
            else float(mags[expansion.leading_index]),
            "probe_index": probe.index, "probe_arcs": probe.n_arcs,
            "agree": agree, "note": note, "unresolved": unresolved}


# ---------------------------------------------------------------------------
# hessian estimate (nondegeneracy checks)
# ---------------------------------------------------------------------------

def estimate_hessian(sol, p, delta: float | None = None, side: int | None = None) -> np.ndarray:
    """Finite-difference Hessian from the element gradient.

    For a point on side ``side`` the estimate is one-sided in the inward
    normal; the Neumann condition kills the mixed tangential-normal entry, so
    the Hessian is diagonal in the side frame (returned in world coordinates).
    """
    p = np.asarray(p, dtype=float)
    if delta is None:
        delta = 0.5 * float(sol.h_at(p[None, :])[0])
    if side is None:
        H = np.zeros((2, 2))
        for a, e in enumerate((np.array([delta, 0.0]), np.array([0.0, delta]))):
            gp = sol.eval_grad(p[None, :] + e, strict=False)[0]
            gm = sol.eval_grad(p[None, :] - e, strict=False)[0]
            H[:, a] = (gp - gm) / (2 * delta)
        return 0.5 * (H + H.T)
    P = sol.polygon
    t = P.side_tangents[side]
    n_in = -P.side_normals[side]
    gp = sol.eval_grad(p[None, :] + delta * t[None, :], strict=False)[0]
    gm = sol.eval_grad(p[None, :] - delta * t[None, :], strict=False)[0]
    h_tt = float((gp - gm) @ t) / (2 * delta)
    g0 = sol.eval_grad(p[None, :], strict=False)[0]
    g1 = sol.eval_grad(p[None, :] + delta * n_in[None, :], strict=False)[0]
    g2 = sol.eval_grad(p[None, :] + 2 * delta * n_in[None, :], strict=False)[0]
    h_nn = float((-3 * (g0 @ n_in) + 4 * (g1 @ n_in) - (g2 @ n_in))) / (2 * delta)
    R = np.column_stack([t, n_in])
    return R @ np.diag([h_tt, h_nn]) @ R.T


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------

def _grad_scale(sol, n: int = 48) -> float:
    P = sol.polygon
    v = P.vertices
    lo, hi = v.min(axis=0), v.max(axis=0)
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    pts = pts[P.contains(pts, include_boundary=False)]
    g = sol.eval_grad(pts, strict=False)
    gn = np.linalg.norm(g, axis=1)
    gn = gn[np.isfinite(gn)]
    return float(gn.max()) if len(gn) else 1.0


def _newton_refine(sol, p0, *, max_iter: int = 40):
    p = np.asarray(p0, dtype=float).copy()
    P = sol.polygon
    diam = P.diameter
    for _ in range(max_iter):
        g = sol.eval_grad(p[None, :], strict=False)[0]
        if not np.all(np.isfinite(g)):
            return None
        H = estimate_hessian(sol, p)
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            return None
        h = float(sol.h_at(p[None, :])[0])
        nstep = np.linalg.norm(step)
        if nstep > 2 * h:
            step *= 2 * h / nstep
        p = p + step
        if not P.contains(p[None, :])[0]:
            return None
        if nstep < 1e-13 * diam:
            break
    return p


def _side_tangential_roots(sol, i: int, *, n_samples: int, zero_rtol: float,
                           gscale: float):
    """Roots of the one-sided tangential derivative along side i."""
    P = sol.polygon
    t = P.side_tangents[i]
    L = P.side_lengths[i]
    s = np.linspace(0.0, 1.0, n_samples)
    pts = P.vertices[i][None, :] + s[:, None] * P.side_vectors[i][None, :]

    def tang(pp):
        g = sol.eval_grad(pp, strict=False)
        return g @ t

    f = tang(pts)
    ok = np.isfinite(f)
    if np.all(np.abs(f[ok]) < zero_rtol * gscale):
        return None, pts  # entire side critical: degenerate locus
    roots = []
    for k in range(n_samples - 1):
        if ok[k] and ok[k + 1] and f[k] * f[k + 1] < 0:
            a, b, fa = s[k], s[k + 1], f[k]
            for _ in range(45):
                mm = 0.5 * (a + b)
                fm = float(tang(P.vertices[i][None, :] + mm * P.side_vectors[i][None, :])[0])
                if fa * fm <= 0:
                    b = mm
                else:
                    a, fa = mm, fm
            roots.append(0.5 * (a + b))
    return roots, pts


def find_critical_points(sol, *, threshold: float | None = None,
                         scan_grid: int | None = None,
                         expansions: dict | None = None) -> CriticalSet:
    """All critical points: interior gradient zeros, side tangential zeros,
    and vertices classified through their expansions.

    Non-isolated critical behavior (a side on which the tangential derivative
    vanishes identically, or many collinear interior zeros) is reported as a
    degenerate locus instead of a point list.
    """
    if threshold is None:
        threshold = DEFAULTS.vanish_threshold
    if scan_grid is None:
        scan_grid = DEFAULTS.interior_scan_grid
    P = sol.polygon
    gscale = _grad_scale(sol)
    points: list[CriticalPoint] = []
    degenerate: list[DegenerateLocus] = []
    notes: list[str] = []
    absorbed: dict[int, list[float]] = {}   # vid -> distances of absorbed roots

    # sides first: vertex probes adapt to nearby side structure
    for i in range(P.n):
        L = P.side_lengths[i]
        h_side = float(np.min(sol.h_at(
            P.vertices[i][None, :] + np.linspace(0.1, 0.9, 9)[:, None] * P.side_vectors[i][None, :])))
        n_samples = int(np.clip(4 * L / h_side, 128, 1200))
        roots, pts = _side_tangential_roots(sol, i, n_samples=n_samples,
                                            zero_rtol=DEFAULTS.grad_zero_rtol,
                                            gscale=gscale)
        if roots is None:
            degenerate.append(DegenerateLocus("side", f"tangential derivative vanishes on side {i}",
                                              pts))
            notes.append(f"side {i}: non-isolated critical locus (rectangle-like degenerate)")
            continue
        for r in roots:
            p = P.vertices[i] + r * P.side_vectors[i]
            hloc = float(sol.h_at(p[None, :])[0])
            dists = [np.linalg.norm(p - P.vertices[k]) for k in range(P.n)]
            vnear = int(np.argmin(dists))
            if dists[vnear] < 0.5 * hloc:
                continue  # sub-element: indistinguishable from the vertex itself
            if dists[vnear] < 1.2 * hloc:
                # too close to isolate from the vertex: absorbed into its probe
                absorbed.setdefault(vnear, []).append(float(dists[vnear]))
                continue
            res = _probe_index(sol, p, ("side", i))
            g = sol.eval_grad(p[None, :], strict=False)[0]
            points.append(CriticalPoint(p, ("side", i), res.index, res.index == 1,
                                        {"n_arcs": res.n_arcs, "counts": res.counts,
                                         "radii": res.radii,
                                         "grad_residual": float(np.linalg.norm(g)),
                                         "note": res.note}))

    # interior
    v = P.vertices
    lo, hi = v.min(axis=0), v.max(axis=0)
    xs = np.linspace(lo[0], hi[0], scan_grid)
    ys = np.linspace(lo[1], hi[1], scan_grid)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    gridpts = np.column_stack([X.ravel(), Y.ravel()])
    inside = P.contains(gridpts, include_boundary=False)
    bd = P.boundary_distance(gridpts)
    hloc = sol.h_at(gridpts)
    deep = inside & (bd > 0.9 * hloc)
    G = np.full((len(gridpts), 2), np.nan)
    G[deep] = sol.eval_grad_recovered(gridpts[deep], strict=False)
    GX = G[:, 0].reshape(scan_grid, scan_grid)
    GY = G[:, 1].reshape(scan_grid, scan_grid)

    def cell_mixed(A):
        c = np.stack([A[:-1, :-1], A[1:, :-1], A[1:, 1:], A[:-1, 1:]])
        fin = np.all(np.isfinite(c), axis=0)
        return fin & ~(np.all(c > 0, axis=0) | np.all(c < 0, axis=0))

    seeds_mask = cell_mixed(GX) & cell_mixed(GY)
    si, sj = np.nonzero(seeds_mask)
    seeds = np.column_stack([0.5 * (xs[si] + xs[si + 1]), 0.5 * (ys[sj] + ys[sj + 1])])

    found: list[np.ndarray] = []
    for s0 in seeds:
        p = _newton_refine(sol, s0)
        if p is None:
            continue
        g = sol.eval_grad(p[None, :], strict=False)[0]
        if not np.all(np.isfinite(g)) or np.linalg.norm(g) > DEFAULTS.grad_zero_rtol * gscale:
            continue
        hp = float(sol.h_at(p[None, :])[0])
        if float(P.boundary_distance(p[None, :])[0]) < 1.2 * hp:
            continue  # boundary zone is handled by side/vertex detection
        vdists = np.linalg.norm(p - P.vertices, axis=1)
        if vdists.min() < 1.2 * hp:
            absorbed.setdefault(int(np.argmin(vdists)), []).append(float(vdists.min()))
            continue
        if any(np.linalg.norm(p - q) < max(hp, 1e-9) for q in found):
            continue
        found.append(p)

    if len(found) >= DEFAULTS.degenerate_collinear_count:
        (pmain, resid) = _principal_line(np.array(found))
        if resid < 1e-3 * P.diameter:
            degenerate.append(DegenerateLocus("line", "collinear interior critical samples",
                                              np.array(found)))
            notes.append("interior: non-isolated critical locus (rectangle-like degenerate)")
            found = []

    for p in found:
        res = _probe_index(sol, p, "interior")
        g = sol.eval_grad(p[None, :], strict=False)[0]
        points.append(CriticalPoint(p, "interior", res.index, res.index == 1,
                                    {"n_arcs": res.n_arcs, "counts": res.counts,
                                     "radii": res.radii,
                                     "grad_residual": float(np.linalg.norm(g)),
                                     "note": res.note}))

    # vertices last: probe radii adapt to the detected structure nearby
    vertex_table = {}
    for vid in range(P.n):
        vpt = P.vertices[vid]
        hv = float(sol.h_at(vpt[None, :])[0])
        d_struct = min((float(np.linalg.norm(cp.location - vpt)) for cp in points),
                       default=np.inf)
        radii = None
        composite = vid in absorbed
        if composite:
            # both radii must also clear the level-arc return point (~2d)
            d_abs = max(absorbed[vid])
            r1 = max(3.3 * hv, 2.8 * d_abs)
            radii = [r1, max(2.5 * hv, 2.2 * d_abs)]
        elif d_struct < 3.5 * hv:
            # isolate the vertex below the nearest detected structure
            radii = [0.7 * d_struct, 0.35 * d_struct]
        if radii is not None:
            r_cap = 0.5 * _bessel.annulus_reference(P, vid)
            radii = [min(r, r_cap) for r in radii]
        exp = None if expansions is None else expansions.get(vid)
        try:
            info = classify_vertex(sol, vid, expansion=exp, threshold=threshold,
                                   probe_radii=radii, composite=composite)
        except _bessel.FitError as e:
            info = {"vertex": vid, "index": None, "unresolved": True,
                    "note": f"fit failed: {e}", "expansion": None,
                    "leading_ratio": None}
        if composite:
            info["absorbed_distances"] = absorbed[vid]
        vertex_table[vid] = info
        idx = info.get("index")
        if idx is None and info.get("unresolved"):
            points.append(CriticalPoint(vpt.copy(), ("vertex", vid), None,
                                        False, {"note": info.get("note", "")}))
        elif idx is not None and idx != 0:
            points.append(CriticalPoint(vpt.copy(), ("vertex", vid), idx,
                                        idx == 1,
                                        {"k": info.get("k"),
                                         "leading_ratio": info.get("leading_ratio"),
                                         "probe_index": info.get("probe_index"),
                                         "agree": info.get("agree"),
                                         "note": info.get("note", "")}))

    return CriticalSet(points=points, vertex_table=vertex_table,
                       degenerate_loci=degenerate, notes=notes)


def _principal_line(pts: np.ndarray):
    c = pts.mean(axis=0)
    d = pts - c
    _, sv, Vt = np.linalg.svd(d, full_matrices=False)
    resid = sv[1] / math.sqrt(len(pts)) if len(sv) > 1 else 0.0
    return (c, Vt[0]), float(resid)


# ---------------------------------------------------------------------------
# index formula
# ---------------------------------------------------------------------------

@dataclass
class IndexFormulaReport:
    lhs: int
    rhs: int | None
    passed: bool | None               # None = inconclusive
    terms: dict
    unresolved: int
    degenerate: bool

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "passed": self.passed,
                "terms": self.terms, "unresolved": self.unresolved,
                "degenerate": self.degenerate}


def verify_index_formula(sol, cset: CriticalSet | None = None) -> IndexFormulaReport:
    """Check 2*chi(P) = sum_interior 2*ind + sum_boundary ind (chi = 1)."""
    if cset is None:
        cset = find_critical_points(sol)
    if cset.degenerate:
        return IndexFormulaReport(2, None, None, {}, 0, True)
    unresolved = len(cset.unresolved_points())
    if unresolved:
        return IndexFormulaReport(2, None, None, {}, unresolved, False)
    interior = sum(p.index for p in cset.points if p.kind == "interior")
    boundary = sum(p.index for p in cset.points if p.kind != "interior")
    rhs = 2 * interior + boundary
    terms = {"interior_sum": interior, "boundary_sum": boundary,
             "n_interior": len(cset.by_kind("interior")),
             "n_side": len(cset.by_kind("side")),
             "n_vertex": len(cset.by_kind("vertex"))}
    return IndexFormulaReport(2, rhs, rhs == 2, terms, 0, False)


# ---------------------------------------------------------------------------
# index-zero cusp diagnostic
# ---------------------------------------------------------------------------

@dataclass
class CuspDiagnostic:
    tangent_cusp: bool
    k: int | None
    slope_estimate: float
    transverse_coeff: float
    sign_change: bool
    note: str = ""


def cusp_diagnostic(sol, cp: CriticalPoint, *, r_max: float | None = None) -> CuspDiagnostic:
    """Fit the normal-form behavior u - u(p) ~ c (y^2 - x^k rho(x)) at an
    index-zero side critical point: quadratic transversally, odd-order sign
    change along the side, level set a cusp tangent to the side."""
    if not (isinstance(cp.locus, tuple) and cp.locus[0] == "side"):
        raise ValueError("cusp diagnostic applies to side-interior critical points")
    if cp.index != 0:
        raise ValueError(f"cusp diagnostic requires index 0, got {cp.index}")
    P = sol.polygon
    i = cp.locus[1]
    t = P.side_tangents[i]
    n_in = -P.side_normals[i]
    p = cp.location
    h = float(sol.h_at(p[None, :])[0])
    if r_max is None:
        others = [P.distance_to_side(p, j) for j in range(P.n) if j != i]
        vdist = [np.linalg.norm(p - P.vertices[k]) for k in range(P.n)]
        r_max = min(0.5 * min(others), 0.5 * min(vdist))
    u0 = float(sol.eval(p[None, :], strict=False)[0])

    # transverse: u(p + y n) - u0 ~ c y^2
    yy = np.linspace(0.35 * h, min(3 * h, 0.9 * r_max), 12)
    tv = sol.eval(p[None, :] + yy[:, None] * n_in[None, :], strict=False) - u0
    A = np.column_stack([yy ** 2])
    c_fit, *_ = np.linalg.lstsq(A, tv, rcond=None)
    c_est = float(c_fit[0])
    tres = float(np.linalg.norm(tv - A @ c_fit) / max(np.linalg.norm(tv), 1e-300))

    # along the side: log|f| vs log|x| slope on both sides
    xx = np.geomspace(max(h, 0.02 * r_max), r_max, 14)
    slopes = []
    fvals = {}
    for sgn in (+1, -1):
        f = sol.eval(p[None, :] + sgn * xx[:, None] * t[None, :], strict=False) - u0
        fvals[sgn] = f
        ok = np.isfinite(f) & (np.abs(f) > 1e-14 * abs(u0 + 1e-300))
        if np.sum(ok) >= 5:
            sl = np.polyfit(np.log(xx[ok]), np.log(np.abs(f[ok])), 1)[0]
            slopes.append(sl)
    slope = float(np.mean(slopes)) if slopes else float("nan")
    sign_change = bool(np.isfinite(fvals[+1][-1]) and np.isfinite(fvals[-1][-1])
                       and fvals[+1][-1] * fvals[-1][-1] < 0)

    k_round = int(round(slope)) if np.isfinite(slope) else None
    if k_round is not None and k_round % 2 == 0:
        k_round = k_round + 1 if slope > k_round else k_round - 1
    ok_k = (k_round is not None and k_round >= 3 and abs(slope - k_round) < 0.6)
    tangent = bool(sign_change and ok_k and tres < 0.2 and c_est != 0.0)
    note = "" if tangent else f"slope {slope:.2f}, sign_change={sign_change}, tres={tres:.2g}"
    return CuspDiagnostic(tangent_cusp=tangent, k=k_round if ok_k else None,
                          slope_estimate=slope, transverse_coeff=c_est,
                          sign_change=sign_change, note=note)
