"""Conforming graded triangulation of polygons.

The algorithm is a force-equilibrium relaxation over a Delaunay
triangulation (distmesh flavor): boundary nodes are placed exactly on the
polygon sides with spacing that follows a size function graded toward
selected vertices, interior nodes start on a hexagonal lattice and relax
under repulsive edge springs.  The contract is the mesh quality bound and
the grading, not the particular algorithm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from .config import DEFAULTS
from .geometry import Polygon


class MeshingError(RuntimeError):
    pass


def _cross2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def default_grading(P: Polygon) -> np.ndarray:
    """Grading exponent per vertex: 0 for beta <= pi, 1 - pi/beta for reflex.

    Matches the r^(pi/beta) leading behavior of the eigenfunction gradient:
    only reflex corners need local refinement.
    """
    ang = P.angles
    return np.where(ang > math.pi + 1e-12, 1.0 - math.pi / ang, 0.0)


class _SizeFunction:
    """Target edge length field h * min_v clamp(r_v / diam)^g_v."""

    def __init__(self, P: Polygon, h: float, grade: np.ndarray, floor: float = 0.2):
        self.P = P
        self.h = float(h)
        self.grade = np.asarray(grade, dtype=float)
        self.diam = P.diameter
        self.floor = floor
        self._graded = np.nonzero(self.grade > 1e-12)[0]

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        s = np.full(len(pts), self.h)
        for i in self._graded:
            r = np.linalg.norm(pts - self.P.vertices[i], axis=1)
            fac = np.clip((r / self.diam) ** self.grade[i], self.floor, 1.0)
            s = np.minimum(s, self.h * fac)
        return s


@dataclass
class Mesh:
    nodes: np.ndarray                 # (N, 2)
    triangles: np.ndarray             # (M, 3) positive orientation
    boundary_edges: np.ndarray        # (B, 3): node a, node b, polygon side id
    vertex_map: np.ndarray            # polygon vertex -> node index
    polygon: Polygon
    h: float
    grade: np.ndarray
    size_fn: _SizeFunction = field(repr=False)
    level: int = 0                    # refinement level

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return 0.5 * _cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def min_angle(self) -> float:
        return float(self.triangle_min_angles().min())

    def triangle_min_angles(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        out = np.full(len(p), np.inf)
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cosang = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            out = np.minimum(out, np.degrees(np.arccos(np.clip(cosang, -1, 1))))
        return out

    def edges(self) -> np.ndarray:
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def edge_lengths(self) -> np.ndarray:
        e = self.edges()
        return np.linalg.norm(self.nodes[e[:, 0]] - self.nodes[e[:, 1]], axis=1)

    def h_at(self, points) -> np.ndarray:
        """Local target size at the given points (scaled by refinement level)."""
        return self.size_fn(points) / (2 ** self.level)

    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_edges[:, :2].ravel())

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary_edges": self.boundary_edges.tolist(),
            "vertex_map": self.vertex_map.tolist(),
            "h": self.h,
            "level": self.level,
        }


def _boundary_stations(P: Polygon, size: _SizeFunction) -> list[np.ndarray]:
    """Per side: arclength fractions (excluding endpoints) of boundary nodes."""
    out = []
    for i in range(P.n):
        a = P.vertices[i]
        sv = P.side_vectors[i]
        L = float(np.linalg.norm(sv))
        m = 512
        s = np.linspace(0.0, 1.0, m)
        pts = a[None, :] + s[:, None] * sv[None, :]
        dens = 1.0 / size(pts)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * (L / (m - 1)))])
        total = cum[-1]
        n_seg = max(1, int(round(total)))
        targets = np.arange(1, n_seg) * (total / n_seg)
        fr = np.interp(targets, cum, s)
        out.append(fr)
    return out


def _hex_seeds(P: Polygon, size: _SizeFunction, rng: np.random.Generator) -> np.ndarray:
    # seed at the finest local size and thin out where the target size is larger
    h0 = size.h * (size.floor if len(size._graded) else 1.0)
    v = P.vertices
    x0, y0 = v.min(axis=0) - h0
    x1, y1 = v.max(axis=0) + h0
    dy = h0 * math.sqrt(3) / 2
    rows = []
    j = 0
    y = y0
    while y <= y1:
        xs = np.arange(x0 + (h0 / 2 if j % 2 else 0.0), x1 + h0, h0)
        rows.append(np.column_stack([xs, np.full(len(xs), y)]))
        y += dy
        j += 1
    pts = np.vstack(rows) if rows else np.zeros((0, 2))
    if len(pts) == 0:
        return pts
    sd = P.signed_distance(pts)
    loc = size(pts)
    keep = sd < -0.55 * loc
    pts, loc = pts[keep], loc[keep]
    p_keep = (h0 / loc) ** 2
    keep = rng.random(len(pts)) < p_keep
    return pts[keep]


def _carve(P: Polygon, pts: np.ndarray, geps: float) -> np.ndarray:
    tri = Delaunay(pts)
    t = tri.simplices
    cent = pts[t].mean(axis=1)
    t = t[P.signed_distance(cent) < -geps]
    # enforce positive orientation
    p = pts[t]
    areas = 0.5 * _cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    flip = areas < 0
    t[flip] = t[flip][:, [0, 2, 1]]
    return t


def triangulate(P: Polygon, h: float, grade=None, *,
                min_angle: float | None = None, seed: int | None = None,
                relax_iters: int | None = None) -> Mesh:
    """Graded conforming triangulation with a minimum-angle quality bound."""
    if h <= 0:
        raise MeshingError("h must be positive")
    if grade is None:
        grade = default_grading(P)
    grade = np.asarray(grade, dtype=float)
    if grade.shape != (P.n,):
        raise MeshingError("grade must give one exponent per polygon vertex")
    if min_angle is None:
        min_angle = DEFAULTS.mesh_quality_min_angle
    # corner elements cannot beat the polygon's own sharpest angle; thin-wedge
    # ladders realize a fixed fraction of it
    min_angle = min(min_angle, 0.9 * math.degrees(float(P.angles.min())))
    if seed is None:
        seed = DEFAULTS.mesh_seed
    if relax_iters is None:
        relax_iters = DEFAULTS.mesh_relax_iters

    h = min(h, 0.9 * float(P.side_lengths.min()))
    size = _SizeFunction(P, h, grade)
    rng = np.random.default_rng(seed)

    stations = _boundary_stations(P, size)
    fixed_pts = [P.vertices.copy()]
    side_station_idx: list[np.ndarray] = []
    idx = P.n
    for i in range(P.n):
        fr = stations[i]
        pts = P.vertices[i][None, :] + fr[:, None] * P.side_vectors[i][None, :]
        fixed_pts.append(pts)
        side_station_idx.append(np.arange(idx, idx + len(fr)))
        idx += len(fr)
    fixed = np.vstack(fixed_pts)
    n_fixed = len(fixed)

    interior = _hex_seeds(P, size, rng)
    geps = 1e-3 * h

    def relax(pts, n_iter):
        for _ in range(n_iter):
            t = _carve(P, pts, geps)
            e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
            e.sort(axis=1)
            e = np.unique(e, axis=0)
            vec = pts[e[:, 0]] - pts[e[:, 1]]
            L = np.linalg.norm(vec, axis=1)
            mid = 0.5 * (pts[e[:, 0]] + pts[e[:, 1]])
            hbar = size(mid)
            L0 = hbar * 1.2 * math.sqrt(np.sum(L ** 2) / np.sum(hbar ** 2))
            Fmag = np.maximum(L0 - L, 0.0) / np.maximum(L, 1e-30)
            Fvec = Fmag[:, None] * vec
            force = np.zeros_like(pts)
            np.add.at(force, e[:, 0], Fvec)
            np.add.at(force, e[:, 1], -Fvec)
            force[:n_fixed] = 0.0
            move = 0.2 * force
            pts = pts + move
            # keep interior points strictly inside
            if len(pts) > n_fixed:
                p_int = pts[n_fixed:]
                sd = P.signed_distance(p_int)
                loc = size(p_int)
                bad = sd > -0.3 * loc
                if np.any(bad):
                    d = 1e-6 * h
                    gx = (P.signed_distance(p_int[bad] + [d, 0]) - sd[bad]) / d
                    gy = (P.signed_distance(p_int[bad] + [0, d]) - sd[bad]) / d
                    g = np.column_stack([gx, gy])
                    g /= np.maximum(np.linalg.norm(g, axis=1), 1e-30)[:, None]
                    p_int[bad] -= (sd[bad] + 0.3 * loc[bad])[:, None] * g
                    pts[n_fixed:] = p_int
            if len(pts) > n_fixed and np.max(np.linalg.norm(move[n_fixed:], axis=1)) < 1e-3 * h:
                break
        return pts

    pts = np.vstack([fixed, interior]) if len(interior) else fixed.copy()
    pts = relax(pts, relax_iters)

    # repair loop: first restore any boundary chain edge the Delaunay dropped
    # (evict interior nodes from its diametral disk), then fix bad triangles
    # by dropping or inserting interior points; re-relax after each change
    for _ in range(8):
        t = _carve(P, pts, geps)
        missing = _missing_chain_edges(P, side_station_idx, pts, t, n_fixed)
        if missing:
            keep = np.ones(len(pts), dtype=bool)
            for a, b in missing:
                mid = 0.5 * (pts[a] + pts[b])
                rad = 0.55 * np.linalg.norm(pts[a] - pts[b])
                d = np.linalg.norm(pts - mid, axis=1)
                bad = d < rad
                bad[:n_fixed] = False
                keep &= ~bad
            pts = pts[keep]
            pts = relax(pts, 12)
            continue
        m = _min_angles(pts, t)
        bad = np.nonzero(m < min_angle)[0]
        if len(bad) == 0:
            break
        drop = set()
        add = []
        for bi in bad:
            movable = [v for v in t[bi] if v >= n_fixed]
            if movable:
                drop.add(min(movable))
            else:
                tri_pts = pts[t[bi]]
                c = tri_pts.mean(axis=0)
                if P.signed_distance(c[None, :])[0] < -0.1 * size(c[None, :])[0]:
                    add.append(c)
        keep = np.ones(len(pts), dtype=bool)
        for d in drop:
            keep[d] = False
        pts = pts[keep]
        if add:
            pts = np.vstack([pts, np.array(add)])
        pts = relax(pts, 20)

    t = _carve(P, pts, geps)
    if _missing_chain_edges(P, side_station_idx, pts, t, n_fixed):
        raise MeshingError("boundary chain could not be restored")
    m = _min_angles(pts, t)
    if m.min() < min_angle:
        raise MeshingError(f"quality bound not met: min angle {m.min():.2f} deg "
                           f"< {min_angle} deg after repair")

    # prune nodes that ended up unused
    used = np.zeros(len(pts), dtype=bool)
    used[: n_fixed] = True
    used[t.ravel()] = True
    remap = -np.ones(len(pts), dtype=int)
    remap[used] = np.arange(used.sum())
    pts = pts[used]
    t = remap[t]

    boundary_edges = _boundary_chain(P, side_station_idx, remap)
    mesh = Mesh(nodes=pts, triangles=t, boundary_edges=boundary_edges,
                vertex_map=remap[np.arange(P.n)], polygon=P, h=h, grade=grade,
                size_fn=size)
    _check_conforming(mesh)
    return mesh


def _min_angles(pts, t) -> np.ndarray:
    p = pts[t]
    out = np.full(len(p), np.inf)
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        den = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
        cosang = np.sum(a * b, axis=1) / np.maximum(den, 1e-300)
        out = np.minimum(out, np.degrees(np.arccos(np.clip(cosang, -1, 1))))
    return out


def _missing_chain_edges(P: Polygon, side_station_idx, pts, t, n_fixed):
    edges = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    edges.sort(axis=1)
    present = {tuple(e) for e in edges}
    missing = []
    for i in range(P.n):
        chain = [i] + list(side_station_idx[i]) + [(i + 1) % P.n]
        for a, b in zip(chain[:-1], chain[1:]):
            if tuple(sorted((int(a), int(b)))) not in present:
                missing.append((int(a), int(b)))
    return missing


def _boundary_chain(P: Polygon, side_station_idx, remap) -> np.ndarray:
    rows = []
    for i in range(P.n):
        chain = [i] + list(side_station_idx[i]) + [(i + 1) % P.n]
        chain = [int(remap[c]) for c in chain]
        for a, b in zip(chain[:-1], chain[1:]):
            rows.append((a, b, i))
    return np.asarray(rows, dtype=int)


def _check_conforming(mesh: Mesh):
    """Boundary edges of the triangulation must be exactly the polygon chain."""
    t = mesh.triangles
    e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e.sort(axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    tri_boundary = {tuple(row) for row in uniq[counts == 1]}
    declared = {tuple(sorted((a, b))) for a, b, _ in mesh.boundary_edges}
    if tri_boundary != declared:
        missing = declared - tri_boundary
        extra = tri_boundary - declared
        raise MeshingError(f"non-conforming mesh: {len(missing)} chain edges missing, "
                           f"{len(extra)} stray boundary edges")
    # boundary nodes must sit on their assigned side
    for a, b, sid in mesh.boundary_edges:
        for nid in (a, b):
            if mesh.polygon.distance_to_side(mesh.nodes[nid], int(sid)) > 1e-12 * mesh.polygon.diameter:
                raise MeshingError(f"boundary node {nid} off side {sid}")


def structured_triangle_mesh(T: Polygon, k: int) -> Mesh:
    """Uniform barycentric k^2-subdivision of a triangle.

    The node lattice is invariant under any symmetry of the triangle, so for
    an isosceles triangle the discrete problem inherits the reflection
    exactly.  Sub-triangles are similar to T: quality equals the triangle's
    own minimum angle.
    """
    if T.n != 3:
        raise MeshingError("structured mesh requires a triangle")
    if k < 1:
        raise MeshingError("k must be >= 1")
    v0, v1, v2 = T.vertices

    index = {}
    nodes = []
    for i in range(k + 1):          # lambda1 = i/k
        for j in range(k + 1 - i):  # lambda2 = j/k
            index[(i, j)] = len(nodes)
            lam0 = (k - i - j) / k
            nodes.append(lam0 * v0 + (i / k) * v1 + (j / k) * v2)
    nodes = np.asarray(nodes)

    tris = []
    for i in range(k):
        for j in range(k - i):
            a, b, c = index[(i, j)], index[(i + 1, j)], index[(i, j + 1)]
            tris.append((a, b, c))
            if i + j < k - 1:
                d = index[(i + 1, j + 1)]
                tris.append((b, d, c))
    tris = np.asarray(tris, dtype=int)
    p = nodes[tris]
    areas = 0.5 * _cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    flip = areas < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]

    bedges = []
    for s, chain in enumerate((
            [index[(i, 0)] for i in range(k + 1)],                       # v0 -> v1
            [index[(k - j, j)] for j in range(k + 1)],                   # v1 -> v2
            [index[(0, k - i)] for i in range(k + 1)])):                 # v2 -> v0
        for a, b in zip(chain[:-1], chain[1:]):
            bedges.append((a, b, s))
    h = float(T.side_lengths.max()) / k
    mesh = Mesh(nodes=nodes, triangles=tris,
                boundary_edges=np.asarray(bedges, dtype=int),
                vertex_map=np.array([index[(0, 0)], index[(k, 0)], index[(0, k)]]),
                polygon=T, h=h, grade=np.zeros(3),
                size_fn=_SizeFunction(T, h, np.zeros(3)))
    _check_conforming(mesh)
    return mesh


def refine(mesh: Mesh) -> Mesh:
    """Regular 4-way refinement; exact on straight sides, quality preserved."""
    nodes = mesh.nodes
    t = mesh.triangles
    edge_mid: dict[tuple[int, int], int] = {}
    new_nodes = [nodes]
    next_id = len(nodes)

    def mid(a: int, b: int) -> int:
        nonlocal next_id
        key = (a, b) if a < b else (b, a)
        if key not in edge_mid:
            edge_mid[key] = next_id
            new_nodes.append(0.5 * (nodes[a] + nodes[b])[None, :])
            next_id += 1
        return edge_mid[key]

    new_tris = np.empty((4 * len(t), 3), dtype=int)
    for k, (a, b, c) in enumerate(t):
        mab, mbc, mca = mid(a, b), mid(b, c), mid(c, a)
        new_tris[4 * k + 0] = (a, mab, mca)
        new_tris[4 * k + 1] = (b, mbc, mab)
        new_tris[4 * k + 2] = (c, mca, mbc)
        new_tris[4 * k + 3] = (mab, mbc, mca)

    all_nodes = np.vstack(new_nodes)
    new_bedges = []
    for a, b, sid in mesh.boundary_edges:
        m = mid(int(a), int(b))
        # snap the midpoint exactly onto the polygon side
        va = mesh.polygon.vertices[sid]
        sv = mesh.polygon.side_vectors[sid]
        s = np.dot(all_nodes[m] - va, sv) / np.dot(sv, sv)
        all_nodes[m] = va + s * sv
        new_bedges.append((int(a), m, int(sid)))
        new_bedges.append((m, int(b), int(sid)))

    out = Mesh(nodes=all_nodes, triangles=new_tris,
               boundary_edges=np.asarray(new_bedges, dtype=int),
               vertex_map=mesh.vertex_map.copy(), polygon=mesh.polygon,
               h=mesh.h, grade=mesh.grade, size_fn=mesh.size_fn,
               level=mesh.level + 1)
    return out
