"""Neumann Laplacian eigenpairs on a triangulated polygon.

Quadratic Lagrange elements (so gradients are linear inside each triangle,
which Newton refinement of gradient zeros relies on), generalized eigensolve
via shift-invert Lanczos with the constant mode deflated, and batched point
evaluation of u and grad u with a kd-tree locator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial import cKDTree

from .config import DEFAULTS
from .geometry import Polygon
from .mesh import Mesh


class SolverError(RuntimeError):
    pass


class OutsideDomainError(ValueError):
    pass


# quadrature on the reference triangle (0,0)-(1,0)-(0,1); weights sum to 1/2
_QP3 = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
_QW3 = np.array([1 / 6, 1 / 6, 1 / 6])

_a1, _b1 = 0.059715871789770, 0.470142064105115
_a2, _b2 = 0.797426985353087, 0.101286507323456
_QP7 = np.array([
    [1 / 3, 1 / 3],
    [_b1, _b1], [_a1, _b1], [_b1, _a1],
    [_b2, _b2], [_a2, _b2], [_b2, _a2],
])
_QW7 = 0.5 * np.array([9 / 40,
                       0.132394152788506, 0.132394152788506, 0.132394152788506,
                       0.125939180544827, 0.125939180544827, 0.125939180544827])


def _p2_values(x, y):
    """Shape functions at reference coordinates; returns (..., 6)."""
    l0 = 1.0 - x - y
    return np.stack([
        l0 * (2 * l0 - 1), x * (2 * x - 1), y * (2 * y - 1),
        4 * l0 * x, 4 * x * y, 4 * y * l0,
    ], axis=-1)


def _p2_grads(x, y):
    """Reference gradients; returns (..., 6, 2)."""
    l0 = 1.0 - x - y
    z = np.zeros_like(x)
    gx = np.stack([1 - 4 * l0, 4 * x - 1, z, 4 * (l0 - x), 4 * y, -4 * y], axis=-1)
    gy = np.stack([1 - 4 * l0, z, 4 * y - 1, -4 * x, 4 * x, 4 * (l0 - y)], axis=-1)
    return np.stack([gx, gy], axis=-1)


class P2Space:
    """Quadratic Lagrange space on a mesh: dof map, assembly, point evaluation."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        t = mesh.triangles
        edges = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        edges.sort(axis=1)
        uniq, inv = np.unique(edges, axis=0, return_inverse=True)
        self.edge_nodes = uniq
        n = mesh.n_nodes
        m = len(t)
        self.ndof = n + len(uniq)
        self.dof = np.empty((m, 6), dtype=int)
        self.dof[:, :3] = t
        self.dof[:, 3] = n + inv[:m]
        self.dof[:, 4] = n + inv[m:2 * m]
        self.dof[:, 5] = n + inv[2 * m:]
        p = mesh.nodes[t]
        self.J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)  # (m,2,2)
        self.detJ = self.J[:, 0, 0] * self.J[:, 1, 1] - self.J[:, 0, 1] * self.J[:, 1, 0]
        self.Jinv = np.empty_like(self.J)
        self.Jinv[:, 0, 0] = self.J[:, 1, 1]
        self.Jinv[:, 0, 1] = -self.J[:, 0, 1]
        self.Jinv[:, 1, 0] = -self.J[:, 1, 0]
        self.Jinv[:, 1, 1] = self.J[:, 0, 0]
        self.Jinv /= self.detJ[:, None, None]
        self._tree = cKDTree(p.mean(axis=1))
        self._p0 = p[:, 0]

    def dof_points(self) -> np.ndarray:
        nodes = self.mesh.nodes
        mids = 0.5 * (nodes[self.edge_nodes[:, 0]] + nodes[self.edge_nodes[:, 1]])
        return np.vstack([nodes, mids])

    # -- assembly ---------------------------------------------------------------
    def assemble(self) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        dof, Jinv, detJ = self.dof, self.Jinv, self.detJ
        m = len(dof)

        Gref = _p2_grads(_QP3[:, 0], _QP3[:, 1])          # (3,6,2)
        Gphys = np.einsum("eba,qib->eqia", Jinv, Gref)     # (m,3,6,2)
        Ke = np.einsum("q,eqia,eqja,e->eij", _QW3, Gphys, Gphys, detJ)

        V = _p2_values(_QP7[:, 0], _QP7[:, 1])             # (7,6)
        Me = np.einsum("q,qi,qj->ij", _QW7, V, V)[None, :, :] * detJ[:, None, None]

        rows = np.repeat(dof, 6, axis=1).ravel()
        cols = np.tile(dof, (1, 6)).ravel()
        K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(self.ndof, self.ndof)).tocsr()
        M = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(self.ndof, self.ndof)).tocsr()
        return K, M

    @cached_property
    def matrices(self) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        return self.assemble()

    @cached_property
    def _mass_solver(self):
        _, M = self.matrices
        return spla.splu(M.tocsc())

    def project_gradient(self, coef: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """L2 projection of grad u_h onto the P2 space (continuous recovery)."""
        dof, Jinv, detJ = self.dof, self.Jinv, self.detJ
        V = _p2_values(_QP7[:, 0], _QP7[:, 1])             # (7,6)
        Gref = _p2_grads(_QP7[:, 0], _QP7[:, 1])           # (7,6,2)
        Gphys = np.einsum("eba,qib->eqia", Jinv, Gref)     # (m,7,6,2)
        ce = coef[dof]                                      # (m,6)
        gq = np.einsum("ei,eqia->eqa", ce, Gphys)           # (m,7,2)
        be = np.einsum("q,qi,eqa,e->eia", _QW7, V, gq, detJ)
        b = np.zeros((self.ndof, 2))
        np.add.at(b, dof.ravel(), be.reshape(-1, 2))
        gx = self._mass_solver.solve(b[:, 0])
        gy = self._mass_solver.solve(b[:, 1])
        return gx, gy

    # -- point location ---------------------------------------------------------
    def locate(self, pts: np.ndarray, *, tol: float = 1e-9, strict: bool = True):
        """Triangle index and reference coordinates for each point."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        npts = len(pts)
        tri = np.full(npts, -1, dtype=int)
        xi = np.zeros((npts, 2))
        pend = np.arange(npts)
        for k in (8, 64):
            if len(pend) == 0:
                break
            kk = min(k, len(self._p0))
            _, cand = self._tree.query(pts[pend], k=kk)
            cand = np.atleast_2d(cand)
            for c in range(cand.shape[1]):
                if len(pend) == 0:
                    break
                ti = cand[:, c]
                loc = np.einsum("pab,pb->pa", self.Jinv[ti], pts[pend] - self._p0[ti])
                lam0 = 1.0 - loc[:, 0] - loc[:, 1]
                ok = (loc[:, 0] >= -tol) & (loc[:, 1] >= -tol) & (lam0 >= -tol)
                hit = pend[ok]
                tri[hit] = ti[ok]
                xi[hit] = np.clip(loc[ok], 0.0, 1.0)
                pend = pend[~ok]
                cand = cand[~ok]
        if len(pend) and strict:
            inside = self.mesh.polygon.contains(pts[pend])
            if np.any(~inside):
                raise OutsideDomainError(f"{int(np.sum(~inside))} evaluation points "
                                         "outside the domain")
            # inside but unlocated: loosen the barycentric tolerance
            for idx in pend:
                loc = np.einsum("pab,b->pa", self.Jinv, pts[idx] - self._p0)
                lam0 = 1.0 - loc[:, 0] - loc[:, 1]
                score = np.minimum(np.minimum(loc[:, 0], loc[:, 1]), lam0)
                best = int(np.argmax(score))
                tri[idx] = best
                xi[idx] = np.clip(loc[best], 0.0, 1.0)
        return tri, xi

    def eval(self, coef: np.ndarray, pts, *, strict: bool = True) -> np.ndarray:
        pts_arr = np.atleast_2d(np.asarray(pts, dtype=float))
        tri, xi = self.locate(pts_arr, strict=strict)
        V = _p2_values(xi[:, 0], xi[:, 1])
        out = np.einsum("pi,pi->p", coef[self.dof[tri]], V)
        out[tri < 0] = np.nan
        return out if np.asarray(pts).ndim == 2 else float(out[0])

    def eval_grad(self, coef: np.ndarray, pts, *, strict: bool = True) -> np.ndarray:
        pts_arr = np.atleast_2d(np.asarray(pts, dtype=float))
        tri, xi = self.locate(pts_arr, strict=strict)
        G = _p2_grads(xi[:, 0], xi[:, 1])                  # (p,6,2)
        Gphys = np.einsum("pba,pib->pia", self.Jinv[tri], G)
        out = np.einsum("pi,pia->pa", coef[self.dof[tri]], Gphys)
        out[tri < 0] = np.nan
        return out if np.asarray(pts).ndim == 2 else out[0]


def assemble(mesh: Mesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Stiffness and mass matrices of the Neumann Laplacian (quadratic elements)."""
    return P2Space(mesh).assemble()


@dataclass
class EigenSolution:
    """Second Neumann eigenpair with point evaluation of u and grad u."""
    space: P2Space
    mu: float
    coef: np.ndarray
    gap: float
    residual: float
    neighbor_mu: float | None = None
    neighbor_coef: np.ndarray | None = None
    multiplicity_flag: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def mesh(self) -> Mesh:
        return self.space.mesh

    @property
    def polygon(self) -> Polygon:
        return self.space.mesh.polygon

    def eval(self, pts, *, strict: bool = True):
        return self.space.eval(self.coef, pts, strict=strict)

    def eval_grad(self, pts, *, strict: bool = True):
        return self.space.eval_grad(self.coef, pts, strict=strict)

    @cached_property
    def _recovered(self) -> tuple[np.ndarray, np.ndarray]:
        return self.space.project_gradient(self.coef)

    def eval_grad_recovered(self, pts, *, strict: bool = True):
        gx, gy = self._recovered
        pts_arr = np.atleast_2d(np.asarray(pts, dtype=float))
        vx = self.space.eval(gx, pts_arr, strict=strict)
        vy = self.space.eval(gy, pts_arr, strict=strict)
        out = np.column_stack([vx, vy])
        return out if np.asarray(pts).ndim == 2 else out[0]

    def integral(self) -> float:
        _, M = self.space.matrices
        return float(np.ones(self.space.ndof) @ (M @ self.coef))

    def h_at(self, pts) -> np.ndarray:
        return self.mesh.h_at(pts)

    @property
    def scale(self) -> float:
        return float(np.abs(self.coef).max())

    def vertex_values(self) -> np.ndarray:
        return self.coef[self.mesh.vertex_map]

    def with_coef(self, coef: np.ndarray, mu: float | None = None) -> "EigenSolution":
        return EigenSolution(self.space, self.mu if mu is None else mu, coef,
                             self.gap, self.residual, self.neighbor_mu,
                             self.neighbor_coef, self.multiplicity_flag,
                             dict(self.diagnostics))

    def align_sign_with(self, other: "EigenSolution") -> "EigenSolution":
        """Flip sign so u agrees with another solution at the polygon vertices."""
        a = self.vertex_values()
        b = other.eval(self.polygon.vertices, strict=False)
        s = float(np.nansum(a * b))
        if s == 0.0:
            probe = 0.5 * (self.polygon.vertices + self.polygon.centroid)
            s = float(np.nansum(self.eval(probe) * other.eval(probe, strict=False)))
        return self.with_coef(-self.coef) if s < 0 else self

    def basis(self) -> list["EigenSolution"]:
        """Orthogonal basis of the (near-)eigenspace: [u] or [u, u_next]."""
        out = [self]
        if self.neighbor_coef is not None:
            out.append(self.with_coef(self.neighbor_coef, mu=self.neighbor_mu))
        return out

    def select_from_pair(self, target_eval) -> "EigenSolution":
        """Combination of the near-degenerate pair closest to a target function.

        target_eval is a callable points -> values; the combination maximizes
        the mass-weighted overlap and is renormalized to max |u| = 1.
        """
        if self.neighbor_coef is None:
            return self
        _, M = self.space.matrices
        pts = self.space.dof_points()
        tvals = np.asarray(target_eval(pts), dtype=float)
        c1, c2 = self.coef, self.neighbor_coef
        a1 = float(tvals @ (M @ c1))
        a2 = float(tvals @ (M @ c2))
        comb = a1 * c1 + a2 * c2
        nrm = np.abs(comb).max()
        if nrm == 0:
            return self
        return self.with_coef(comb / nrm)


class AnalyticSolution:
    """Closed-form stand-in with the EigenSolution evaluation interface.

    Used for manufactured fields in tests and wedge probes: any callable u
    with gradient on a polygon, tagged with an eigenvalue-like scale mu.
    """

    def __init__(self, polygon: Polygon, mu: float, f, grad_f, *, h_nominal: float | None = None):
        self.polygon = polygon
        self.mu = float(mu)
        self._f = f
        self._grad = grad_f
        self.h_nominal = h_nominal if h_nominal is not None else polygon.diameter / 64
        self.gap = np.inf
        self.residual = 0.0
        self.neighbor_coef = None
        self.multiplicity_flag = False
        self.mesh = None

    def eval(self, pts, *, strict: bool = True):
        pts_arr = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.asarray(self._f(pts_arr), dtype=float)
        return out if np.asarray(pts).ndim == 2 else float(out[0])

    def eval_grad(self, pts, *, strict: bool = True):
        pts_arr = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.asarray(self._grad(pts_arr), dtype=float)
        return out if np.asarray(pts).ndim == 2 else out[0]

    def eval_grad_recovered(self, pts, *, strict: bool = True):
        return self.eval_grad(pts, strict=strict)

    def h_at(self, pts) -> np.ndarray:
        pts_arr = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.full(len(pts_arr), self.h_nominal)

    @property
    def scale(self) -> float:
        rng = np.random.default_rng(7)
        v = self.polygon.vertices
        w = rng.dirichlet(np.ones(len(v)), size=512)
        pts = w @ v
        pts = pts[self.polygon.contains(pts)]
        vals = self.eval(pts)
        return float(np.nanmax(np.abs(vals))) if len(pts) else 1.0


def solve_second(mesh: Mesh, tol: float | None = None, *,
                 maxiter: int | None = None, n_extra: int = 2) -> EigenSolution:
    """Eigenpair for the smallest nonzero Neumann eigenvalue.

    The constant mode is deflated by projection; the relative gap to the next
    eigenvalue is reported and, when it falls below the degeneracy threshold,
    the next eigenvector is attached so callers can work with the 2-dim
    eigenspace.
    """
    if tol is None:
        tol = DEFAULTS.solver_tol
    if maxiter is None:
        maxiter = DEFAULTS.solver_maxiter
    space = P2Space(mesh)
    K, M = space.matrices
    n = space.ndof
    mu_scale = (2 * math.pi / mesh.polygon.diameter) ** 2
    sigma = -0.25 * mu_scale
    v0 = np.cos(0.7 * np.arange(n))
    k = 2 + max(1, n_extra)
    try:
        vals, vecs = spla.eigsh(K, k=k, M=M, sigma=sigma, which="LM",
                                v0=v0, maxiter=maxiter)
    except Exception:
        if n <= 4000:
            import scipy.linalg as la
            vals, vecs = la.eigh(K.toarray(), M.toarray(),
                                 subset_by_index=[0, k - 1])
        else:
            raise SolverError("eigensolver failed to converge") from None
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    if abs(vals[0]) > 1e-6 * max(vals[1], mu_scale):
        raise SolverError(f"constant mode not found: spectrum head {vals[:3]}")

    ones = np.ones(n)
    mass_total = float(ones @ (M @ ones))

    def deflate(x):
        x = x - (float(ones @ (M @ x)) / mass_total) * ones
        return x / np.abs(x).max()

    mu2 = float(vals[1])
    c2 = deflate(vecs[:, 1])
    mu3 = float(vals[2]) if len(vals) > 2 else np.inf
    gap = (mu3 - mu2) / mu2 if np.isfinite(mu3) else np.inf

    # static sign rule: first polygon vertex with |u| > 0.5 positive, else max u = +1
    vv = c2[mesh.vertex_map]
    big = np.nonzero(np.abs(vv) > 0.5)[0]
    if len(big):
        if vv[big[0]] < 0:
            c2 = -c2
    elif c2.max() < -c2.min():
        c2 = -c2

    r = K @ c2 - mu2 * (M @ c2)
    residual = float(np.linalg.norm(r) / (mu2 * np.linalg.norm(M @ c2)))

    multiple = gap < DEFAULTS.degenerate_gap
    neighbor_mu = mu3 if np.isfinite(mu3) else None
    neighbor_coef = deflate(vecs[:, 2]) if (len(vals) > 2 and multiple) else None
    diag = {"spectrum_head": [float(v) for v in vals],
            "ndof": n, "residual": residual, "gap": gap,
            "mass_total": mass_total}
    return EigenSolution(space, mu2, c2, gap, residual,
                         neighbor_mu=neighbor_mu, neighbor_coef=neighbor_coef,
                         multiplicity_flag=bool(multiple), diagnostics=diag)
