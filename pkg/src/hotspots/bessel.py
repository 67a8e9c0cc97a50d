"""Bessel functions of the first kind for real order, and vertex expansions.

Near a vertex of angle beta, a Neumann eigenfunction with eigenvalue mu has
the expansion

    u(r e^{i theta}) = sum_n c_n J_{n nu}(sqrt(mu) r) cos(n nu theta),
    nu = pi / beta,

in the local frame of the vertex.  This module evaluates J_nu by the
ascending power series (leading term through log-Gamma, successive terms by
the exact term recurrence) and extracts c_0..c_K from point samples of a
computed eigenfunction by least squares over a polar annulus.

The factorization J_nu(sqrt(mu) r) = r^nu * g_nu(r^2) is exposed through
``g_amplitude``; g_nu(0) and g_0'(0) feed the right-angle index test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, getcontext

import numpy as np
from scipy.special import gammaln

from .config import DEFAULTS

_SERIES_X_MAX = 12.0   # beyond this the float64 series loses digits to cancellation
_KMAX = 48


class FitError(RuntimeError):
    pass


class UndefinedLeadingCoefficient(ValueError):
    """beta = pi/2: neither c0 nor c1 is the leading coefficient."""


def _series_float(nu: float, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    zero = x == 0
    if nu == 0:
        out[zero] = 1.0
    pos = ~zero
    if np.any(pos):
        xp = x[pos]
        q = 0.25 * xp * xp
        t = np.exp(nu * np.log(0.5 * xp) - gammaln(nu + 1.0))
        s = t.copy()
        for k in range(_KMAX):
            t = -t * q / ((k + 1.0) * (k + nu + 1.0))
            s += t
        out[pos] = s
    return out


def _series_decimal(nu: float, x: float) -> float:
    # term recurrence in 50-digit arithmetic; the float leading term only
    # contributes a global relative factor of machine size
    getcontext().prec = 50
    xd = Decimal(x)
    q = xd * xd / 4
    nud = Decimal(nu)
    t = Decimal(math.exp(nu * math.log(0.5 * x) - math.lgamma(nu + 1.0)))
    s = t
    k = 0
    while True:
        t = -t * q / ((k + 1) * (k + 1 + nud))
        s += t
        k += 1
        if abs(t) < Decimal("1e-45") * (abs(s) + Decimal(1e-300)) or k > 400:
            break
    return float(s)


def bessel_j(nu: float, x) -> np.ndarray | float:
    """J_nu(x) for real nu >= 0 and x >= 0 by the ascending series."""
    if nu < 0:
        raise ValueError("order must be nonnegative")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa < 0):
        raise ValueError("argument must be nonnegative")
    out = np.empty_like(xa)
    small = xa <= _SERIES_X_MAX
    out[small] = _series_float(nu, xa[small])
    for i in np.nonzero(~small)[0]:
        out[i] = _series_decimal(nu, float(xa[i]))
    return out if np.asarray(x).ndim else float(out[0])


def g_amplitude(nu: float, mu: float, s) -> np.ndarray | float:
    """g_nu(s) with J_nu(sqrt(mu) r) = r^nu g_nu(r^2); s = r^2."""
    sa = np.atleast_1d(np.asarray(s, dtype=float))
    q = 0.25 * mu * sa
    t = np.full_like(sa, math.exp(nu * 0.5 * math.log(mu) - nu * math.log(2.0)
                                  - math.lgamma(nu + 1.0)))
    out = t.copy()
    for k in range(_KMAX):
        t = -t * q / ((k + 1.0) * (k + nu + 1.0))
        out += t
    return out if np.asarray(s).ndim else float(out[0])


def g_at_zero(nu: float, mu: float) -> float:
    return math.exp(nu * 0.5 * math.log(mu) - nu * math.log(2.0) - math.lgamma(nu + 1.0)) \
        if mu > 0 else (1.0 if nu == 0 else 0.0)


def g0_prime_at_zero(mu: float) -> float:
    return -0.25 * mu


@dataclass
class BesselExpansion:
    """Fitted vertex expansion c_0..c_K with scale data from the fit annulus."""
    vertex: int
    beta: float
    nu: float
    mu: float
    coeffs: np.ndarray
    r_in: float
    r_out: float
    residual: float
    scale: float                  # max |u| over the fit annulus
    contributions: np.ndarray     # |c_n| * max_annulus |J_{n nu}(sqrt(mu) r)|
    cond: float = 0.0

    @property
    def K(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading_index(self) -> int | None:
        if abs(self.beta - math.pi / 2) <= DEFAULTS.angle_tol:
            return None
        return 0 if self.beta < math.pi / 2 else 1

    @property
    def leading_coefficient(self) -> float:
        idx = self.leading_index
        if idx is None:
            raise UndefinedLeadingCoefficient(
                f"vertex {self.vertex}: beta = pi/2 has no leading coefficient")
        return float(self.coeffs[idx])

    def magnitude(self, n: int) -> float:
        """Contribution of mode n relative to the annulus scale of u."""
        return float(self.contributions[n] / max(self.scale, 1e-300))

    def magnitudes(self) -> np.ndarray:
        return self.contributions / max(self.scale, 1e-300)

    def smallest_nonvanishing_k(self, threshold: float | None = None) -> int | None:
        """Smallest n >= 1 whose relative contribution exceeds the threshold."""
        if threshold is None:
            threshold = DEFAULTS.vanish_threshold
        mags = self.magnitudes()
        for n in range(1, self.K + 1):
            if mags[n] > threshold:
                return n
        return None

    def eval(self, r, theta) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(np.broadcast(r, theta).shape)
        for n, c in enumerate(self.coeffs):
            out += c * bessel_j(n * self.nu, math.sqrt(self.mu) * r) * np.cos(n * self.nu * theta)
        return out

    def to_dict(self) -> dict:
        return {
            "vertex": self.vertex, "beta": self.beta, "nu": self.nu, "mu": self.mu,
            "coeffs": [float(c) for c in self.coeffs],
            "annulus": [self.r_in, self.r_out],
            "residual": self.residual, "scale": self.scale,
            "magnitudes": [float(m) for m in self.magnitudes()],
        }


def fit_sector_coefficients(u_eval, mu: float, apex, alpha: float, beta: float,
                            r_in: float, r_out: float, *, K: int | None = None,
                            n_r: int | None = None, n_theta: int | None = None,
                            vertex: int = -1) -> BesselExpansion:
    """Least-squares Fourier-Bessel fit over a polar grid in a vertex frame.

    ``u_eval`` maps an (n,2) array of points to values; ``alpha`` is the world
    angle of the theta=0 ray.
    """
    if K is None:
        K = DEFAULTS.bessel_K
    if n_r is None:
        n_r = DEFAULTS.fit_n_radii
    if n_theta is None:
        n_theta = DEFAULTS.fit_n_theta
    if not (0 < r_in < r_out):
        raise FitError("need 0 < r_in < r_out")
    npts = n_r * n_theta
    if npts < 10 * (K + 1):
        raise FitError(f"annulus grid too sparse: {npts} points for K={K}")

    apex = np.asarray(apex, dtype=float)
    radii = np.linspace(r_in, r_out, n_r)
    pad = 1e-9 * beta
    thetas = np.linspace(pad, beta - pad, n_theta)
    R, Th = np.meshgrid(radii, thetas, indexing="ij")
    rr, tt = R.ravel(), Th.ravel()
    pts = apex[None, :] + np.column_stack([rr * np.cos(alpha + tt), rr * np.sin(alpha + tt)])

    try:
        U = np.asarray(u_eval(pts), dtype=float)
    except Exception as e:
        raise FitError(f"annulus intersects the domain boundary: {e}") from e
    if np.any(~np.isfinite(U)):
        raise FitError("annulus intersects the domain boundary: evaluation failed")

    nu = math.pi / beta
    smu = math.sqrt(mu)
    A = np.empty((npts, K + 1))
    colmax = np.empty(K + 1)
    for n in range(K + 1):
        jcol = bessel_j(n * nu, smu * rr)
        A[:, n] = jcol * np.cos(n * nu * tt)
        colmax[n] = np.abs(bessel_j(n * nu, smu * radii)).max()
    colnorm = np.linalg.norm(A, axis=0)
    if np.any(colnorm == 0):
        raise FitError("degenerate design matrix")
    As = A / colnorm
    cond = float(np.linalg.cond(As))
    if cond > 1e10:
        raise FitError(f"ill-conditioned fit (cond {cond:.1e}): annulus too thin")
    sol, *_ = np.linalg.lstsq(As, U, rcond=None)
    coeffs = sol / colnorm
    # a mode whose whole contribution sits below the fit error is
    # unidentifiable noise in an amplified raw coefficient; pin it to 0
    scale = float(np.abs(U).max())
    resid0 = float(np.linalg.norm(U - A @ coeffs) / max(np.linalg.norm(U), 1e-300))
    noise_floor = max(1e-13, 2.0 * resid0) * scale
    coeffs[np.abs(coeffs) * colmax < noise_floor] = 0.0
    resid = float(np.linalg.norm(U - A @ coeffs) / max(np.linalg.norm(U), 1e-300))
    contributions = np.abs(coeffs) * colmax
    return BesselExpansion(vertex=vertex, beta=beta, nu=nu, mu=mu,
                           coeffs=coeffs, r_in=r_in, r_out=r_out,
                           residual=resid, scale=scale,
                           contributions=contributions, cond=cond)


def annulus_reference(P, i: int) -> float:
    """Reference length at vertex i: clearance to non-adjacent sides, capped
    by the adjacent side lengths so the fit annulus stays in the vertex wedge."""
    d = P.nonadjacent_side_distance(i)
    adj = min(P.side_lengths[i % P.n], P.side_lengths[(i - 1) % P.n])
    return min(d, adj)


def default_annulus(sol, i: int) -> tuple[float, float]:
    ref = annulus_reference(sol.polygon, i)
    return DEFAULTS.annulus_inner * ref, DEFAULTS.annulus_outer * ref


def fit_coefficients(sol, vertex: int, K: int | None = None,
                     annulus: tuple[float, float] | None = None, **kw) -> BesselExpansion:
    """Vertex expansion of a computed eigenfunction at polygon vertex ``vertex``."""
    P = sol.polygon
    apex, alpha, beta = P.vertex_frame(vertex)
    if annulus is None:
        annulus = default_annulus(sol, vertex)
    r_in, r_out = annulus
    return fit_sector_coefficients(lambda p: sol.eval(p, strict=True), sol.mu,
                                   apex, alpha, beta, r_in, r_out, K=K,
                                   vertex=vertex % P.n, **kw)


@dataclass
class LeadingCoefficientTest:
    vanishes: bool
    ratio: float              # relative contribution of the leading mode
    leading_index: int
    threshold: float


def leading_coefficient_test(exp: BesselExpansion,
                             threshold: float | None = None) -> LeadingCoefficientTest:
    """Does the leading coefficient vanish, at the given relative threshold?

    Returns the raw ratio as well so callers can follow trends along a
    deformation path instead of trusting one hard verdict.
    """
    if threshold is None:
        threshold = DEFAULTS.vanish_threshold
    idx = exp.leading_index
    if idx is None:
        raise UndefinedLeadingCoefficient(
            f"vertex {exp.vertex}: leading coefficient undefined at beta = pi/2")
    ratio = exp.magnitude(idx)
    return LeadingCoefficientTest(vanishes=ratio < threshold, ratio=ratio,
                                  leading_index=idx, threshold=threshold)
