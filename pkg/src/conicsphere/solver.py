"""Finite-difference solver for the singular Liouville equation.

Solves ``Delta u = -exp(2u)`` on a stereographic chart for a divisor with
one conic point at infinity (order ``beta1``) and finite conic points
``z_i`` (orders ``beta_i``).  The unknown is the regular part ``v`` of the
splitting

    u(z) = v(z) + bg(z),
    bg(z) = sum_i [beta_i*log|z - z_i| + a_i*psi_i(z)]
            - (2+beta1+alpha)*0.5*log(1+|z|^2),

with ``alpha = sum_i beta_i``.  The logs carry the conic singularities; the
cusp terms ``psi_i = cutoff * |z-z_i|^{2+2*beta_i}`` carry the leading
non-smooth correction of the local cone profile, whose amplitude
``a_i = -exp(2*c_i)/(2+2*beta_i)^2`` (``c_i`` the local smooth value of
``u - beta_i*log r``) is solved along with the field; without it the
five-point stencil loses an order near each cone.  What remains in ``v``
is regular enough for second-order accuracy.

The chart is truncated to ``[-L, L]^2``.  Boundary data comes from a
one-parameter matched far field: the two-cone (football) profile of order
``beta1`` whose far-field constant ``c_inf`` is the remaining scalar
unknown; it is closed either by the total-curvature balance
``int exp(2u) = 2*pi*(2+|D|)`` (flux form away from the cones plus
singularity-aware quadrature near them plus the matched tail), or, for
divisors invariant under chart scalings (where that balance is degenerate
along the exact solution family), by pinning the gauge.

Newton iterations are damped by Armijo backtracking on the residual norm;
each step solves the bordered sparse system directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import quad
from sklearn.base import BaseEstimator

from .divisor import Divisor, DivisorKind, classify, total_area
from .validation import check_positive

__all__ = [
    "ConformalProblem",
    "ConformalSolution",
    "ConformalSolver",
    "SolveError",
    "background",
    "residual_field",
    "solve",
    "solve_dirichlet",
    "verify_gauss_bonnet",
    "lemma33_bounds_check",
    "chart_curvature_integral",
    "tail_mass",
    "boundary_profile",
]

_SING_MASK_RADIUS = 0.55  # in units of h: nodes this close to a z_i get closure rows
_NEAR_RADIUS = 0.2  # minimum physical radius of the quadrature region around cones
_SUBSAMPLE = 32  # subsamples per axis for near-cone cell quadrature


class SolveError(RuntimeError):
    """Newton failed to reach the tolerance; carries the last residual norm."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


# ---------------------------------------------------------------------------
# Problem setup
# ---------------------------------------------------------------------------

def _split_divisor(divisor: Divisor):
    if not divisor.has_infinity:
        raise ValueError("solver divisors must place exactly one conic point at infinity")
    beta1 = divisor.infinity_order
    finite = divisor.finite_points
    zs = np.array([p.position for p in finite], dtype=complex)
    betas = np.array([p.beta for p in finite], dtype=float)
    return float(beta1), zs, betas


def _is_football_like(divisor: Divisor) -> bool:
    """Critical divisors with a closed-form solution: the smooth sphere and
    two-point equal-order footballs (these are invariant under a chart
    scaling, so they carry an exact one-parameter solution family)."""
    beta1, zs, betas = _split_divisor(divisor)
    if len(zs) == 0:
        return beta1 == 0.0
    return len(zs) == 1 and betas[0] == beta1


@dataclass(frozen=True)
class ConformalProblem:
    """A solvable divisor paired with a chart of half-width ``L``.

    Requires the divisor to be Subcritical (or one of the closed-form
    Critical cases: smooth sphere, equal-order two-point football) with all
    finite points inside ``max(|x|,|y|) <= L/2``.
    """

    divisor: Divisor
    half_width: float = 8.0

    def __post_init__(self):
        check_positive(self.half_width, "half_width")
        cls = classify(self.divisor)
        if cls.kind is not DivisorKind.SUBCRITICAL and not (
            cls.kind is DivisorKind.CRITICAL and _is_football_like(self.divisor)
        ):
            raise ValueError(
                f"solver requires a Subcritical divisor (or a closed-form football); got {cls.kind}"
            )
        beta1, zs, _ = _split_divisor(self.divisor)
        if len(zs) and np.max(np.maximum(np.abs(zs.real), np.abs(zs.imag))) > self.half_width / 2:
            raise ValueError("finite conic points must satisfy max(|x|,|y|) <= L/2")
        object.__setattr__(self, "_beta1", beta1)

    @property
    def beta1(self) -> float:
        return self._beta1

    @property
    def alpha(self) -> float:
        return math.fsum(p.beta for p in self.divisor.finite_points)

    @property
    def mass_target(self) -> float:
        return total_area(self.divisor)

    @property
    def finite_positions(self) -> np.ndarray:
        return np.array([p.position for p in self.divisor.finite_points], dtype=complex)

    @property
    def finite_orders(self) -> np.ndarray:
        return np.array([p.beta for p in self.divisor.finite_points], dtype=float)


def background(problem: ConformalProblem, z, amplitudes=None, enrichment=None):
    """Singular background at points ``z``.

    The log part ``sum_i beta_i*log|z-z_i| - (2+beta1+alpha)*0.5*log(1+|z|^2)``
    plus, when cusp amplitudes are supplied, the enrichment terms
    ``a_i * psi_i(z)``.  Evaluating at a finite conic point raises.
    """
    z = np.asarray(z, dtype=complex)
    zs = problem.finite_positions
    betas = problem.finite_orders
    out = -(2.0 + problem.beta1 + problem.alpha) * 0.5 * np.log1p(np.abs(z) ** 2)
    for zi, bi in zip(zs, betas):
        d = np.abs(z - zi)
        if np.any(d == 0.0):
            raise ValueError(f"background is singular at conic point {zi}")
        out = out + bi * np.log(d)
    if amplitudes is not None and enrichment is not None:
        out = out + enrichment.combination(z, amplitudes)
    return out if out.ndim else float(out)


def _log_background_grid(problem: ConformalProblem, Z: np.ndarray) -> np.ndarray:
    """Log-only background on the grid; +inf where a node hits a conic point."""
    out = -(2.0 + problem.beta1 + problem.alpha) * 0.5 * np.log1p(np.abs(Z) ** 2)
    with np.errstate(divide="ignore"):
        for zi, bi in zip(problem.finite_positions, problem.finite_orders):
            out = out + bi * np.log(np.abs(Z - zi))
    return out


# ---------------------------------------------------------------------------
# Cusp enrichment basis
# ---------------------------------------------------------------------------

def _cutoff(s):
    """C^2 bump: 1 on [0, 1/2], quintic smoothstep down to 0 at 1."""
    s = np.asarray(s, dtype=float)
    t = np.clip(2.0 * s - 1.0, 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def _cutoff_d1(s):
    s = np.asarray(s, dtype=float)
    t = np.clip(2.0 * s - 1.0, 0.0, 1.0)
    inside = (s > 0.5) & (s < 1.0)
    return np.where(inside, -2.0 * (30.0 * t**2 - 60.0 * t**3 + 30.0 * t**4), 0.0)


def _cutoff_d2(s):
    s = np.asarray(s, dtype=float)
    t = np.clip(2.0 * s - 1.0, 0.0, 1.0)
    inside = (s > 0.5) & (s < 1.0)
    return np.where(inside, -4.0 * (60.0 * t - 180.0 * t**2 + 120.0 * t**3), 0.0)


class CuspEnrichment:
    """Per-point cusp basis ``psi_i(z) = eta(r/r_i) * r^{2+2*beta_i}``.

    Active only where the cutoff radius clears both the grid (>= 4h) and
    the near-cone quadrature plateau (>= 0.4); inactive points keep a_i = 0.
    """

    def __init__(self, problem: ConformalProblem, h: float):
        zs = problem.finite_positions
        betas = problem.finite_orders
        L = problem.half_width
        n_pts = len(zs)
        self.positions = zs
        self.powers = 2.0 + 2.0 * betas
        r_cut = np.full(n_pts, 1.0)
        for i, zi in enumerate(zs):
            sep = [abs(zi - zj) for j, zj in enumerate(zs) if j != i]
            if sep:
                r_cut[i] = min(r_cut[i], 0.45 * min(sep))
            edge = L - max(abs(zi.real), abs(zi.imag))
            r_cut[i] = min(r_cut[i], 0.5 * edge)
        self.r_cut = r_cut
        self.active = r_cut >= max(4.0 * h, 2.0 * _NEAR_RADIUS)

    @property
    def n_points(self) -> int:
        return len(self.positions)

    def psi(self, z, i: int):
        if not self.active[i]:
            return np.zeros(np.shape(z))
        r = np.abs(np.asarray(z, dtype=complex) - self.positions[i])
        return _cutoff(r / self.r_cut[i]) * r ** self.powers[i]

    def delta_psi(self, z, i: int):
        """Laplacian of psi_i (radial): eta*p^2*r^{p-2} + eta''*r^p + (2p+1)*eta'*r^{p-1}."""
        if not self.active[i]:
            return np.zeros(np.shape(z))
        p = self.powers[i]
        rc = self.r_cut[i]
        r = np.abs(np.asarray(z, dtype=complex) - self.positions[i])
        r_safe = np.maximum(r, 1e-300)
        s = r / rc
        out = (
            _cutoff(s) * p * p * r_safe ** (p - 2.0)
            + _cutoff_d2(s) / rc**2 * r_safe**p
            + (2.0 * p + 1.0) * _cutoff_d1(s) / rc * r_safe ** (p - 1.0)
        )
        return out

    def combination(self, z, amplitudes):
        out = np.zeros(np.shape(z))
        for i in range(self.n_points):
            if self.active[i] and amplitudes[i] != 0.0:
                out = out + amplitudes[i] * self.psi(z, i)
        return out

    def delta_combination(self, z, amplitudes):
        out = np.zeros(np.shape(z))
        for i in range(self.n_points):
            if self.active[i] and amplitudes[i] != 0.0:
                out = out + amplitudes[i] * self.delta_psi(z, i)
        return out


# ---------------------------------------------------------------------------
# Exact chart curvature integral and matched far-field tail
# ---------------------------------------------------------------------------

def chart_curvature_integral(L: float) -> float:
    """``int_{[-L,L]^2} 2/(1+|z|^2)^2`` with the x-integral in closed form."""

    def inner(y: float) -> float:
        a2 = 1.0 + y * y
        a = math.sqrt(a2)
        return 2.0 * L / (a2 * (a2 + L * L)) + 2.0 * math.atan(L / a) / (a2 * a)

    val, _ = quad(inner, -L, L, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def tail_mass(beta1: float, L: float, c_inf: float) -> float:
    """Mass of the matched far-field profile outside the chart square.

    The far field is the two-cone profile of order ``beta1`` whose
    far-field constant is ``c_inf``; its radial mass has a closed form and
    the square/disk mismatch ring is a 1D quadrature.
    """
    a1 = 1.0 + beta1
    lam = math.exp((math.log(2.0 * a1) - c_inf) / a1)
    p = 2.0 + 2.0 * beta1

    def profile_r(r):
        s = (lam * r) ** p
        return 4.0 * a1 * a1 * lam**p * r ** (2.0 * beta1 + 1.0) / (1.0 + s) ** 2

    ring, _ = quad(
        lambda r: 8.0 * math.acos(L / r) * profile_r(r),
        L,
        L * math.sqrt(2.0),
        epsabs=1e-13,
        epsrel=1e-13,
        limit=200,
    )
    annulus = 4.0 * math.pi * a1 / (1.0 + (lam * L * math.sqrt(2.0)) ** p)
    return ring + annulus


def _tail_mass_derivative(beta1: float, L: float, c_inf: float, step: float = 1e-6) -> float:
    return (tail_mass(beta1, L, c_inf + step) - tail_mass(beta1, L, c_inf - step)) / (2.0 * step)


def boundary_profile(problem: ConformalProblem, z, c_inf: float, enrichment=None, amplitudes=None):
    """Matched far-field Dirichlet data for the regular part on the ring.

    The boundary value of ``v`` is the two-cone model profile (far-field
    constant ``c_inf``) minus the background; it reproduces closed-form
    solutions exactly and captures the slow ``r^{-(2+2*beta1)}`` approach
    to the asymptote in general.  Enrichment cutoffs vanish at the ring, so
    the amplitudes do not enter.
    """
    z = np.asarray(z, dtype=complex)
    beta1 = problem.beta1
    a1 = 1.0 + beta1
    lam = math.exp((math.log(2.0 * a1) - c_inf) / a1)
    s = lam * np.abs(z)
    u_model = math.log(2.0 * a1 * lam) + beta1 * np.log(s) - np.log1p(s ** (2.0 + 2.0 * beta1))
    return u_model - background(problem, z)


# ---------------------------------------------------------------------------
# Discretization
# ---------------------------------------------------------------------------

class _Grid:
    """Uniform node grid on [-L, L]^2 with n cells per side."""

    def __init__(self, problem: ConformalProblem, n: int):
        if n < 8:
            raise ValueError("grid needs at least 8 cells per side")
        L = problem.half_width
        self.n = n
        self.h = 2.0 * L / n
        self.x = np.linspace(-L, L, n + 1)
        self.y = np.linspace(-L, L, n + 1)
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        self.Z = X + 1j * Y
        self.log_bg = _log_background_grid(problem, self.Z)
        self.g = 2.0 / (1.0 + np.abs(self.Z) ** 2) ** 2
        self.enrichment = CuspEnrichment(problem, self.h)
        # psi_i and its Laplacian on the grid, per finite point.  Near the
        # cone (cutoff plateau) the analytic Laplacian is exact and the
        # stencil cannot differentiate the cusp; in the cutoff zone the
        # discrete Laplacian of the sampled psi makes the enrichment's
        # truncation cancel against the field's own.
        self.psi_grid = [self.enrichment.psi(self.Z, i) for i in range(self.enrichment.n_points)]
        self.dpsi_grid = []
        for i in range(self.enrichment.n_points):
            analytic = self.enrichment.delta_psi(self.Z, i)
            if not self.enrichment.active[i]:
                self.dpsi_grid.append(analytic)
                continue
            discrete = np.zeros_like(analytic)
            discrete[1:-1, 1:-1] = _laplacian_5pt(self.psi_grid[i], self.h)
            r = np.abs(self.Z - problem.finite_positions[i])
            use_analytic = r <= 0.45 * self.enrichment.r_cut[i]
            dpsi = np.where(use_analytic, analytic, discrete)
            dpsi[r == 0.0] = 0.0  # value unused (closure row); avoid inf
            self.dpsi_grid.append(dpsi)
        # nodes close to a conic point get closure equations instead of the PDE
        sing = np.zeros_like(self.log_bg, dtype=bool)
        for zi in problem.finite_positions:
            sing |= np.abs(self.Z - zi) <= _SING_MASK_RADIUS * self.h
        sing[0, :] = sing[-1, :] = sing[:, 0] = sing[:, -1] = False
        self.singular = sing
        # cells whose center lies within max(2h, _NEAR_RADIUS) of a conic point
        # are integrated by singularity-aware subsampling; their corner nodes
        # leave the flux-form mass balance (the cusp breaks the stencil there)
        self.Zc = 0.25 * (self.Z[:-1, :-1] + self.Z[1:, :-1] + self.Z[:-1, 1:] + self.Z[1:, 1:])
        near = np.zeros(self.Zc.shape, dtype=bool)
        self.nearest_point = np.zeros(self.Zc.shape, dtype=int)
        self.near_radius = max(2.0 * self.h, _NEAR_RADIUS)
        if len(problem.finite_positions):
            dists = np.stack([np.abs(self.Zc - zi) for zi in problem.finite_positions])
            self.nearest_point = np.argmin(dists, axis=0)
            near = np.min(dists, axis=0) <= self.near_radius
        self.near_cells = near
        set_nodes = np.zeros_like(sing)
        idx = np.argwhere(near)
        if len(idx):
            for di in (0, 1):
                for dj in (0, 1):
                    set_nodes[idx[:, 0] + di, idx[:, 1] + dj] = True
        self.set_nodes = set_nodes
        # curvature-source integral over the near cells (4x4 Gauss-Legendre)
        # and the hole weights int_{near cells} |z - z_i|^{2 beta_i}
        self.g_near_integral = 0.0
        self.hole_weights = np.zeros(max(1, self.enrichment.n_points))
        if len(idx):
            gl_x, gl_w = np.polynomial.legendre.leggauss(4)
            fx = 0.5 * (gl_x + 1.0)
            wx = 0.5 * gl_w
            FX, FY = np.meshgrid(fx, fx, indexing="ij")
            W = np.outer(wx, wx)
            acc = 0.0
            for ci, cj in idx:
                zq = (self.x[ci] + FX * self.h) + 1j * (self.y[cj] + FY * self.h)
                acc += float(np.sum(W * 2.0 / (1.0 + np.abs(zq) ** 2) ** 2)) * self.h**2
            self.g_near_integral = acc
            self.hole_weights = _hole_weights(self, problem)
        # flux-form mass row coefficients: d(lapsumR)/dv_j for interior nodes,
        # with R the interior nodes outside the near set
        interior = np.zeros_like(sing)
        interior[1:-1, 1:-1] = True
        R = interior & ~set_nodes
        self.R_interior = R[1:-1, 1:-1]
        cnt = np.zeros(self.Z.shape)
        for sh in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            cnt += np.roll(R, sh, axis=(0, 1))
        self.dlap_coeff = (cnt - 4.0 * R)[1:-1, 1:-1].ravel()


def _ring_mask(n: int) -> np.ndarray:
    ring = np.zeros((n + 1, n + 1), dtype=bool)
    ring[0, :] = ring[-1, :] = ring[:, 0] = ring[:, -1] = True
    return ring


def _laplacian_5pt(v: np.ndarray, h: float) -> np.ndarray:
    """5-point Laplacian on interior nodes (shape (n-1, n-1))."""
    return (
        v[2:, 1:-1] + v[:-2, 1:-1] + v[1:-1, 2:] + v[1:-1, :-2] - 4.0 * v[1:-1, 1:-1]
    ) / h**2


def _corner_square_weight(beta: float, delta: float) -> float:
    """``int_{[0,delta]^2} r^{2*beta} dA`` for the corner-singular sub-cell."""
    p = 2.0 * beta + 2.0
    val, _ = quad(lambda th: math.cos(th) ** (-p), 0.0, math.pi / 4.0, epsabs=1e-12, epsrel=1e-12)
    return 2.0 * delta**p * val / p


def _hole_weights(g: "_Grid", problem: ConformalProblem) -> np.ndarray:
    """``int_{near cells} |z - z_i|^{2*beta_i}`` per finite point."""
    n_pts = g.enrichment.n_points
    out = np.zeros(n_pts)
    m = _SUBSAMPLE
    delta = g.h / m
    frac = (np.arange(m) + 0.5) / m
    fx, fy = np.meshgrid(frac, frac, indexing="ij")
    corner_w = {}
    for ci, cj in np.argwhere(g.near_cells):
        zsub = (g.x[ci] + fx * g.h) + 1j * (g.y[cj] + fy * g.h)
        for i in range(n_pts):
            bi = problem.finite_orders[i]
            r = np.abs(zsub - problem.finite_positions[i])
            touching = r < delta
            vals = np.where(touching, 0.0, r ** (2.0 * bi)) * delta**2
            w = float(np.sum(vals))
            if np.any(touching):
                if i not in corner_w:
                    corner_w[i] = _corner_square_weight(bi, delta)
                w += corner_w[i] * int(np.count_nonzero(touching))
            out[i] += w
    return out


# ---------------------------------------------------------------------------
# Solution container
# ---------------------------------------------------------------------------

@dataclass
class ConformalSolution:
    """A solved conformal factor on the chart grid.

    ``v`` is the regular part on the (n+1)x(n+1) node grid, ``c_inf`` the
    solved far-field constant, ``amplitudes`` the cusp amplitudes at the
    finite conic points; ``u = v + background`` (infinite at conic nodes).
    """

    problem: ConformalProblem
    n: int
    v: np.ndarray
    c_inf: float
    amplitudes: np.ndarray
    residual_norm: float
    newton_steps: int
    converged: bool
    _grid: "_Grid" = field(repr=False, default=None)
    _cell_mass: np.ndarray = field(repr=False, default=None)

    @property
    def divisor(self) -> Divisor:
        return self.problem.divisor

    @property
    def half_width(self) -> float:
        return self.problem.half_width

    @property
    def grid(self) -> "_Grid":
        if self._grid is None:
            self._grid = _Grid(self.problem, self.n)
        return self._grid

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def y(self) -> np.ndarray:
        return self.grid.y

    @property
    def bg(self) -> np.ndarray:
        """Full background (logs + cusp terms) on the grid."""
        g = self.grid
        out = g.log_bg.copy()
        for i in range(g.enrichment.n_points):
            if self.amplitudes[i] != 0.0:
                out = out + self.amplitudes[i] * g.psi_grid[i]
        return out

    @property
    def u(self) -> np.ndarray:
        return self.v + self.bg

    def interp_v(self, z) -> np.ndarray:
        """Bilinear interpolation of the regular part at complex points."""
        z = np.asarray(z, dtype=complex)
        L, h = self.half_width, self.h
        xi = np.clip((z.real + L) / h, 0.0, self.n - 1e-12)
        yi = np.clip((z.imag + L) / h, 0.0, self.n - 1e-12)
        i0 = np.floor(xi).astype(int)
        j0 = np.floor(yi).astype(int)
        fx = xi - i0
        fy = yi - j0
        v = self.v
        out = (
            v[i0, j0] * (1 - fx) * (1 - fy)
            + v[i0 + 1, j0] * fx * (1 - fy)
            + v[i0, j0 + 1] * (1 - fx) * fy
            + v[i0 + 1, j0 + 1] * fx * fy
        )
        return out if out.ndim else float(out)

    def u_at(self, z):
        """Conformal exponent ``u`` at arbitrary chart points (exact background)."""
        return self.interp_v(z) + background(
            self.problem, z, amplitudes=self.amplitudes, enrichment=self.grid.enrichment
        )

    def factor_at(self, z):
        """Conformal factor ``e^{2u}`` at arbitrary chart points."""
        return np.exp(2.0 * self.u_at(z))

    def boundary_ring_consistency(self) -> float:
        """Max deviation of ``u + (2+beta1)*log|z|`` from ``c_inf`` on the ring.

        Measures how closely the far field has entered the asymptotic
        regime ``u ~ c_inf - (2+beta1)*log|z|`` at the chart edge; decays
        like ``L^{-(2+2*beta1)}``.
        """
        g = self.grid
        ring = _ring_mask(g.n)
        vals = self.v[ring] + g.log_bg[ring] + (2.0 + self.problem.beta1) * np.log(np.abs(g.Z[ring]))
        return float(np.max(np.abs(vals - self.c_inf)))

    def cell_masses(self) -> np.ndarray:
        """Integral of ``e^{2u}`` over each grid cell (n x n array).

        Far cells use the midpoint rule with the background evaluated
        exactly at cell centers; cells near a conic point are subsampled
        with the touching sub-cells integrated in polar form against the
        ``r^{2*beta}`` weight (integrable since beta > -1).
        """
        if self._cell_mass is None:
            self._cell_mass = _cell_masses(self)
        return self._cell_mass

    def chart_mass(self) -> float:
        return float(np.sum(self.cell_masses()))


# ---------------------------------------------------------------------------
# Near-cone quadrature
# ---------------------------------------------------------------------------

class _NearCellQuadrature:
    """Subsampled integrator for cells near a conic point.

    Integrates ``e^{2u}`` (with ``v`` bilinear per cell and the background
    evaluated exactly) over a near cell; the sub-cells touching the conic
    point are integrated in polar form against the ``r^{2*beta}`` weight.
    Optionally returns gradients w.r.t. the four corner values of ``v`` and
    w.r.t. the cusp amplitudes.
    """

    def __init__(self, g: _Grid, problem: ConformalProblem):
        self.g = g
        self.problem = problem
        m = _SUBSAMPLE
        frac = (np.arange(m) + 0.5) / m
        self.fx, self.fy = np.meshgrid(frac, frac, indexing="ij")
        self.delta = g.h / m
        self.corner_w = {
            float(bi): _corner_square_weight(float(bi), self.delta)
            for bi in problem.finite_orders
        }
        self.weights = (
            (1 - self.fx) * (1 - self.fy),
            self.fx * (1 - self.fy),
            (1 - self.fx) * self.fy,
            self.fx * self.fy,
        )

    def cell(self, v: np.ndarray, amplitudes: np.ndarray, ci: int, cj: int, want_grad: bool = False):
        g, problem = self.g, self.problem
        zs = problem.finite_positions
        betas = problem.finite_orders
        i_near = int(g.nearest_point[ci, cj])
        zi, bi = zs[i_near], betas[i_near]
        zsub = (g.x[ci] + self.fx * g.h) + 1j * (g.y[cj] + self.fy * g.h)
        corners = (v[ci, cj], v[ci + 1, cj], v[ci, cj + 1], v[ci + 1, cj + 1])
        vsub = sum(c * w for c, w in zip(corners, self.weights))
        smooth = vsub - (2.0 + problem.beta1 + problem.alpha) * 0.5 * np.log1p(np.abs(zsub) ** 2)
        psis = []
        for j in range(len(zs)):
            psi_j = g.enrichment.psi(zsub, j)
            psis.append(psi_j)
            if amplitudes[j] != 0.0:
                smooth = smooth + amplitudes[j] * psi_j
            if j != i_near:
                smooth = smooth + betas[j] * np.log(np.maximum(np.abs(zsub - zs[j]), 1e-300))
        r = np.abs(zsub - zi)
        touching = r < self.delta  # sub-cells whose closure contains z_i
        area_w = np.where(touching, self.corner_w[float(bi)], self.delta**2 * r ** (2.0 * bi))
        contrib = np.exp(2.0 * smooth) * area_w
        mass = float(np.sum(contrib))
        if not want_grad:
            return mass, None, None
        grad_v = tuple(2.0 * float(np.sum(contrib * w)) for w in self.weights)
        grad_a = tuple(2.0 * float(np.sum(contrib * psis[j])) for j in range(len(zs)))
        return mass, grad_v, grad_a


def _cell_masses(sol: ConformalSolution) -> np.ndarray:
    g = sol.grid
    problem = sol.problem
    h = g.h
    v = sol.v
    # midpoint rule everywhere first
    vc = 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:])
    bgc = _log_background_grid(problem, g.Zc)
    for i in range(g.enrichment.n_points):
        if sol.amplitudes[i] != 0.0:
            bgc = bgc + sol.amplitudes[i] * g.enrichment.psi(g.Zc, i)
    with np.errstate(over="ignore"):
        mass = h * h * np.exp(2.0 * (vc + bgc))
    if not g.near_cells.any():
        return mass
    quadr = _NearCellQuadrature(g, problem)
    for ci, cj in np.argwhere(g.near_cells):
        mass[ci, cj] = quadr.cell(v, sol.amplitudes, ci, cj)[0]
    return mass


# ---------------------------------------------------------------------------
# Residual
# ---------------------------------------------------------------------------

def residual_field(
    problem: ConformalProblem,
    v: np.ndarray,
    amplitudes=None,
    n: int | None = None,
) -> np.ndarray:
    """Pointwise PDE residual of the regular-part equation.

    ``Delta_h v + e^{2(v+bg)} - (2+beta1+alpha)*g - sum_i a_i*Delta psi_i``
    on a full (n+1)x(n+1) node field ``v`` (boundary included).  Returns an
    array of the same shape with NaN on the boundary ring and at masked
    conic nodes; exact solutions give O(h^2) residuals away from conic
    points.
    """
    v = np.asarray(v, dtype=float)
    if n is None:
        n = v.shape[0] - 1
    g = _Grid(problem, n)
    if v.shape != g.Z.shape:
        raise ValueError(f"v must have shape {g.Z.shape}, got {v.shape}")
    if amplitudes is None:
        amplitudes = np.zeros(g.enrichment.n_points)
    coef = 2.0 + problem.beta1 + problem.alpha
    bg = g.log_bg.copy()
    extra = np.zeros_like(v)
    for i in range(g.enrichment.n_points):
        if amplitudes[i] != 0.0:
            bg = bg + amplitudes[i] * g.psi_grid[i]
            extra = extra + amplitudes[i] * g.dpsi_grid[i]
    out = np.full_like(v, np.nan)
    lap = _laplacian_5pt(v, g.h)
    with np.errstate(over="ignore"):
        src = np.exp(2.0 * (v[1:-1, 1:-1] + bg[1:-1, 1:-1]))
    out[1:-1, 1:-1] = lap + src - coef * g.g[1:-1, 1:-1] + extra[1:-1, 1:-1]
    out[g.singular] = np.nan
    return out


# ---------------------------------------------------------------------------
# Newton solve
# ---------------------------------------------------------------------------

def _apply_boundary(problem, g: _Grid, v, c_inf) -> None:
    ring = _ring_mask(g.n)
    v[ring] = boundary_profile(problem, g.Z[ring], c_inf)


def _boundary_dc(problem, g: _Grid, c_inf: float, step: float = 1e-6) -> np.ndarray:
    """d(ring data)/d(c_inf) on the full grid (zero off the ring)."""
    ring = _ring_mask(g.n)
    out = np.zeros(g.Z.shape)
    zr = g.Z[ring]
    out[ring] = (
        boundary_profile(problem, zr, c_inf + step) - boundary_profile(problem, zr, c_inf - step)
    ) / (2.0 * step)
    return out


def _bilinear_weights(g: _Grid, z: complex):
    """Node indices and weights interpolating at a chart point."""
    L, h, n = g.x[-1], g.h, g.n
    xi = min(max((z.real + L) / h, 0.0), n - 1e-12)
    yi = min(max((z.imag + L) / h, 0.0), n - 1e-12)
    i0, j0 = int(xi), int(yi)
    fx, fy = xi - i0, yi - j0
    return (
        ((i0, j0), (1 - fx) * (1 - fy)),
        ((i0 + 1, j0), fx * (1 - fy)),
        ((i0, j0 + 1), (1 - fx) * fy),
        ((i0 + 1, j0 + 1), fx * fy),
    )


class _System:
    """Assembles the bordered Newton system for (v, c_inf, a)."""

    def __init__(self, problem: ConformalProblem, g: _Grid, pin_gauge: float | None):
        self.problem = problem
        self.g = g
        self.pin_gauge = pin_gauge
        self.total = problem.mass_target
        self.G_exact = chart_curvature_integral(problem.half_width)
        self.quadr = _NearCellQuadrature(g, problem) if g.near_cells.any() else None
        self.n_pts = g.enrichment.n_points
        self.active = g.enrichment.active
        # local smooth background at each conic point (logs of the others)
        zs = problem.finite_positions
        betas = problem.finite_orders
        self.local_smooth = np.zeros(max(1, self.n_pts))
        for i in range(self.n_pts):
            s = -(2.0 + problem.beta1 + problem.alpha) * 0.5 * math.log(1.0 + abs(zs[i]) ** 2)
            for j in range(self.n_pts):
                if j != i:
                    s += betas[j] * math.log(abs(zs[i] - zs[j]))
            self.local_smooth[i] = s
        self.bilinear = [_bilinear_weights(g, zs[i]) for i in range(self.n_pts)]
        self.psi_cross = np.zeros((max(1, self.n_pts), max(1, self.n_pts)))
        for i in range(self.n_pts):
            for j in range(self.n_pts):
                if i != j:
                    self.psi_cross[i, j] = float(g.enrichment.psi(zs[i], j))

    def local_constant(self, v, a, i):
        """Smooth local value c_i of u - beta_i log r at z_i."""
        vhat = sum(w * v[idx] for idx, w in self.bilinear[i])
        s = self.local_smooth[i]
        for j in range(self.n_pts):
            if j != i and a[j] != 0.0:
                s += a[j] * self.psi_cross[i, j]
        return vhat + s

    def assemble(self, v, c_inf, a, freeze_a: bool = False):
        problem, g = self.problem, self.g
        n = g.n
        h2 = g.h**2
        m = n - 1
        N = m * m
        coef = 2.0 + problem.beta1 + problem.alpha
        inter = slice(1, n)
        n_act = self.n_pts

        bg = g.log_bg.copy()
        extra = np.zeros_like(v)
        for i in range(n_act):
            if self.active[i]:
                bg = bg + a[i] * g.psi_grid[i]
                extra = extra + a[i] * g.dpsi_grid[i]

        sing_int = g.singular[inter, inter]
        with np.errstate(over="ignore"):
            src = np.exp(2.0 * (v[inter, inter] + bg[inter, inter]))
        src = np.where(sing_int, 0.0, src)

        lap = _laplacian_5pt(v, g.h)
        F_pde = lap + src - coef * g.g[inter, inter] + extra[inter, inter]
        closure = v[inter, inter] - 0.25 * (
            v[2:, inter] + v[:-2, inter] + v[inter, 2:] + v[inter, :-2]
        )
        F = np.where(sing_int, closure, F_pde).ravel()

        # mass / gauge equation
        dq_near_v = np.zeros(N)
        dq_near_a = np.zeros(max(1, n_act))
        if self.pin_gauge is not None:
            F_mass = c_inf - self.pin_gauge
        else:
            lapsum_R = h2 * float(np.sum(lap[g.R_interior]))
            q_near = 0.0
            if self.quadr is not None:
                for ci, cj in np.argwhere(g.near_cells):
                    val, grad_v, grad_a = self.quadr.cell(v, a, ci, cj, want_grad=True)
                    q_near += val
                    for (di, dj), gval in zip(((0, 0), (1, 0), (0, 1), (1, 1)), grad_v):
                        ii, jj = ci + di, cj + dj
                        if 1 <= ii <= m and 1 <= jj <= m:
                            dq_near_v[(ii - 1) * m + (jj - 1)] += gval
                    for j in range(n_act):
                        dq_near_a[j] += grad_a[j]
            hole_term = 0.0
            for i in range(n_act):
                if self.active[i] and a[i] != 0.0:
                    hole_term += a[i] * g.enrichment.powers[i] ** 2 * g.hole_weights[i]
            F_mass = (
                coef * (self.G_exact - g.g_near_integral)
                - lapsum_R
                + q_near
                + hole_term
                + tail_mass(problem.beta1, g.x[-1], c_inf)
                - self.total
            ) / self.total

        # cusp-amplitude equations: a_i + e^{2 c_i} / p_i^2 = 0 (active only);
        # in the frozen phase the amplitudes are held at their current values
        F_a = np.zeros(n_act)
        C_i = np.zeros(n_act)
        for i in range(n_act):
            if not self.active[i]:
                F_a[i] = a[i]
            elif freeze_a:
                F_a[i] = 0.0
            else:
                p2 = g.enrichment.powers[i] ** 2
                C_i[i] = math.exp(2.0 * self.local_constant(v, a, i)) / p2
                F_a[i] = a[i] + C_i[i]

        # ---- Jacobian ----
        sing_flat = sing_int.ravel()
        diag = np.where(sing_flat, 1.0, -4.0 / h2 + 2.0 * src.ravel())
        off = np.where(sing_flat, -0.25, 1.0 / h2)
        east = off.copy()
        east[(np.arange(N) % m) == m - 1] = 0.0
        west = off.copy()
        west[(np.arange(N) % m) == 0] = 0.0
        A = sp.diags(
            [diag, east[:-1], west[1:], off[:-m], off[m:]],
            [0, 1, -1, m, -m],
            shape=(N, N),
            format="csr",
        )

        # c_inf column for PDE rows (ring data sensitivity)
        db = _boundary_dc(problem, g, c_inf)
        col_grid = db[0:-2, 1:-1] + db[2:, 1:-1] + db[1:-1, 0:-2] + db[1:-1, 2:]
        col_c = np.where(sing_flat, 0.0, col_grid.ravel() / h2)

        # amplitude columns for PDE rows: 2*src*psi_i - Delta psi_i
        cols_a = []
        for i in range(n_act):
            if self.active[i]:
                vals = 2.0 * src.ravel() * g.psi_grid[i][inter, inter].ravel() + np.where(
                    sing_flat, 0.0, g.dpsi_grid[i][inter, inter].ravel()
                )
                vals = np.where(sing_flat, 0.0, vals)
            else:
                vals = np.zeros(N)
            cols_a.append(sp.csr_matrix(vals.reshape(-1, 1)))

        # mass row
        if self.pin_gauge is not None:
            row_mass_v = np.zeros(N)
            dmass_dc = 1.0
            row_mass_a = np.zeros(n_act)
        else:
            row_mass_v = (-self.g.dlap_coeff + dq_near_v) / self.total
            ring_dc = float(
                np.sum(db[0, 1:-1]) + np.sum(db[-1, 1:-1]) + np.sum(db[1:-1, 0]) + np.sum(db[1:-1, -1])
            )
            dmass_dc = (-ring_dc + _tail_mass_derivative(problem.beta1, g.x[-1], c_inf)) / self.total
            row_mass_a = np.zeros(n_act)
            for i in range(n_act):
                if self.active[i]:
                    row_mass_a[i] = (
                        g.enrichment.powers[i] ** 2 * g.hole_weights[i] + dq_near_a[i]
                    ) / self.total

        # amplitude rows (identity pins when frozen or inactive)
        rows_a_v = sp.lil_matrix((n_act, N))
        block_aa = np.eye(max(1, n_act))
        for i in range(n_act):
            if freeze_a or not self.active[i]:
                continue
            for (ii, jj), w in self.bilinear[i]:
                if 1 <= ii <= m and 1 <= jj <= m:
                    rows_a_v[i, (ii - 1) * m + (jj - 1)] += 2.0 * C_i[i] * w
            for j in range(n_act):
                if j != i and self.active[j]:
                    block_aa[i, j] = 2.0 * C_i[i] * self.psi_cross[i, j]

        if n_act:
            border_cols = sp.hstack([sp.csr_matrix(col_c.reshape(-1, 1))] + cols_a, format="csr")
            mass_border = np.concatenate([[dmass_dc], row_mass_a])
            a_border = np.column_stack([np.zeros(n_act), block_aa])
            J = sp.bmat(
                [
                    [A, border_cols],
                    [sp.csr_matrix(row_mass_v.reshape(1, -1)), sp.csr_matrix(mass_border.reshape(1, -1))],
                    [rows_a_v.tocsr(), sp.csr_matrix(a_border)],
                ],
                format="csc",
            )
            Fvec = np.concatenate([F, [F_mass], F_a])
        else:
            J = sp.bmat(
                [
                    [A, sp.csr_matrix(col_c.reshape(-1, 1))],
                    [sp.csr_matrix(row_mass_v.reshape(1, -1)), sp.csr_matrix([[dmass_dc]])],
                ],
                format="csc",
            )
            Fvec = np.concatenate([F, [F_mass]])
        return Fvec, J


def _newton_solve(problem, n, tol, max_iter, min_step, v0=None, c0=None, a0=None) -> ConformalSolution:
    g = _Grid(problem, n)
    n_pts = g.enrichment.n_points
    # scaling-invariant divisors carry an exact solution family along which
    # the mass is constant: pin the gauge instead of balancing mass
    pin_gauge = None
    if _is_football_like(problem.divisor):
        pin_gauge = math.log(2.0 * (1.0 + problem.beta1))
        if c0 is None:
            c0 = pin_gauge
    system = _System(problem, g, pin_gauge)

    if c0 is None and v0 is not None:
        ring = _ring_mask(n)
        v0a = np.asarray(v0, dtype=float)
        vals = v0a[ring] + g.log_bg[ring] + (2.0 + problem.beta1) * np.log(np.abs(g.Z[ring]))
        c0 = float(np.mean(vals))
    if c0 is None:
        # constant start matching the chart curvature mass
        bgc = g.log_bg[1:-1, 1:-1]
        finite_bg = bgc[np.isfinite(bgc) & ~g.singular[1:-1, 1:-1]]
        mass_bg = float(np.sum(np.exp(2.0 * finite_bg))) * g.h**2
        c0 = 0.5 * math.log(problem.mass_target / mass_bg)
    if v0 is None:
        v = np.full_like(g.log_bg, c0)
    else:
        v = np.array(v0, dtype=float, copy=True)
        if v.shape != g.log_bg.shape:
            raise ValueError(f"v0 must have shape {g.log_bg.shape}")
    c_inf = float(c0)
    _apply_boundary(problem, g, v, c_inf)
    if a0 is not None:
        a = np.array(a0, dtype=float, copy=True)
    else:
        a = np.zeros(max(1, n_pts))[:n_pts]
        a = np.array([-math.exp(2.0 * system.local_constant(v, np.zeros(n_pts), i))
                      / g.enrichment.powers[i] ** 2 if g.enrichment.active[i] else 0.0
                      for i in range(n_pts)])

    # two phases: converge the field with frozen cusp amplitudes first, then
    # release the amplitude coupling from inside its contraction basin
    has_active = bool(np.any(g.enrichment.active))
    steps = 0
    if has_active and v0 is None:
        v, c_inf, a, _, s1 = _newton_loop(
            problem, g, system, v, c_inf, a, max(math.sqrt(tol) * 1e-2, tol), max_iter, min_step, freeze_a=True
        )
        steps += s1
    v, c_inf, a, norm, s2 = _newton_loop(
        problem, g, system, v, c_inf, a, tol, max_iter, min_step, freeze_a=False
    )
    steps += s2
    return ConformalSolution(
        problem=problem,
        n=n,
        v=v,
        c_inf=c_inf,
        amplitudes=np.asarray(a, dtype=float),
        residual_norm=norm,
        newton_steps=steps,
        converged=True,
        _grid=g,
    )


def _newton_loop(problem, g, system, v, c_inf, a, tol, max_iter, min_step, freeze_a):
    n = g.n
    inter = slice(1, n)
    F, J = system.assemble(v, c_inf, a, freeze_a=freeze_a)
    norm = float(np.max(np.abs(F)))
    steps = 0
    for it in range(max_iter):
        if norm <= tol:
            break
        lu = spla.splu(J)
        delta = lu.solve(-F)
        dv = delta[: (n - 1) ** 2].reshape(n - 1, n - 1)
        dc = float(delta[(n - 1) ** 2])
        da = delta[(n - 1) ** 2 + 1 :]

        step = 1.0
        # the cusp amplitudes are O(1) quantities; cap their update so a step
        # cannot fling them out of the contraction basin
        if da.size and np.max(np.abs(da)) > 0.5:
            step = 0.5 / float(np.max(np.abs(da)))
        merit = float(np.linalg.norm(F))
        while True:
            v_try = v.copy()
            v_try[inter, inter] = v[inter, inter] + step * dv
            c_try = c_inf + step * dc
            a_try = a + step * da
            _apply_boundary(problem, g, v_try, c_try)
            F_try, J_try = system.assemble(v_try, c_try, a_try, freeze_a=freeze_a)
            merit_try = float(np.linalg.norm(F_try))
            if np.isfinite(merit_try) and merit_try <= (1.0 - 1e-4 * step) * merit:
                break
            step *= 0.5
            if step < min_step:
                raise SolveError(
                    f"Armijo line search stalled at step {step:.2e} (residual {norm:.3e})",
                    residual=norm,
                    iterations=it,
                )
        v, c_inf, a, F, J = v_try, c_try, a_try, F_try, J_try
        norm = float(np.max(np.abs(F)))
        steps = it + 1

    if norm > tol:
        raise SolveError(
            f"Newton did not reach tol={tol:.1e} in {max_iter} iterations (residual {norm:.3e})",
            residual=norm,
            iterations=steps,
        )
    return v, c_inf, a, norm, steps


class ConformalSolver(BaseEstimator):
    """Damped-Newton solver estimator for the chart Liouville problem.

    Parameters
    ----------
    half_width : chart half-width L (grid covers [-L, L]^2).
    n_cells : cells per side; spacing is h = 2L/n_cells.
    tol : max-norm residual tolerance for Newton termination.
    max_iter : Newton iteration cap.
    min_step : smallest Armijo step before declaring failure.

    After ``fit(divisor)`` the solved field is available as ``solution_``
    (a :class:`ConformalSolution`); ``fit`` accepts optional warm-start
    fields ``v0`` / ``a0``.
    """

    def __init__(
        self,
        half_width: float = 8.0,
        n_cells: int = 512,
        tol: float = 1e-10,
        max_iter: int = 40,
        min_step: float = 1.0 / 1024.0,
    ):
        self.half_width = half_width
        self.n_cells = n_cells
        self.tol = tol
        self.max_iter = max_iter
        self.min_step = min_step

    def fit(self, divisor: Divisor, v0=None, c0=None, a0=None):
        problem = ConformalProblem(divisor, half_width=self.half_width)
        self.solution_ = _newton_solve(
            problem,
            n=self.n_cells,
            tol=self.tol,
            max_iter=self.max_iter,
            min_step=self.min_step,
            v0=v0,
            c0=c0,
            a0=a0,
        )
        return self

    def predict(self, z):
        """Conformal factor ``e^{2u}`` at chart points (after ``fit``)."""
        if not hasattr(self, "solution_"):
            raise RuntimeError("solver has not been fitted")
        return self.solution_.factor_at(z)


def solve(
    divisor: Divisor,
    half_width: float = 8.0,
    n_cells: int = 512,
    tol: float = 1e-10,
    max_iter: int = 40,
    v0=None,
    c0=None,
    a0=None,
) -> ConformalSolution:
    """Functional wrapper around :class:`ConformalSolver`."""
    est = ConformalSolver(half_width=half_width, n_cells=n_cells, tol=tol, max_iter=max_iter)
    est.fit(divisor, v0=v0, c0=c0, a0=a0)
    return est.solution_


def solve_dirichlet(
    problem: ConformalProblem,
    n: int,
    boundary_v,
    amplitudes=None,
    tol: float = 1e-10,
    max_iter: int = 40,
    v0=None,
) -> ConformalSolution:
    """Plain-Dirichlet control solve with frozen cusp amplitudes.

    ``boundary_v`` prescribes ``v`` on the ring (full-grid array or a
    callable of the complex ring coordinates); no mass closure and no
    unknown constant.  Used for manufactured-solution convergence studies
    and to measure pure discretization error against closed forms.
    """
    g = _Grid(problem, n)
    h2 = g.h**2
    coef = 2.0 + problem.beta1 + problem.alpha
    inter = slice(1, n)
    n_pts = g.enrichment.n_points
    a = np.zeros(n_pts) if amplitudes is None else np.asarray(amplitudes, dtype=float)

    bg = g.log_bg.copy()
    extra = np.zeros_like(bg)
    for i in range(n_pts):
        if a[i] != 0.0:
            bg = bg + a[i] * g.psi_grid[i]
            extra = extra + a[i] * g.dpsi_grid[i]

    v = np.zeros_like(bg) if v0 is None else np.array(v0, dtype=float, copy=True)
    ring = _ring_mask(n)
    if callable(boundary_v):
        v[ring] = boundary_v(g.Z[ring])
    else:
        b = np.broadcast_to(np.asarray(boundary_v, dtype=float), bg.shape)
        v[ring] = b[ring]

    sing_int = g.singular[inter, inter]
    m = n - 1
    N = m * m

    def system(vf):
        with np.errstate(over="ignore"):
            src = np.exp(2.0 * (vf[inter, inter] + bg[inter, inter]))
        src = np.where(sing_int, 0.0, src)
        F_pde = _laplacian_5pt(vf, g.h) + src - coef * g.g[inter, inter] + extra[inter, inter]
        closure = vf[inter, inter] - 0.25 * (
            vf[2:, inter] + vf[:-2, inter] + vf[inter, 2:] + vf[inter, :-2]
        )
        F = np.where(sing_int, closure, F_pde).ravel()
        sing_flat = sing_int.ravel()
        diag = np.where(sing_flat, 1.0, -4.0 / h2 + 2.0 * src.ravel())
        off = np.where(sing_flat, -0.25, 1.0 / h2)
        east = off.copy()
        east[(np.arange(N) % m) == m - 1] = 0.0
        west = off.copy()
        west[(np.arange(N) % m) == 0] = 0.0
        J = sp.diags(
            [diag, east[:-1], west[1:], off[:-m], off[m:]],
            [0, 1, -1, m, -m],
            shape=(N, N),
            format="csc",
        )
        return F, J

    F, J = system(v)
    norm = float(np.max(np.abs(F)))
    steps = 0
    for it in range(max_iter):
        if norm <= tol:
            break
        delta = spla.splu(J).solve(-F)
        dv = delta.reshape(m, m)
        step = 1.0
        merit = float(np.linalg.norm(F))
        while True:
            v_try = v.copy()
            v_try[inter, inter] = v[inter, inter] + step * dv
            F_try, J_try = system(v_try)
            merit_try = float(np.linalg.norm(F_try))
            if np.isfinite(merit_try) and merit_try <= (1.0 - 1e-4 * step) * merit:
                break
            step *= 0.5
            if step < 1.0 / 1024.0:
                raise SolveError("Dirichlet line search stalled", residual=norm, iterations=it)
        v, F, J = v_try, F_try, J_try
        norm = float(np.max(np.abs(F)))
        steps = it + 1
    if norm > tol:
        raise SolveError(
            f"Dirichlet Newton did not reach tol={tol:.1e} (residual {norm:.3e})",
            residual=norm,
            iterations=steps,
        )
    return ConformalSolution(
        problem=problem,
        n=n,
        v=v,
        c_inf=float(np.mean(v[0, :])),
        amplitudes=a,
        residual_norm=norm,
        newton_steps=steps,
        converged=True,
        _grid=g,
    )


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

def verify_gauss_bonnet(solution: ConformalSolution) -> float:
    """Relative error of chart quadrature + matched tail against 2*pi*(2+|D|)."""
    total = solution.problem.mass_target
    mass = solution.chart_mass() + tail_mass(
        solution.problem.beta1, solution.half_width, solution.c_inf
    )
    return (mass - total) / total


def lemma33_bounds_check(solution: ConformalSolution, t0: float, n_levels: int = 24) -> dict:
    """Check the singular-free component level-set bounds on a t-ladder.

    For a connected superlevel component at ``t0`` containing no conic
    point, with ``H`` its max of ``u``: the weighted area obeys
    ``a(t) >= 4*pi*(1 - e^{t-H})`` on [t0, H], and where ``a(t) <= 2*pi``
    the flat area obeys ``b(t) >= 4*pi*e^{-H}*(e^{-t} - e^{-H})``.  Returns
    the worst signed slack of each bound (negative = violation), relative
    to 4*pi.
    """
    from . import levelset

    regions = levelset.extract(solution, t0)
    clean = [r for r in regions if not r.contains_singularity]
    if not clean:
        raise ValueError("no singularity-free component at this level")
    base = max(clean, key=lambda r: r.area)
    H = levelset.component_max_u(solution, base)
    ts = np.linspace(t0, H - 1e-3 * (H - t0), n_levels)
    worst_a = math.inf
    worst_b = math.inf
    rows = []
    for t in ts:
        sub = levelset.component_restriction(solution, base, t)
        if sub is None:
            continue
        a_val, b_val = sub
        bound_a = 4.0 * math.pi * (1.0 - math.exp(t - H))
        slack_a = (a_val - bound_a) / (4.0 * math.pi)
        worst_a = min(worst_a, slack_a)
        slack_b = math.nan
        if a_val <= 2.0 * math.pi:
            bound_b = 4.0 * math.pi * math.exp(-H) * (math.exp(-t) - math.exp(-H))
            slack_b = (b_val - bound_b) / (4.0 * math.pi)
            worst_b = min(worst_b, slack_b)
        rows.append((float(t), a_val, b_val, slack_a, slack_b))
    return {"H": H, "worst_a_slack": worst_a, "worst_b_slack": worst_b, "rows": rows}
