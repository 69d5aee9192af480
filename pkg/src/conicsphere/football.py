"""Closed-form football metrics and their exact level-set profiles.

A football is the constant-curvature-1 sphere with two equal conic points
of order ``beta`` (cone angle ``2*pi*(1+beta)``), placed at 0 and infinity
in the stereographic chart.  Its conformal factor is

    e^{2u}(z) = 4*(1+beta)^2 * |z|^{2*beta} / (1 + |z|^{2+2*beta})^2,

which solves ``Delta u = -exp(2u)`` away from the poles.  The superlevel
sets ``{u > t}`` are the disks ``|z| < rho(t)`` with ``rho`` determined by
inverting the (strictly decreasing, for beta < 0) radial factor, and their
curvature-weighted / flat areas have closed forms used as oracles across
the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FootballMetric",
    "conformal_factor",
    "log_factor",
    "rho_from_t",
    "a_profile",
    "b_profile",
    "ode_check",
    "pole_distance",
    "mass_within_radius",
]

_BRACKET_LO = 1e-12
_BRACKET_HI = 1e12
_RHO_RTOL = 1e-12


@dataclass(frozen=True)
class FootballMetric:
    """Football with conic order ``beta`` in (-1, 0] at both poles."""

    beta: float

    def __post_init__(self):
        b = float(self.beta)
        if not (-1.0 < b <= 0.0):
            raise ValueError(f"football order must lie in (-1, 0], got {b}")
        object.__setattr__(self, "beta", b)

    @property
    def alpha(self) -> float:
        """Cone angle fraction: cone angle is ``2*pi*alpha`` at each pole."""
        return 1.0 + self.beta

    @property
    def total_area(self) -> float:
        return 4.0 * math.pi * (1.0 + self.beta)


def _abs_z(z) -> np.ndarray:
    return np.abs(np.asarray(z, dtype=complex))


def conformal_factor(metric: FootballMetric, z):
    """Factor ``e^{2u}`` at points ``z`` (complex scalar or array).

    Singular at the origin for ``beta < 0``; evaluating there raises.
    """
    r = _abs_z(z)
    beta = metric.beta
    if beta < 0.0 and np.any(r == 0.0):
        raise ValueError("conformal factor is singular at z = 0 for beta < 0")
    a1 = 1.0 + beta
    out = 4.0 * a1 * a1 * r ** (2.0 * beta) / (1.0 + r ** (2.0 + 2.0 * beta)) ** 2
    return out if out.ndim else float(out)


def log_factor(metric: FootballMetric, z):
    """The conformal exponent ``u = 0.5*log(e^{2u})`` at ``z``."""
    r = _abs_z(z)
    beta = metric.beta
    if beta < 0.0 and np.any(r == 0.0):
        raise ValueError("u is singular at z = 0 for beta < 0")
    with np.errstate(divide="ignore"):
        out = (
            math.log(2.0 * (1.0 + beta))
            + beta * np.log(r)
            - np.log1p(r ** (2.0 + 2.0 * beta))
        )
    return out if out.ndim else float(out)


def _log_radial_factor(beta: float, log_rho):
    """log of the radial factor as a function of log(rho); decreasing for beta<0."""
    a1 = 1.0 + beta
    s = np.exp((2.0 + 2.0 * beta) * log_rho)
    return math.log(4.0 * a1 * a1) + 2.0 * beta * log_rho - 2.0 * np.log1p(s)


def rho_from_t(metric: FootballMetric, t):
    """Invert ``e^{2t} = e^{2u}(rho)`` for the superlevel radius ``rho``.

    For ``beta < 0`` the radial factor decreases strictly from +inf to 0,
    so every real ``t`` has a unique root; it is found by bisection on
    ``log(rho)`` over [1e-12, 1e12] to relative tolerance 1e-12.  For
    ``beta = 0`` the factor is capped at 4, so ``t <= log(2)`` is required
    (closed form ``rho = sqrt(2*exp(-t) - 1)``).
    """
    t_arr = np.asarray(t, dtype=float)
    beta = metric.beta
    if beta == 0.0:
        if np.any(t_arr > math.log(2.0)):
            raise ValueError("for beta = 0 the level relation is only solvable for t <= ln 2")
        out = np.sqrt(np.maximum(2.0 * np.exp(-t_arr) - 1.0, 0.0))
        return out if out.ndim else float(out)

    lo = math.log(_BRACKET_LO)
    hi = math.log(_BRACKET_HI)
    target = 2.0 * t_arr
    f_lo = _log_radial_factor(beta, lo) - target
    f_hi = _log_radial_factor(beta, hi) - target
    if np.any(f_lo < 0.0) or np.any(f_hi > 0.0):
        raise ValueError("t outside the invertible bracket [1e-12, 1e12] for rho")
    lo_arr = np.full_like(t_arr, lo, dtype=float)
    hi_arr = np.full_like(t_arr, hi, dtype=float)
    # log-space bisection: ~60 halvings reach 1e-12 relative width
    for _ in range(64):
        mid = 0.5 * (lo_arr + hi_arr)
        f_mid = _log_radial_factor(beta, mid) - target
        take_lo = f_mid >= 0.0
        lo_arr = np.where(take_lo, mid, lo_arr)
        hi_arr = np.where(take_lo, hi_arr, mid)
        if np.max(hi_arr - lo_arr) <= _RHO_RTOL:
            break
    out = np.exp(0.5 * (lo_arr + hi_arr))
    return out if out.ndim else float(out)


def a_profile(metric: FootballMetric, t):
    """Curvature-weighted area ``A(t)`` of the superlevel set ``{u > t}``."""
    rho = np.asarray(rho_from_t(metric, t), dtype=float)
    s = rho ** (2.0 + 2.0 * metric.beta)
    out = 4.0 * math.pi * (1.0 + metric.beta) * s / (1.0 + s)
    return out if out.ndim else float(out)


def b_profile(metric: FootballMetric, t):
    """Flat area ``B(t) = pi * rho(t)^2`` of the superlevel disk."""
    rho = np.asarray(rho_from_t(metric, t), dtype=float)
    out = math.pi * rho**2
    return out if out.ndim else float(out)


def ode_check(metric: FootballMetric, t_grid) -> float:
    """Max residual of the limit profile ODE on a t-grid.

    The profile satisfies ``(a/A + b/(4*pi*(1+alpha) - A)) * A' = 1`` with
    ``alpha = beta`` (the critical-wall value), ``a = alpha/(2*alpha+2)``
    and ``b = -(alpha+2)/(2*alpha+2)``.  ``A'`` is taken by centered
    differences, so the residual is O(h^2) on uniform grids.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 3:
        raise ValueError("t_grid must contain at least 3 increasing values")
    if np.any(np.diff(t) <= 0.0):
        raise ValueError("t_grid must be strictly increasing")
    alpha = metric.beta
    A = a_profile(metric, t)
    dA = (A[2:] - A[:-2]) / (t[2:] - t[:-2])
    Amid = A[1:-1]
    ca = alpha / (2.0 * alpha + 2.0)
    cb = -(alpha + 2.0) / (2.0 * alpha + 2.0)
    lhs = (ca / Amid + cb / (4.0 * math.pi * (1.0 + alpha) - Amid)) * dA
    return float(np.max(np.abs(lhs - 1.0)))


def pole_distance(metric: FootballMetric) -> float:
    """Geodesic distance between the two poles: the meridian length pi."""
    return math.pi


def mass_within_radius(metric: FootballMetric, r) -> float:
    """Exact ``int_{|z|<r} e^{2u}``: closed form ``4*pi*(1+beta)*s/(1+s)``
    with ``s = r^{2+2*beta}``."""
    r = np.asarray(r, dtype=float)
    s = r ** (2.0 + 2.0 * metric.beta)
    out = 4.0 * math.pi * (1.0 + metric.beta) * s / (1.0 + s)
    return out if out.ndim else float(out)
