"""Constant-curvature-1 conic metrics on the 2-sphere.

Building blocks: divisor classification, closed-form footballs, doubled
spherical triangles, a finite-difference solver for the singular Liouville
equation, superlevel-set isoperimetric diagnostics, and critical-wall
convergence experiments.
"""

from .divisor import (
    ConicPoint,
    Divisor,
    DivisorClass,
    DivisorKind,
    classify,
    divisor_from_json,
    divisor_to_json,
    euler_char,
    luo_tian_admissible,
    slack,
    total_area,
)
from .football import (
    FootballMetric,
    a_profile,
    b_profile,
    conformal_factor,
    log_factor,
    mass_within_radius,
    ode_check,
    pole_distance,
    rho_from_t,
)

__version__ = "0.1.0"

__all__ = [
    "ConicPoint",
    "Divisor",
    "DivisorClass",
    "DivisorKind",
    "classify",
    "divisor_from_json",
    "divisor_to_json",
    "euler_char",
    "luo_tian_admissible",
    "slack",
    "total_area",
    "FootballMetric",
    "a_profile",
    "b_profile",
    "conformal_factor",
    "log_factor",
    "mass_within_radius",
    "ode_check",
    "pole_distance",
    "rho_from_t",
    "__version__",
]
