"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

__all__ = [
    "check_positive",
    "check_in_open_interval",
    "check_finite_array",
    "as_points_3d",
]


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0.0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def check_in_open_interval(value: float, lo: float, hi: float, name: str) -> float:
    value = float(value)
    if not (lo < value < hi):
        raise ValueError(f"{name} must lie in ({lo}, {hi}), got {value}")
    return value


def check_finite_array(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


def as_points_3d(points, name: str = "points") -> np.ndarray:
    """Coerce to an (n, 3) float array of unit 3-vectors (normalizing rows)."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if p.ndim != 2 or p.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n, 3), got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"{name} must be finite")
    norms = np.linalg.norm(p, axis=1)
    if np.any(norms == 0.0):
        raise ValueError(f"{name} contains a zero vector")
    return p / norms[:, None]
