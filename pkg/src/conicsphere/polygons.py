"""Planar polygon geometry for level-set regions.

Closed polygonal loops are (n, 2) float arrays of vertices (not repeating
the first vertex).  Provides area/perimeter/centroid, the isoperimetric
defect ``|dP|^2 - 4*pi*|P|``, incircle and minimal enclosing circle, and
Bonnesen's inequality bound ``pi^2 * (R - r)^2``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage
from scipy.optimize import linprog
from skimage.measure import points_in_poly

__all__ = [
    "polygon_area",
    "polygon_perimeter",
    "polygon_centroid",
    "is_convex",
    "defect",
    "incircle_radius",
    "min_enclosing_circle",
    "bonnesen",
]


def _as_loop(poly) -> np.ndarray:
    p = np.asarray(poly, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 3:
        raise ValueError("polygon must be an (n>=3, 2) vertex array")
    if np.allclose(p[0], p[-1]):
        p = p[:-1]
    if p.shape[0] < 3:
        raise ValueError("degenerate polygon")
    return p


def polygon_area(poly) -> float:
    """Unsigned shoelace area."""
    p = _as_loop(poly)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def polygon_perimeter(poly) -> float:
    p = _as_loop(poly)
    return float(np.sum(np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)))


def polygon_centroid(poly) -> np.ndarray:
    """Area-weighted centroid of a simple polygon."""
    p = _as_loop(poly)
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * np.sum(cross)
    if a == 0.0:
        return np.mean(p, axis=0)
    cx = np.sum((x + xn) * cross) / (6.0 * a)
    cy = np.sum((y + yn) * cross) / (6.0 * a)
    return np.array([cx, cy])


def is_convex(poly, tol: float = 1e-12) -> bool:
    p = _as_loop(poly)
    e = np.roll(p, -1, axis=0) - p
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    scale = np.max(np.abs(cross)) if np.max(np.abs(cross)) > 0 else 1.0
    return bool(np.all(cross >= -tol * scale) or np.all(cross <= tol * scale))


def defect(perimeter_or_poly, area: float | None = None) -> float:
    """Isoperimetric defect ``|boundary|^2 - 4*pi*|area|``.

    Accepts either a polygon or an explicit (perimeter, area) pair; zero
    exactly for round disks, super-additive over disjoint unions.
    """
    if area is None:
        poly = perimeter_or_poly
        return polygon_perimeter(poly) ** 2 - 4.0 * math.pi * polygon_area(poly)
    return float(perimeter_or_poly) ** 2 - 4.0 * math.pi * float(area)


def _incircle_convex(p: np.ndarray) -> float:
    """Chebyshev center radius of a convex polygon via linear programming."""
    # orient counterclockwise
    x, y = p[:, 0], p[:, 1]
    if np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)) < 0.0:
        p = p[::-1]
    e = np.roll(p, -1, axis=0) - p
    lengths = np.linalg.norm(e, axis=1)
    keep = lengths > 0.0
    e, base, lengths = e[keep], p[keep], lengths[keep]
    normals = np.column_stack([-e[:, 1], e[:, 0]]) / lengths[:, None]  # inward for CCW
    # maximize r subject to n_i . c >= n_i . v_i + r
    c_obj = np.array([0.0, 0.0, -1.0])
    A_ub = np.column_stack([-normals, np.ones(len(normals))])
    b_ub = -np.sum(normals * base, axis=1)
    res = linprog(c_obj, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * 2 + [(0, None)], method="highs")
    if not res.success:
        raise ValueError(f"incircle LP failed: {res.message}")
    return float(res.x[2])


def _incircle_raster(p: np.ndarray, resolution: float) -> float:
    """Incircle radius via a distance transform on a raster of the polygon."""
    lo = p.min(axis=0)
    hi = p.max(axis=0)
    span = float(np.max(hi - lo))
    if span == 0.0:
        raise ValueError("degenerate polygon")
    res = min(resolution, span / 64.0)
    nx = int(np.ceil((hi[0] - lo[0]) / res)) + 3
    ny = int(np.ceil((hi[1] - lo[1]) / res)) + 3
    xs = lo[0] - res + res * np.arange(nx)
    ys = lo[1] - res + res * np.arange(ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = points_in_poly(pts, p).reshape(nx, ny)
    if not inside.any():
        return 0.0
    dist = ndimage.distance_transform_edt(inside) * res
    return float(dist.max())


def incircle_radius(poly, resolution: float = 1e-2) -> float:
    """Radius of the largest inscribed circle.

    Convex polygons use an exact Chebyshev-center linear program; general
    polygons fall back to a distance transform on a raster at the given
    resolution.
    """
    p = _as_loop(poly)
    if is_convex(p):
        return _incircle_convex(p)
    return _incircle_raster(p, resolution)


# ---------------------------------------------------------------------------
# Minimal enclosing circle (Welzl-style incremental algorithm).
# ---------------------------------------------------------------------------

def _circle_two(a, b):
    c = 0.5 * (a + b)
    return c, float(np.linalg.norm(a - c))


def _circumcircle(a, b, c):
    ax, ay = a
    bx, by = b
    cx, cy = c
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        return None
    ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay) + (cx**2 + cy**2) * (ay - by)) / d
    uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx) + (cx**2 + cy**2) * (bx - ax)) / d
    center = np.array([ux, uy])
    r = max(np.linalg.norm(a - center), np.linalg.norm(b - center), np.linalg.norm(c - center))
    return center, float(r)


def _in_circle(circle, p, eps=1e-12) -> bool:
    center, r = circle
    return np.linalg.norm(p - center) <= r * (1.0 + eps) + eps


def min_enclosing_circle(points, seed: int = 1234):
    """Smallest circle containing all points; returns (center, radius)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise ValueError("points must be a nonempty (n, 2) array")
    pts = pts[np.random.default_rng(seed).permutation(len(pts))]

    circle = (pts[0].copy(), 0.0)
    for i in range(1, len(pts)):
        if _in_circle(circle, pts[i]):
            continue
        circle = (pts[i].copy(), 0.0)
        for j in range(i):
            if _in_circle(circle, pts[j]):
                continue
            circle = _circle_two(pts[i], pts[j])
            for k in range(j):
                if _in_circle(circle, pts[k]):
                    continue
                cc = _circumcircle(pts[i], pts[j], pts[k])
                if cc is not None:
                    circle = cc
    return circle


def bonnesen(poly, resolution: float = 1e-2):
    """Incircle radius, circumcircle radius, and the Bonnesen bound.

    Returns ``(r_in, R_out, pi^2 * (R_out - r_in)^2)``; the defect of the
    polygon dominates the bound, with equality only for round disks.
    """
    p = _as_loop(poly)
    if polygon_area(p) <= 0.0:
        raise ValueError("degenerate polygon has no incircle")
    r_in = incircle_radius(p, resolution=resolution)
    _, r_out = min_enclosing_circle(p)
    bound = math.pi**2 * (r_out - r_in) ** 2
    return r_in, r_out, bound
