"""Spherical triangles, their metric doublings, and lens degeneration.

A spherical triangle with angles (A, B, C) in (0, pi) exists iff the angle
sum exceeds pi and each angle is smaller than the sum of the other two
minus ... (dually: A + B < pi + C and permutations).  Doubling the triangle
across its boundary produces a constant-curvature-1 sphere with three
conic points of cone angles (2A, 2B, 2C) — the exact n=3 model used as an
oracle for critical-wall degeneration: as A approaches B + C - pi the
triangle collapses to a lune ("lens") with sides (0, pi, pi) and the
doubled surface converges to a football.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .divisor import ConicPoint, Divisor, DivisorKind, classify
from .validation import as_points_3d

__all__ = [
    "SphericalTriangle",
    "DoubledTriangle",
    "triangle_from_angles",
    "angles_from_sides",
    "lens_degeneration_curve",
    "angle_relation_defects",
    "limit_cone_angle",
    "surface_distance",
    "hausdorff_distance",
]

_CONSISTENCY_TOL = 1e-12


@dataclass(frozen=True)
class SphericalTriangle:
    """Angles (A, B, C), opposite sides (a, b, c), and realizing vertices.

    Vertices are unit 3-vectors on the round sphere with the gauge fixed by
    vertex A at the north pole and vertex B in the x-z half-plane (x > 0);
    vertex C has positive y.
    """

    angles: tuple[float, float, float]
    sides: tuple[float, float, float]
    vertices: np.ndarray

    @property
    def spherical_excess(self) -> float:
        return math.fsum(self.angles) - math.pi

    @property
    def area(self) -> float:
        return self.spherical_excess


def _check_existence(A: float, B: float, C: float) -> None:
    names = ("A", "B", "C")
    vals = (A, B, C)
    for n, v in zip(names, vals):
        if not (0.0 < v < math.pi):
            raise ValueError(f"angle {n} must lie in (0, pi), got {v}")
    if not math.fsum(vals) > math.pi:
        raise ValueError(f"existence violated: A + B + C = {math.fsum(vals)} <= pi")
    combos = (("A + B < pi + C", A + B - C), ("B + C < pi + A", B + C - A), ("A + C < pi + B", A + C - B))
    for label, excess in combos:
        if not excess < math.pi:
            raise ValueError(f"existence violated: {label} fails (difference {excess - math.pi})")


def _side_from_angles(A: float, B: float, C: float) -> float:
    """Dual spherical law of cosines: side opposite A from the three angles."""
    val = (math.cos(A) + math.cos(B) * math.cos(C)) / (math.sin(B) * math.sin(C))
    return math.acos(min(1.0, max(-1.0, val)))


def triangle_from_angles(A: float, B: float, C: float) -> SphericalTriangle:
    """Construct the (unique up to isometry) triangle with the given angles.

    Raises a descriptive error naming the violated existence inequality.
    """
    A, B, C = float(A), float(B), float(C)
    _check_existence(A, B, C)
    a = _side_from_angles(A, B, C)
    b = _side_from_angles(B, C, A)
    c = _side_from_angles(C, A, B)
    va = np.array([0.0, 0.0, 1.0])
    vb = np.array([math.sin(c), 0.0, math.cos(c)])
    vc = np.array([math.sin(b) * math.cos(A), math.sin(b) * math.sin(A), math.cos(b)])
    return SphericalTriangle(angles=(A, B, C), sides=(a, b, c), vertices=np.array([va, vb, vc]))


def angles_from_sides(a: float, b: float, c: float) -> tuple[float, float, float]:
    """Primal spherical law of cosines: angles from the three sides."""
    def angle(x, y, z):
        val = (math.cos(x) - math.cos(y) * math.cos(z)) / (math.sin(y) * math.sin(z))
        return math.acos(min(1.0, max(-1.0, val)))

    return angle(a, b, c), angle(b, c, a), angle(c, a, b)


@dataclass(frozen=True)
class DoubledTriangle:
    """Two copies of a triangle glued along the boundary: a 3-conic-point sphere."""

    base: SphericalTriangle

    @property
    def cone_angles(self) -> tuple[float, float, float]:
        A, B, C = self.base.angles
        return 2.0 * A, 2.0 * B, 2.0 * C

    @property
    def area(self) -> float:
        return 2.0 * self.base.spherical_excess

    def divisor(self) -> Divisor:
        """The induced divisor: orders ``angle/pi - 1`` at three chart points."""
        A, B, C = self.base.angles
        positions = (complex(0.0), complex(1.0), complex(-1.0))
        orders = (A / math.pi - 1.0, B / math.pi - 1.0, C / math.pi - 1.0)
        return Divisor(tuple(ConicPoint(z, beta) for z, beta in zip(positions, orders)))


def lens_degeneration_curve(B: float, C: float, eps_list) -> list[tuple[float, tuple[float, float, float]]]:
    """Sides of the family A(eps) = B + C - pi + eps collapsing to the lens.

    As eps -> 0+ the sides tend monotonically to (0, pi, pi): the two
    vertices opposite the large sides merge while the third stays a
    quarter-turn of the resulting lune away from both.
    """
    out = []
    for eps in eps_list:
        eps = float(eps)
        A = B + C - math.pi + eps
        tri = triangle_from_angles(A, B, C)
        out.append((eps, tri.sides))
    return out


def angle_relation_defects(tri: SphericalTriangle) -> tuple[float, float]:
    """Signed defects of the two degeneration identities.

    Returns ``(A - (B + C - pi), A + B + C - pi)``: the first vanishes at
    the lens limit (triangle incident to the surviving vertex), the second
    at the fully collapsed limit.
    """
    A, B, C = tri.angles
    return A - (B + C - math.pi), A + B + C - math.pi


def limit_cone_angle(divisor: Divisor, tol: float = 1e-12) -> float:
    """Cone angle ``2*pi*(1 + min(beta))`` of the limit football at a
    critical divisor; rejects non-critical input."""
    cls = classify(divisor, tol=tol)
    if cls.kind is not DivisorKind.CRITICAL:
        raise ValueError(f"limit cone angle requires a Critical divisor, got {cls.kind}")
    _, bmin = divisor.min_order()
    return 2.0 * math.pi * (1.0 + bmin)


# ---------------------------------------------------------------------------
# Geodesics on the doubled triangle via reflection unfolding.
# ---------------------------------------------------------------------------

def _side_planes(tri: SphericalTriangle) -> np.ndarray:
    """Unit normals of the three side planes, oriented toward the triangle."""
    V = tri.vertices
    normals = np.empty((3, 3))
    for s in range(3):
        i, j = (s + 1) % 3, (s + 2) % 3
        n = np.cross(V[i], V[j])
        n = n / np.linalg.norm(n)
        if np.dot(n, V[s]) < 0.0:
            n = -n
        normals[s] = n
    return normals


def contains_point(tri: SphericalTriangle, point, tol: float = 1e-9) -> bool:
    """Whether a unit vector lies in the closed triangle region."""
    p = as_points_3d(point)[0]
    return bool(np.all(_side_planes(tri) @ p >= -tol))


def _unfolding_words(max_unfold: int):
    """All reflection words over sides {0,1,2} with no immediate repeats."""
    words = [()]
    for length in range(1, max_unfold + 1):
        for w in product(range(3), repeat=length):
            if all(w[i] != w[i + 1] for i in range(length - 1)):
                words.append(w)
    return words


def _word_matrices(tri: SphericalTriangle, max_unfold: int):
    """(matrices, parities) for all unfolding words up to the given depth."""
    normals = _side_planes(tri)
    refl = [np.eye(3) - 2.0 * np.outer(n, n) for n in normals]
    mats, parities = [], []
    for w in _unfolding_words(max_unfold):
        M = np.eye(3)
        for s in w:
            M = M @ refl[s]
        mats.append(M)
        parities.append(len(w) % 2)
    return np.array(mats), np.array(parities)


def surface_distance(doubled: DoubledTriangle, p, q, max_unfold: int = 6) -> float:
    """Intrinsic distance on the doubled triangle by reflection unfolding.

    ``p`` and ``q`` are (copy, point) pairs with copy 0 = front, 1 = back
    and point a unit 3-vector inside the base triangle.  The distance is
    the minimum over unfolding sequences (side reflections, alternating
    copies, depth <= max_unfold) of the great-circle distance between the
    lifted points; it is nonincreasing in max_unfold.
    """
    if max_unfold < 1:
        raise ValueError("max_unfold must be >= 1")
    copy_p, xp = p
    copy_q, xq = q
    tri = doubled.base
    xp = as_points_3d(xp)[0]
    xq = as_points_3d(xq)[0]
    for label, x in (("p", xp), ("q", xq)):
        if not contains_point(tri, x):
            raise ValueError(f"point {label} lies outside the triangle region")
    mats, parities = _word_matrices(tri, max_unfold)
    want = (int(copy_p) + int(copy_q)) % 2
    lifted = mats[parities == want] @ xq
    dots = np.clip(lifted @ xp, -1.0, 1.0)
    return float(np.min(np.arccos(dots)))


def pairwise_surface_distances(doubled: DoubledTriangle, copies, points, max_unfold: int = 6) -> np.ndarray:
    """Distance matrix for many (copy, point) samples at once."""
    pts = as_points_3d(points)
    copies = np.asarray(copies, dtype=int)
    mats, parities = _word_matrices(doubled.base, max_unfold)
    lifted = np.einsum("wij,nj->nwi", mats, pts)  # (n, words, 3)
    dots = np.clip(np.einsum("nwi,mi->nmw", lifted, pts), -1.0, 1.0)
    dists = np.arccos(dots)
    parity_mask = (copies[:, None] + copies[None, :]) % 2
    out = np.empty((len(pts), len(pts)))
    for want in (0, 1):
        sel = parities == want
        vals = dists[:, :, sel].min(axis=2)
        out[parity_mask == want] = vals[parity_mask == want]
    np.fill_diagonal(out, 0.0)
    return np.minimum(out, out.T)


def hausdorff_distance(X, Y) -> float:
    """Symmetric Hausdorff distance between point sets under the intrinsic
    (great-circle) spherical metric."""
    X = as_points_3d(X, "X")
    Y = as_points_3d(Y, "Y")
    d = np.arccos(np.clip(X @ Y.T, -1.0, 1.0))
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))
