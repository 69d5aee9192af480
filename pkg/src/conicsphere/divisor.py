"""Conic divisors on the 2-sphere and their Troyanov classification.

A divisor is a finite set of marked points, each carrying a cone order
``beta > -1`` (cone angle ``2*pi*(1+beta)``).  At most one marked point may
sit at infinity in the stereographic chart.  The classification splits
divisors into Negative / Zero / Subcritical / Critical / Supercritical
according to the conic Euler characteristic ``chi = 2 + sum(beta)`` and the
wall ``min(2, 2 + 2*min(beta))``; subcritical divisors are exactly the ones
admitting a constant-curvature-1 conic metric (for orders in (-1, 0)).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

__all__ = [
    "ConicPoint",
    "Divisor",
    "DivisorKind",
    "DivisorClass",
    "euler_char",
    "slack",
    "classify",
    "luo_tian_admissible",
    "total_area",
    "divisor_from_json",
    "divisor_to_json",
]

#: Default tolerance for detecting the measure-zero Critical / Zero walls.
DEFAULT_WALL_TOL = 1e-12


@dataclass(frozen=True)
class ConicPoint:
    """A marked point: ``position`` in the finite plane, or None for infinity."""

    position: complex | None
    beta: float

    def __post_init__(self):
        if not self.beta > -1.0:
            raise ValueError(f"cone order must exceed -1, got {self.beta}")
        if self.position is not None:
            z = complex(self.position)
            if not (math.isfinite(z.real) and math.isfinite(z.imag)):
                raise ValueError("finite conic point must have finite coordinates")
            object.__setattr__(self, "position", z)

    @property
    def at_infinity(self) -> bool:
        return self.position is None


@dataclass(frozen=True)
class Divisor:
    """An ordered collection of conic points with pairwise-distinct positions."""

    points: tuple[ConicPoint, ...]

    def __post_init__(self):
        pts = tuple(
            p if isinstance(p, ConicPoint) else ConicPoint(*p) for p in self.points
        )
        object.__setattr__(self, "points", pts)
        n_inf = sum(p.at_infinity for p in pts)
        if n_inf > 1:
            raise ValueError("at most one conic point may sit at infinity")
        finite = [p.position for p in pts if not p.at_infinity]
        for i, a in enumerate(finite):
            for b in finite[i + 1 :]:
                if a == b:
                    raise ValueError(f"duplicate finite position {a}")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def orders(self) -> tuple[float, ...]:
        return tuple(p.beta for p in self.points)

    @property
    def total_order(self) -> float:
        """``|D| = sum(beta_i)``."""
        return math.fsum(self.orders)

    @property
    def has_infinity(self) -> bool:
        return any(p.at_infinity for p in self.points)

    @property
    def infinity_order(self) -> float | None:
        for p in self.points:
            if p.at_infinity:
                return p.beta
        return None

    @property
    def finite_points(self) -> tuple[ConicPoint, ...]:
        return tuple(p for p in self.points if not p.at_infinity)

    def min_order(self) -> tuple[int, float]:
        """Index and value of the minimal cone order (empty divisor -> (-1, inf))."""
        if not self.points:
            return -1, math.inf
        idx = min(range(len(self.points)), key=lambda i: self.points[i].beta)
        return idx, self.points[idx].beta


class DivisorKind(enum.Enum):
    NEGATIVE = "Negative"
    ZERO = "Zero"
    SUBCRITICAL = "Subcritical"
    CRITICAL = "Critical"
    SUPERCRITICAL = "Supercritical"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class DivisorClass:
    """Classification result.

    ``slack = min(2, 2 + 2*min(beta)) - chi`` measures the distance to the
    critical wall; positive slack with ``chi > 0`` is the subcritical case.
    ``outside_hypotheses`` flags positive-case divisors with some order
    outside (-1, 0), where the formula is applied beyond the existence
    theory it encodes.
    """

    kind: DivisorKind
    chi: float
    slack: float
    min_index: int
    outside_hypotheses: bool = field(default=False)


def euler_char(divisor: Divisor) -> float:
    """Conic Euler characteristic ``chi = 2 + |D|`` (sphere topology fixed)."""
    return 2.0 + divisor.total_order


def slack(divisor: Divisor) -> float:
    """Distance to the critical wall, ``min(2, 2 + 2*min(beta)) - chi``."""
    _, bmin = divisor.min_order()
    wall = min(2.0, 2.0 + 2.0 * bmin)
    return wall - euler_char(divisor)


def classify(divisor: Divisor, tol: float = DEFAULT_WALL_TOL) -> DivisorClass:
    """Five-way Troyanov classification with a wall-detection tolerance.

    ``|chi| <= tol`` reports Zero; among positive-``chi`` divisors,
    ``|slack| <= tol`` reports Critical.
    """
    if tol < 0.0:
        raise ValueError("tol must be nonnegative")
    chi = euler_char(divisor)
    idx, bmin = divisor.min_order()
    s = slack(divisor)
    if chi < -tol:
        kind = DivisorKind.NEGATIVE
    elif abs(chi) <= tol:
        kind = DivisorKind.ZERO
    elif s > tol:
        kind = DivisorKind.SUBCRITICAL
    elif abs(s) <= tol:
        kind = DivisorKind.CRITICAL
    else:
        kind = DivisorKind.SUPERCRITICAL
    outside = chi > tol and any(b >= 0.0 for b in divisor.orders)
    return DivisorClass(kind=kind, chi=chi, slack=s, min_index=idx, outside_hypotheses=outside)


def luo_tian_admissible(angles) -> bool:
    """Luo-Tian angle condition for cone angles of an n-vertex conic sphere.

    True iff ``sum(alpha) > 2*(n-2)*pi`` and
    ``sum(alpha) < 2*(n-2)*pi + 2*min(alpha)``; requires n >= 3 and each
    angle in (0, 2*pi).
    """
    angles = [float(a) for a in angles]
    n = len(angles)
    if n < 3:
        raise ValueError(f"angle condition is stated for n >= 3 vertices, got n={n}")
    for a in angles:
        if not (0.0 < a < 2.0 * math.pi):
            raise ValueError(f"cone angle must lie in (0, 2*pi), got {a}")
    total = math.fsum(angles)
    lower = 2.0 * (n - 2) * math.pi
    return total > lower and total < lower + 2.0 * min(angles)


def total_area(divisor: Divisor) -> float:
    """Total area ``2*pi*(2+|D|)`` of a constant-curvature-1 metric for D."""
    return 2.0 * math.pi * (2.0 + divisor.total_order)


# ---------------------------------------------------------------------------
# JSON serialization: a list of {x, y, beta} records, optionally one
# {"infinity": beta} record.
# ---------------------------------------------------------------------------

def divisor_to_json(divisor: Divisor) -> list[dict]:
    records: list[dict] = []
    for p in divisor.points:
        if p.at_infinity:
            records.append({"infinity": p.beta})
        else:
            records.append({"x": p.position.real, "y": p.position.imag, "beta": p.beta})
    return records


def divisor_from_json(data) -> Divisor:
    """Build a Divisor from parsed JSON (or a JSON string / file object)."""
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    elif hasattr(data, "read"):
        data = json.load(data)
    if not isinstance(data, list):
        raise ValueError("divisor JSON must be a list of point records")
    points = []
    for rec in data:
        if "infinity" in rec:
            points.append(ConicPoint(None, float(rec["infinity"])))
        else:
            try:
                z = complex(float(rec["x"]), float(rec["y"]))
                points.append(ConicPoint(z, float(rec["beta"])))
            except KeyError as exc:
                raise ValueError(f"point record missing field {exc}") from exc
    return Divisor(tuple(points))
