"""Uncertain objects and the distance / area primitives everything else builds on."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Union

import numpy as np

#: Absolute tolerance for comparing radii and interval lengths.
LENGTH_TOL = 1e-9


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def dist(self, other: "Point2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class UncertainInterval:
    """A 1D object whose true value is uniform on ``[lower, upper]``."""

    id: Hashable
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"interval {self.id!r}: lower must be < upper")

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def length(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class UncertainDisc:
    """A 2D object uniformly distributed over a disc."""

    id: Hashable
    center: Point2D
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"disc {self.id!r}: radius must be positive")

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    def pdf(self, p: Point2D) -> float:
        return 1.0 / self.area if self.center.dist(p) <= self.radius else 0.0


@dataclass(frozen=True)
class Mbr:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise ValueError("Mbr min corner must not exceed max corner")

    @classmethod
    def of_points(cls, pts) -> "Mbr":
        a = np.asarray(pts, dtype=float).reshape(-1, 2)
        return cls(float(a[:, 0].min()), float(a[:, 1].min()),
                   float(a[:, 0].max()), float(a[:, 1].max()))

    @classmethod
    def around(cls, x: float, y: float, half: float) -> "Mbr":
        return cls(x - half, y - half, x + half, y + half)

    def intersects(self, other: "Mbr") -> bool:
        return not (other.xmin > self.xmax or other.xmax < self.xmin
                    or other.ymin > self.ymax or other.ymax < self.ymin)

    def contains_point(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def mindist(self, x: float, y: float) -> float:
        dx = max(self.xmin - x, 0.0, x - self.xmax)
        dy = max(self.ymin - y, 0.0, y - self.ymax)
        return math.hypot(dx, dy)

    def inflate(self, frac: float) -> "Mbr":
        wx = (self.xmax - self.xmin) * frac
        wy = (self.ymax - self.ymin) * frac
        return Mbr(self.xmin - wx, self.ymin - wy, self.xmax + wx, self.ymax + wy)

    def union(self, other: "Mbr") -> "Mbr":
        return Mbr(min(self.xmin, other.xmin), min(self.ymin, other.ymin),
                   max(self.xmax, other.xmax), max(self.ymax, other.ymax))


@dataclass(frozen=True)
class Segment2D:
    a: Point2D
    b: Point2D

    @property
    def length(self) -> float:
        return self.a.dist(self.b)

    def at(self, s: float) -> Point2D:
        """Point at fraction ``s`` of the way from ``a`` to ``b``."""
        return Point2D(self.a.x + s * (self.b.x - self.a.x),
                       self.a.y + s * (self.b.y - self.a.y))


UncertainObject = Union[UncertainInterval, UncertainDisc]
Query = Union[Point2D, float]


def object_mbr(o: UncertainObject) -> Mbr:
    """Bounding rectangle; intervals live on the x axis (y = 0)."""
    if isinstance(o, UncertainInterval):
        return Mbr(o.lower, 0.0, o.upper, 0.0)
    c, r = o.center, o.radius
    return Mbr(c.x - r, c.y - r, c.x + r, c.y + r)


def mindist(q: Query, o: UncertainObject) -> float:
    if isinstance(o, UncertainInterval):
        q = float(q)
        if o.lower <= q <= o.upper:
            return 0.0
        return min(abs(q - o.lower), abs(q - o.upper))
    return max(0.0, o.center.dist(q) - o.radius)


def maxdist(q: Query, o: UncertainObject) -> float:
    if isinstance(o, UncertainInterval):
        q = float(q)
        return max(abs(q - o.lower), abs(q - o.upper))
    return o.center.dist(q) + o.radius


def lens_areas(dist: np.ndarray, d: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Vectorised area of ``disc(q, d) ∩ disc(c, r)`` where ``dist = |q - c|``.

    All arguments broadcast against each other.
    """
    dist, d, r = np.broadcast_arrays(np.asarray(dist, float), np.asarray(d, float),
                                     np.asarray(r, float))
    out = np.zeros(dist.shape)
    small = np.minimum(d, r)
    inside = dist <= np.abs(r - d)
    out[inside] = np.pi * small[inside] ** 2
    part = ~inside & (dist < d + r)
    if np.any(part):
        D, a, b = dist[part], d[part], r[part]
        # clamped acos arguments keep tangency from producing NaN
        ca = np.clip((D * D + a * a - b * b) / (2 * D * a), -1.0, 1.0)
        cb = np.clip((D * D + b * b - a * a) / (2 * D * b), -1.0, 1.0)
        k = (-D + a + b) * (D + a - b) * (D - a + b) * (D + a + b)
        out[part] = (a * a * np.arccos(ca) + b * b * np.arccos(cb)
                     - 0.5 * np.sqrt(np.maximum(k, 0.0)))
    return out


def lens_area(q: Point2D, d: float, o: UncertainDisc) -> float:
    """Area of the intersection of ``disc(q, d)`` with the object's disc."""
    if d < 0:
        raise ValueError("d must be non-negative")
    return float(lens_areas(o.center.dist(q), d, o.radius))


def classify_pair(oi: UncertainObject, oj: UncertainObject) -> tuple[str, str]:
    """Return (``equi-range``|``non-equi-range``, ``overlapping``|``non-overlapping``)."""
    if isinstance(oi, UncertainInterval) and isinstance(oj, UncertainInterval):
        equi = abs(oi.length - oj.length) <= LENGTH_TOL
        overlap = oi.lower <= oj.upper and oj.lower <= oi.upper
    elif isinstance(oi, UncertainDisc) and isinstance(oj, UncertainDisc):
        equi = abs(oi.radius - oj.radius) <= LENGTH_TOL
        overlap = oi.center.dist(oj.center) <= oi.radius + oj.radius
    else:
        raise TypeError("cannot classify a 1D object against a 2D object")
    return ("equi-range" if equi else "non-equi-range",
            "overlapping" if overlap else "non-overlapping")
