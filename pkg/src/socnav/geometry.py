"""Planar geometry primitives shared by the simulator core.

Everything here is pure and allocation-light; the vectorized variants used by
the range scanner live in `sensing`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

Point = tuple[float, float]
Polygon = tuple[Point, ...]
Rect = tuple[float, float, float, float]  # x0, y0, x1, y1


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = theta % TWO_PI
    return r - TWO_PI if r > math.pi else r


@dataclass(frozen=True)
class Pose2D:
    """Planar pose; theta is normalized to (-pi, pi] on construction."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError(f"non-finite pose ({self.x}, {self.y}, {self.theta})")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def xy(self) -> Point:
        return (self.x, self.y)

    def distance_to(self, other: "Pose2D | Point") -> float:
        ox, oy = (other.x, other.y) if isinstance(other, Pose2D) else other
        return math.hypot(self.x - ox, self.y - oy)


def dist(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    """Distance from p to the closed segment [a, b]."""
    qx, qy = closest_point_on_segment(p, a, b)
    return math.hypot(p[0] - qx, p[1] - qy)


def closest_point_on_segment(p: Point, a: Point, b: Point) -> Point:
    ax, ay = a
    bx, by = b
    ex, ey = bx - ax, by - ay
    ll = ex * ex + ey * ey
    if ll <= 0.0:
        return a
    t = ((p[0] - ax) * ex + (p[1] - ay) * ey) / ll
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return (ax + t * ex, ay + t * ey)


def point_in_polygon(p: Point, poly: Polygon) -> bool:
    """Even-odd crossing test. Boundary points are not guaranteed either way;
    callers that care about the boundary combine this with an edge-distance check."""
    x, y = p
    inside = False
    n = len(poly)
    j = n - 1
    for i in range(n):
        xi, yi = poly[i]
        xj, yj = poly[j]
        if (yi > y) != (yj > y):
            x_cross = (xj - xi) * (y - yi) / (yj - yi) + xi
            if x < x_cross:
                inside = not inside
        j = i
    return inside


def polygon_edge_distance(p: Point, poly: Polygon) -> float:
    """Distance from p to the polygon boundary."""
    n = len(poly)
    return min(point_segment_distance(p, poly[i], poly[(i + 1) % n]) for i in range(n))


def polygon_distance(p: Point, poly: Polygon) -> float:
    """Distance from p to the polygon as a filled region: 0 inside or on the boundary."""
    d = polygon_edge_distance(p, poly)
    if point_in_polygon(p, poly):
        return 0.0
    return d


def polygon_signed_distance(p: Point, poly: Polygon) -> float:
    """Boundary distance, negative inside the polygon."""
    d = polygon_edge_distance(p, poly)
    return -d if point_in_polygon(p, poly) else d


def closest_point_on_polygon(p: Point, poly: Polygon) -> Point:
    """Nearest point on the polygon boundary."""
    best: Point = poly[0]
    best_d = math.inf
    n = len(poly)
    for i in range(n):
        q = closest_point_on_segment(p, poly[i], poly[(i + 1) % n])
        d = math.hypot(p[0] - q[0], p[1] - q[1])
        if d < best_d:
            best_d = d
            best = q
    return best


def polygon_area(poly: Polygon) -> float:
    """Signed area; positive for counter-clockwise vertex order."""
    s = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a: Point, b: Point, p: Point) -> bool:
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool:
    """Closed-segment intersection test, including collinear overlap."""
    d1 = _orient(c, d, a)
    d2 = _orient(c, d, b)
    d3 = _orient(a, b, c)
    d4 = _orient(a, b, d)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True  # proper crossing
    if d1 == 0 and _on_segment(c, d, a):
        return True
    if d2 == 0 and _on_segment(c, d, b):
        return True
    if d3 == 0 and _on_segment(a, b, c):
        return True
    if d4 == 0 and _on_segment(a, b, d):
        return True
    return False


def polygon_is_simple(poly: Polygon) -> bool:
    """True when no two non-adjacent edges touch and no vertex repeats."""
    n = len(poly)
    if n < 3:
        return False
    if len(set(poly)) != n:
        return False
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share a vertex by construction
            c, d = poly[j], poly[(j + 1) % n]
            if segments_intersect(a, b, c, d):
                return False
    return True


def ray_segment(origin: Point, direction: Point, a: Point, b: Point) -> float | None:
    """Parametric distance t >= 0 where origin + t*direction crosses [a, b], or None.

    direction is assumed unit length, so t is in meters.
    """
    ox, oy = origin
    dx, dy = direction
    ex, ey = b[0] - a[0], b[1] - a[1]
    denom = dx * ey - dy * ex
    if abs(denom) < 1e-15:
        return None  # parallel (grazing along the segment is ignored)
    aox, aoy = a[0] - ox, a[1] - oy
    t = (aox * ey - aoy * ex) / denom
    u = (aox * dy - aoy * dx) / denom
    if t >= 0.0 and 0.0 <= u <= 1.0:
        return t
    return None


def ray_circle(origin: Point, direction: Point, center: Point, radius: float) -> float | None:
    """Smallest t >= 0 where the unit-direction ray hits the circle, or None."""
    fx, fy = origin[0] - center[0], origin[1] - center[1]
    b = fx * direction[0] + fy * direction[1]
    c = fx * fx + fy * fy - radius * radius
    disc = b * b - c
    if disc < 0.0:
        return None
    s = math.sqrt(disc)
    t1 = -b - s
    if t1 >= 0.0:
        return t1
    t2 = -b + s
    if t2 >= 0.0:
        return t2
    return None


def rect_contains(bounds: Rect, p: Point) -> bool:
    x0, y0, x1, y1 = bounds
    return x0 <= p[0] <= x1 and y0 <= p[1] <= y1


def rect_inside_margin(bounds: Rect, p: Point) -> float:
    """Distance from p to the nearest bounds edge; negative outside the rectangle."""
    x0, y0, x1, y1 = bounds
    return min(p[0] - x0, x1 - p[0], p[1] - y0, y1 - p[1])


def rect_edges(bounds: Rect) -> tuple[tuple[Point, Point], ...]:
    x0, y0, x1, y1 = bounds
    return (
        ((x0, y0), (x1, y0)),
        ((x1, y0), (x1, y1)),
        ((x1, y1), (x0, y1)),
        ((x0, y1), (x0, y0)),
    )
