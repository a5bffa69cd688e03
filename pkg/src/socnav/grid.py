"""Occupancy rasterization over scene bounds.

The grid is the shared planning substrate for pedestrians and the built-in
robot planner; a cell is occupied when its center is within `inflation` of
solid geometry. The out-of-bounds region counts as solid, so it inflates the
same way obstacles do (keeps planned paths off the walls).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Point
from .scene import Scene


@dataclass
class OccupancyGrid:
    x0: float
    y0: float
    resolution: float
    width: int  # columns (x)
    height: int  # rows (y)
    occupied: np.ndarray  # bool, shape (height, width)

    def cell_of(self, p: Point) -> tuple[int, int]:
        """(row, col) of the cell containing p (points on a cell edge go to the
        higher-index cell, matching floor semantics)."""
        col = int(math.floor((p[0] - self.x0) / self.resolution))
        row = int(math.floor((p[1] - self.y0) / self.resolution))
        return row, col

    def center_of(self, row: int, col: int) -> Point:
        return (
            self.x0 + (col + 0.5) * self.resolution,
            self.y0 + (row + 0.5) * self.resolution,
        )

    def in_grid(self, row: int, col: int) -> bool:
        return 0 <= row < self.height and 0 <= col < self.width

    def is_free(self, row: int, col: int) -> bool:
        return self.in_grid(row, col) and not bool(self.occupied[row, col])

    def is_free_point(self, p: Point) -> bool:
        row, col = self.cell_of(p)
        return self.is_free(row, col)

    def nearest_free_cell(self, p: Point, max_radius: float) -> tuple[int, int] | None:
        """Closest free cell to p within max_radius meters; deterministic
        tie-break by (distance, row, col)."""
        row0, col0 = self.cell_of(p)
        max_cells = int(math.ceil(max_radius / self.resolution))
        best: tuple[float, int, int] | None = None
        for dr in range(-max_cells, max_cells + 1):
            for dc in range(-max_cells, max_cells + 1):
                r, c = row0 + dr, col0 + dc
                if not self.is_free(r, c):
                    continue
                cx, cy = self.center_of(r, c)
                d = math.hypot(cx - p[0], cy - p[1])
                if d > max_radius:
                    continue
                key = (d, r, c)
                if best is None or key < best:
                    best = key
        if best is None:
            return None
        return best[1], best[2]


def _segment_distances(px: np.ndarray, py: np.ndarray, a: Point, b: Point) -> np.ndarray:
    ax, ay = a
    ex, ey = b[0] - ax, b[1] - ay
    ll = ex * ex + ey * ey
    if ll <= 0.0:
        return np.hypot(px - ax, py - ay)
    t = ((px - ax) * ex + (py - ay) * ey) / ll
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(px - (ax + t * ex), py - (ay + t * ey))


def _inside_polygon(px: np.ndarray, py: np.ndarray, poly) -> np.ndarray:
    inside = np.zeros(px.shape, dtype=bool)
    n = len(poly)
    j = n - 1
    for i in range(n):
        xi, yi = poly[i]
        xj, yj = poly[j]
        crosses = (yi > py) != (yj > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = (xj - xi) * (py - yi) / (yj - yi) + xi
        inside ^= crosses & (px < x_cross)
        j = i
    return inside


def rasterize_occupancy(scene: Scene, inflation: float) -> OccupancyGrid:
    """Boolean grid over the scene bounds at the scene's resolution.

    A cell is occupied iff its center lies within `inflation` of an obstacle
    polygon (boundary inclusive) or within `inflation` of the out-of-bounds
    region. Results are cached per (scene, inflation).
    """
    if inflation < 0.0:
        raise ValueError("inflation must be >= 0")
    key = ("grid", inflation)
    cached = scene._derived.get(key)
    if cached is not None:
        return cached

    x0, y0, x1, y1 = scene.bounds
    res = scene.grid_resolution
    width = int(math.ceil((x1 - x0) / res - 1e-9))
    height = int(math.ceil((y1 - y0) / res - 1e-9))
    cols = np.arange(width, dtype=np.float64)
    rows = np.arange(height, dtype=np.float64)
    px, py = np.meshgrid(x0 + (cols + 0.5) * res, y0 + (rows + 0.5) * res)

    margin = np.minimum.reduce([px - x0, x1 - px, py - y0, y1 - py])
    occupied = margin <= inflation

    for poly in scene.obstacles:
        d = np.full(px.shape, np.inf)
        n = len(poly)
        for i in range(n):
            d = np.minimum(d, _segment_distances(px, py, poly[i], poly[(i + 1) % n]))
        occupied |= (d <= inflation) | _inside_polygon(px, py, poly)

    grid = OccupancyGrid(x0=x0, y0=y0, resolution=res, width=width, height=height, occupied=occupied)
    scene._derived[key] = grid
    return grid
