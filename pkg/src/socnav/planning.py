"""Grid path planning: 8-connected A* with octile heuristic and
line-of-sight shortcutting."""

from __future__ import annotations

import heapq
import math

from .geometry import Point
from .grid import OccupancyGrid

ROOT2 = math.sqrt(2.0)

# Moves as (drow, dcol, is_diagonal); fixed order keeps expansion deterministic.
_MOVES = (
    (-1, 0, False),
    (1, 0, False),
    (0, -1, False),
    (0, 1, False),
    (-1, -1, True),
    (-1, 1, True),
    (1, -1, True),
    (1, 1, True),
)


class NoPathError(Exception):
    """Goal is unreachable on the grid; callers resample or wait."""


def _octile(a: tuple[int, int], b: tuple[int, int]) -> float:
    dr = abs(a[0] - b[0])
    dc = abs(a[1] - b[1])
    lo, hi = (dr, dc) if dr < dc else (dc, dr)
    return (hi - lo) + lo * ROOT2


def astar_cells(grid: OccupancyGrid, start: tuple[int, int], goal: tuple[int, int]) -> list[tuple[int, int]]:
    """Optimal 8-connected cell path (unit straight cost, sqrt(2) diagonals).

    Diagonal moves are allowed only when both adjacent orthogonal cells are
    free (no corner cutting). Raises NoPathError when unreachable.
    """
    if not grid.is_free(*start):
        raise NoPathError(f"start cell {start} is occupied")
    if not grid.is_free(*goal):
        raise NoPathError(f"goal cell {goal} is occupied")
    if start == goal:
        return [start]

    g_cost: dict[tuple[int, int], float] = {start: 0.0}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    counter = 0
    open_heap: list[tuple[float, int, tuple[int, int]]] = [(_octile(start, goal), counter, start)]
    closed: set[tuple[int, int]] = set()

    while open_heap:
        _, _, current = heapq.heappop(open_heap)
        if current == goal:
            path = [current]
            while current in came:
                current = came[current]
                path.append(current)
            path.reverse()
            return path
        if current in closed:
            continue
        closed.add(current)
        cr, cc = current
        for dr, dc, diagonal in _MOVES:
            nr, nc = cr + dr, cc + dc
            if not grid.is_free(nr, nc):
                continue
            if diagonal and not (grid.is_free(cr + dr, cc) and grid.is_free(cr, cc + dc)):
                continue
            tentative = g_cost[current] + (ROOT2 if diagonal else 1.0)
            node = (nr, nc)
            if tentative < g_cost.get(node, math.inf):
                g_cost[node] = tentative
                came[node] = current
                counter += 1
                heapq.heappush(open_heap, (tentative + _octile(node, goal), counter, node))
    raise NoPathError(f"no path from {start} to {goal}")


def path_step_counts(cells: list[tuple[int, int]]) -> tuple[int, int]:
    """(straight, diagonal) move counts of a cell path."""
    straight = diagonal = 0
    for (r0, c0), (r1, c1) in zip(cells, cells[1:]):
        if r0 != r1 and c0 != c1:
            diagonal += 1
        else:
            straight += 1
    return straight, diagonal


def path_cost(cells: list[tuple[int, int]]) -> float:
    straight, diagonal = path_step_counts(cells)
    return straight + diagonal * ROOT2


def traversed_cells(grid: OccupancyGrid, p: Point, q: Point):
    """Yield every cell the segment p->q touches (supercover DDA).

    Exact corner crossings conservatively visit both side cells.
    """
    res = grid.resolution
    ux, uy = (p[0] - grid.x0) / res, (p[1] - grid.y0) / res
    vx, vy = (q[0] - grid.x0) / res, (q[1] - grid.y0) / res
    col, row = int(math.floor(ux)), int(math.floor(uy))
    end_col, end_row = int(math.floor(vx)), int(math.floor(vy))
    yield row, col
    dx, dy = vx - ux, vy - uy
    step_c = 1 if dx > 0 else -1
    step_r = 1 if dy > 0 else -1
    t_max_x = math.inf if dx == 0 else ((col + (step_c > 0)) - ux) / dx
    t_max_y = math.inf if dy == 0 else ((row + (step_r > 0)) - uy) / dy
    t_dx = math.inf if dx == 0 else abs(1.0 / dx)
    t_dy = math.inf if dy == 0 else abs(1.0 / dy)
    guard = 4 * (abs(end_col - col) + abs(end_row - row)) + 8
    while (row, col) != (end_row, end_col) and guard > 0:
        guard -= 1
        if t_max_x < t_max_y:
            col += step_c
            t_max_x += t_dx
        elif t_max_y < t_max_x:
            row += step_r
            t_max_y += t_dy
        else:  # exact corner: cross diagonally but flag both side cells
            yield row, col + step_c
            yield row + step_r, col
            col += step_c
            row += step_r
            t_max_x += t_dx
            t_max_y += t_dy
        yield row, col


def line_of_sight(grid: OccupancyGrid, p: Point, q: Point) -> bool:
    """True when every cell touched by the segment p->q is free."""
    return all(grid.is_free(r, c) for r, c in traversed_cells(grid, p, q))


def shortcut_path(grid: OccupancyGrid, points: list[Point]) -> list[Point]:
    """Greedy line-of-sight pruning: from each kept point, jump to the farthest
    later point still directly visible."""
    if len(points) <= 2:
        return list(points)
    out = [points[0]]
    i = 0
    last = len(points) - 1
    while i < last:
        j = last
        while j > i + 1 and not line_of_sight(grid, points[i], points[j]):
            j -= 1
        out.append(points[j])
        i = j
    return out


def plan_waypoints(grid: OccupancyGrid, start: Point, goal: Point) -> list[Point]:
    """World-coordinate path from start to goal: optimal A* over cell centers,
    then line-of-sight shortcutting. First point is start, last is goal."""
    if start == goal:
        return [start]
    start_cell = grid.cell_of(start)
    goal_cell = grid.cell_of(goal)
    cells = astar_cells(grid, start_cell, goal_cell)
    points: list[Point] = [start]
    points.extend(grid.center_of(r, c) for r, c in cells[1:-1])
    if goal != start:
        points.append(goal)
    return shortcut_path(grid, points)
