import heapq
import math
import random

import numpy as np
import pytest

from conftest import make_scene, rect_poly

from socnav.grid import OccupancyGrid, rasterize_occupancy
from socnav.planning import (
    NoPathError,
    ROOT2,
    astar_cells,
    line_of_sight,
    path_cost,
    path_step_counts,
    plan_waypoints,
    shortcut_path,
)

_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1))


def dijkstra_costs(grid: OccupancyGrid, start):
    """Brute-force oracle: heuristic-free uniform-cost search with the same
    neighbor rule (no diagonal corner cutting)."""
    dist = {start: 0.0}
    heap = [(0.0, start)]
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist.get(node, math.inf):
            continue
        r, c = node
        for dr, dc in _MOVES:
            nr, nc = r + dr, c + dc
            if not grid.is_free(nr, nc):
                continue
            if dr != 0 and dc != 0 and not (grid.is_free(r + dr, c) and grid.is_free(r, c + dc)):
                continue
            nd = d + (ROOT2 if dr != 0 and dc != 0 else 1.0)
            if nd < dist.get((nr, nc), math.inf) - 1e-12:
                dist[(nr, nc)] = nd
                heapq.heappush(heap, (nd, (nr, nc)))
    return dist


def random_grid(rng: random.Random, size: int = 64, fill: float = 0.25) -> OccupancyGrid:
    occupied = np.zeros((size, size), dtype=bool)
    for _ in range(int(size * size * fill)):
        occupied[rng.randrange(size), rng.randrange(size)] = True
    return OccupancyGrid(x0=0.0, y0=0.0, resolution=1.0, width=size, height=size, occupied=occupied)


def free_cell(rng: random.Random, grid: OccupancyGrid):
    while True:
        cell = (rng.randrange(grid.height), rng.randrange(grid.width))
        if grid.is_free(*cell):
            return cell


def test_start_equals_goal():
    scene = make_scene(bounds=(0.0, 0.0, 10.0, 10.0), resolution=0.5)
    grid = rasterize_occupancy(scene, 0.0)
    assert plan_waypoints(grid, (3.0, 3.0), (3.0, 3.0)) == [(3.0, 3.0)]


def test_empty_grid_straight_line_after_shortcut():
    scene = make_scene(bounds=(-1.0, -1.0, 10.0, 10.0), resolution=0.5)
    grid = rasterize_occupancy(scene, 0.0)
    path = plan_waypoints(grid, (0.0, 0.0), (5.0, 0.0))
    assert path == [(0.0, 0.0), (5.0, 0.0)]


def test_wall_with_gap_matches_dijkstra():
    scene = make_scene(
        bounds=(0.0, 0.0, 16.0, 16.0),
        obstacles=[rect_poly(7.0, 0.5, 8.0, 7.0), rect_poly(7.0, 9.0, 8.0, 15.5)],
        resolution=1.0,
    )
    grid = rasterize_occupancy(scene, 0.0)
    start = grid.cell_of((2.5, 8.5))
    goal = grid.cell_of((13.5, 8.5))
    cells = astar_cells(grid, start, goal)
    oracle = dijkstra_costs(grid, start)
    assert path_cost(cells) == pytest.approx(oracle[goal], abs=0.0)


def test_astar_optimal_on_random_grids_exact():
    rng = random.Random(421)
    for _ in range(12):
        grid = random_grid(rng, size=32, fill=0.3)
        start = free_cell(rng, grid)
        goal = free_cell(rng, grid)
        oracle = dijkstra_costs(grid, start)
        if goal not in oracle:
            with pytest.raises(NoPathError):
                astar_cells(grid, start, goal)
            continue
        cells = astar_cells(grid, start, goal)
        # Exact equality: compare (straight, diagonal) step counts, which the
        # irrationality of sqrt(2) makes unique for a given optimal cost.
        s, d = path_step_counts(cells)
        assert s + d * ROOT2 == pytest.approx(oracle[goal], abs=1e-9)
        assert path_cost(cells) <= oracle[goal] + 1e-9


def test_unreachable_goal_raises():
    scene = make_scene(
        bounds=(0.0, 0.0, 10.0, 10.0),
        obstacles=[rect_poly(4.0, 0.0, 5.0, 10.0)],  # full wall
        resolution=0.5,
    )
    grid = rasterize_occupancy(scene, 0.0)
    with pytest.raises(NoPathError):
        plan_waypoints(grid, (2.0, 5.2), (8.0, 5.2))


def test_occupied_start_raises():
    scene = make_scene(
        bounds=(0.0, 0.0, 10.0, 10.0),
        obstacles=[rect_poly(4.0, 4.0, 6.0, 6.0)],
        resolution=0.5,
    )
    grid = rasterize_occupancy(scene, 0.0)
    with pytest.raises(NoPathError):
        plan_waypoints(grid, (5.0, 5.0), (1.0, 1.0))


def test_shortcut_segments_keep_line_of_sight():
    scene = make_scene(
        bounds=(0.0, 0.0, 20.0, 20.0),
        obstacles=[rect_poly(6.0, 6.0, 14.0, 9.0)],
        resolution=0.5,
    )
    grid = rasterize_occupancy(scene, 0.25)
    path = plan_waypoints(grid, (2.0, 7.5), (18.0, 7.5))
    assert path[0] == (2.0, 7.5)
    assert path[-1] == (18.0, 7.5)
    for a, b in zip(path, path[1:]):
        assert line_of_sight(grid, a, b)


def test_shortcut_never_lengthens():
    rng = random.Random(7)
    for _ in range(6):
        grid = random_grid(rng, size=24, fill=0.2)
        start = free_cell(rng, grid)
        goal = free_cell(rng, grid)
        try:
            cells = astar_cells(grid, start, goal)
        except NoPathError:
            continue
        pts = [grid.center_of(*c) for c in cells]
        short = shortcut_path(grid, pts)
        length = sum(math.dist(a, b) for a, b in zip(pts, pts[1:]))
        short_length = sum(math.dist(a, b) for a, b in zip(short, short[1:]))
        assert short_length <= length + 1e-9
        assert short[0] == pts[0] and short[-1] == pts[-1]
