"""Pedestrian crowd: social-force steering toward planned waypoints,
seeded spawn/goal assignment from scene anchors, and re-goaling."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

from .geometry import (
    Point,
    Pose2D,
    closest_point_on_polygon,
    polygon_signed_distance,
    rect_inside_margin,
)
from .grid import OccupancyGrid, rasterize_occupancy
from .planning import NoPathError, plan_waypoints
from .rng import unit_vector_for_pair
from .scene import Scene

PEDESTRIAN_RADIUS = 0.25  # m

# Steering behavior constants; values are recorded in the episode config via
# SocialForceParams so runs are self-describing.
SPEED_CAP_FACTOR = 1.3  # post-integration cap relative to desired speed
WAYPOINT_POP_RADIUS = 0.3  # m
HEADING_SPEED_MIN = 0.05  # m/s; below this the heading holds its last value
REPULSION_CAP = 50.0  # m/s^2 per term
REPULSION_CUTOFF = 3.0  # m surface gap beyond which repulsion is exactly zero
_GOAL_DRAW_ATTEMPTS = 50
_REGOAL_SNAP_RADIUS = 0.6  # m; snap drifted pedestrians back onto a free cell


class CrowdError(ValueError):
    """Crowd configuration cannot be realized in the scene."""


@dataclass(frozen=True)
class SocialForceParams:
    tau: float = 0.5  # s, relaxation time of the driving term
    A: float = 2.0  # m/s^2, agent repulsion strength
    B: float = 0.35  # m, agent repulsion range
    A_obs: float = 3.0  # m/s^2, obstacle repulsion strength
    B_obs: float = 0.25  # m, obstacle repulsion range

    def __post_init__(self) -> None:
        for name in ("tau", "A", "B", "A_obs", "B_obs"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"social force parameter {name} must be > 0")


def scene_params(scene: Scene) -> SocialForceParams:
    if scene.social_force:
        return SocialForceParams(**scene.social_force)
    return SocialForceParams()


@dataclass(frozen=True)
class CrowdConfig:
    count: int = 0
    desired_speed_range: tuple[float, float] = (0.8, 1.6)  # m/s
    regoal: bool = True

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("crowd count must be >= 0")
        lo, hi = self.desired_speed_range
        if not (0.0 < lo <= hi):
            raise ValueError("desired_speed_range must satisfy 0 < min <= max")


@dataclass
class Pedestrian:
    id: int
    pose: Pose2D
    velocity: tuple[float, float]
    radius: float
    desired_speed: float
    goal: Pose2D
    goal_anchor: int  # index into scene.ped_anchors, -1 after a failed regoal
    waypoints: list[Point]
    params: SocialForceParams
    regoal_rng: random.Random | None = field(default=None, repr=False, compare=False)

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


@dataclass(frozen=True)
class CrowdNav:
    """Scene navigation context pedestrians need when they pick new goals."""

    grid: OccupancyGrid
    anchors: tuple[Pose2D, ...]
    regoal: bool


def make_nav(scene: Scene, regoal: bool) -> CrowdNav:
    return CrowdNav(
        grid=rasterize_occupancy(scene, PEDESTRIAN_RADIUS),
        anchors=scene.ped_anchors,
        regoal=regoal,
    )


def _capped(fx: float, fy: float, cap: float = REPULSION_CAP) -> tuple[float, float]:
    mag = math.hypot(fx, fy)
    if mag > cap:
        scale = cap / mag
        return fx * scale, fy * scale
    return fx, fy


def _agent_repulsion(
    p: Point, r: float, own_id: int, q: Point, r_other: float, other_id: int, params: SocialForceParams
) -> tuple[float, float]:
    dx, dy = p[0] - q[0], p[1] - q[1]
    d = math.hypot(dx, dy)
    if d == 0.0:
        nx, ny = unit_vector_for_pair(own_id, other_id)
        return _capped(nx * REPULSION_CAP, ny * REPULSION_CAP)
    if d - r - r_other > REPULSION_CUTOFF:
        return 0.0, 0.0
    mag = params.A * math.exp((r + r_other - d) / params.B)
    return _capped(mag * dx / d, mag * dy / d)


def _nearest_solid(p: Point, scene: Scene) -> tuple[float, float, float]:
    """(signed distance, outward unit x, outward unit y) to the nearest solid
    surface: obstacle polygons and the scene boundary walls."""
    best_d = rect_inside_margin(scene.bounds, p)
    x0, y0, x1, y1 = scene.bounds
    # Inward normal of whichever wall attains the margin (fixed check order).
    if best_d == p[0] - x0:
        best_n = (1.0, 0.0)
    elif best_d == x1 - p[0]:
        best_n = (-1.0, 0.0)
    elif best_d == p[1] - y0:
        best_n = (0.0, 1.0)
    else:
        best_n = (0.0, -1.0)
    for poly in scene.obstacles:
        sd = polygon_signed_distance(p, poly)
        if sd < best_d:
            q = closest_point_on_polygon(p, poly)
            dx, dy = p[0] - q[0], p[1] - q[1]
            norm = math.hypot(dx, dy)
            if norm == 0.0:
                n = (0.0, 1.0)
            elif sd >= 0.0:
                n = (dx / norm, dy / norm)
            else:
                n = (-dx / norm, -dy / norm)  # inside: escape toward the boundary
            best_d, best_n = sd, n
    return best_d, best_n[0], best_n[1]


def social_force(
    ped: Pedestrian,
    others: list[Pedestrian],
    robot: tuple[float, float, float] | None,
    scene: Scene,
) -> tuple[float, float]:
    """Steering acceleration: goal-driving term plus exponential repulsion from
    other agents (the robot counts as one) and the nearest solid surface."""
    params = ped.params
    px, py = ped.pose.x, ped.pose.y

    fx = fy = 0.0
    at_final = len(ped.waypoints) <= 1 and (
        not ped.waypoints or ped.pose.distance_to(ped.waypoints[0]) <= WAYPOINT_POP_RADIUS
    )
    if not at_final:
        wx, wy = ped.waypoints[0]
        d = math.hypot(wx - px, wy - py)
        if d > 0.0:
            ex, ey = (wx - px) / d, (wy - py) / d
            fx += (ped.desired_speed * ex - ped.velocity[0]) / params.tau
            fy += (ped.desired_speed * ey - ped.velocity[1]) / params.tau
    else:
        fx += (0.0 - ped.velocity[0]) / params.tau
        fy += (0.0 - ped.velocity[1]) / params.tau

    for other in others:
        rx, ry = _agent_repulsion(
            (px, py), ped.radius, ped.id, other.pose.xy, other.radius, other.id, params
        )
        fx += rx
        fy += ry
    if robot is not None:
        rx, ry = _agent_repulsion((px, py), ped.radius, ped.id, (robot[0], robot[1]), robot[2], -1, params)
        fx += rx
        fy += ry

    d_obs, nx, ny = _nearest_solid((px, py), scene)
    if d_obs - ped.radius <= REPULSION_CUTOFF:
        mag = min(params.A_obs * math.exp((ped.radius - d_obs) / params.B_obs), REPULSION_CAP)
        fx += mag * nx
        fy += mag * ny
    return fx, fy


def _draw_goal(
    stream: random.Random,
    grid: OccupancyGrid,
    anchors: tuple[Pose2D, ...],
    start: Point,
    exclude: int,
) -> tuple[int, list[Point]]:
    """Sample a goal anchor != exclude that is reachable from start."""
    n = len(anchors)
    for _ in range(_GOAL_DRAW_ATTEMPTS):
        idx = stream.randrange(n)
        if idx == exclude:
            continue
        try:
            return idx, plan_waypoints(grid, start, anchors[idx].xy)
        except NoPathError:
            continue
    raise CrowdError(f"no reachable goal anchor from {start} after {_GOAL_DRAW_ATTEMPTS} draws")


def spawn_crowd(scene: Scene, config: CrowdConfig, stream: random.Random) -> list[Pedestrian]:
    """Seeded crowd: distinct spawn anchors, per-pedestrian goal and speed.

    Fully determined by (scene, config, stream seed); pedestrians come back in
    id order with zero initial velocity and freshly planned waypoints.
    """
    n = len(scene.ped_anchors)
    if config.count > n:
        raise CrowdError(f"crowd count {config.count} exceeds {n} pedestrian anchors")
    if config.count > 0 and n < 2:
        raise CrowdError("scene needs at least 2 pedestrian anchors to assign goals")

    grid = rasterize_occupancy(scene, PEDESTRIAN_RADIUS)
    params = scene_params(scene)

    # Partial Fisher-Yates keeps the draw count fixed for a given crowd size.
    indices = list(range(n))
    for k in range(config.count):
        j = k + stream.randrange(n - k)
        indices[k], indices[j] = indices[j], indices[k]
    spawn_indices = indices[: config.count]

    lo, hi = config.desired_speed_range
    peds: list[Pedestrian] = []
    for ped_id, anchor_idx in enumerate(spawn_indices):
        anchor = scene.ped_anchors[anchor_idx]
        if not grid.is_free_point(anchor.xy):
            raise CrowdError(f"ped_anchors[{anchor_idx}] is not on a free grid cell")
        goal_idx, waypoints = _draw_goal(stream, grid, scene.ped_anchors, anchor.xy, anchor_idx)
        speed = stream.uniform(lo, hi)
        peds.append(
            Pedestrian(
                id=ped_id,
                pose=anchor,
                velocity=(0.0, 0.0),
                radius=PEDESTRIAN_RADIUS,
                desired_speed=speed,
                goal=scene.ped_anchors[goal_idx],
                goal_anchor=goal_idx,
                waypoints=waypoints,
                params=params,
            )
        )
    return peds


def _regoal(ped: Pedestrian, nav: CrowdNav) -> Pedestrian:
    rng = ped.regoal_rng
    if rng is None:
        return ped
    start: Point = ped.pose.xy
    if not nav.grid.is_free_point(start):
        cell = nav.grid.nearest_free_cell(start, _REGOAL_SNAP_RADIUS)
        if cell is None:
            return replace(ped, goal=ped.pose, goal_anchor=-1, waypoints=[start])
        start = nav.grid.center_of(*cell)
    try:
        idx, waypoints = _draw_goal(rng, nav.grid, nav.anchors, start, ped.goal_anchor)
    except CrowdError:
        return replace(ped, goal=ped.pose, goal_anchor=-1, waypoints=[start])
    return replace(ped, goal=nav.anchors[idx], goal_anchor=idx, waypoints=waypoints)


def step_pedestrian(
    ped: Pedestrian, force: tuple[float, float], dt: float, nav: CrowdNav | None = None
) -> Pedestrian:
    """Semi-implicit Euler under the speed cap, then waypoint bookkeeping.

    Velocity integrates first and is capped at SPEED_CAP_FACTOR x desired
    speed, then position integrates with the new velocity. Heading follows the
    velocity direction above HEADING_SPEED_MIN. Waypoints within the pop
    radius are consumed; reaching the final one triggers a re-goal when the
    nav context allows it.
    """
    vx = ped.velocity[0] + force[0] * dt
    vy = ped.velocity[1] + force[1] * dt
    speed = math.hypot(vx, vy)
    cap = SPEED_CAP_FACTOR * ped.desired_speed
    if speed > cap:
        scale = cap / speed
        vx *= scale
        vy *= scale
        speed = cap
    x = ped.pose.x + vx * dt
    y = ped.pose.y + vy * dt
    theta = math.atan2(vy, vx) if speed > HEADING_SPEED_MIN else ped.pose.theta

    new = replace(ped, pose=Pose2D(x, y, theta), velocity=(vx, vy))

    waypoints = list(new.waypoints)
    while len(waypoints) > 1 and math.hypot(waypoints[0][0] - x, waypoints[0][1] - y) <= WAYPOINT_POP_RADIUS:
        waypoints.pop(0)
    new.waypoints = waypoints
    at_final = len(waypoints) == 1 and math.hypot(waypoints[0][0] - x, waypoints[0][1] - y) <= WAYPOINT_POP_RADIUS
    if at_final and nav is not None and nav.regoal:
        new = _regoal(new, nav)
    return new
