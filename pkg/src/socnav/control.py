"""Controller contract and the two built-in controllers: a deterministic
baseline planner (global grid plan + reactive local law) and the teleoperation
dead-man rule fed by the bridge."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .geometry import Point, Pose2D, normalize_angle
from .grid import OccupancyGrid, rasterize_occupancy
from .planning import NoPathError, plan_waypoints
from .robot import RobotSpec, Twist
from .scene import Scene
from .sensing import DEFAULT_SCAN, Observation, ScanSpec

# Human commands older than this many ticks are replaced by a full stop.
DEADMAN_TICKS = 10  # 0.5 s at 20 Hz


@dataclass(frozen=True)
class ControllerDecision:
    twist: Twist
    done_hint: bool = False  # advisory; the trial runner decides termination


class ZeroController:
    """Stands still forever; the reference do-nothing baseline for metrics."""

    name = "zero"

    def reset(self) -> None:
        pass

    def decide(self, obs: Observation) -> ControllerDecision:
        return ControllerDecision(Twist(0.0, 0.0), done_hint=False)


def teleop_decide(latest_cmd: Twist | None, staleness_ticks: int) -> ControllerDecision:
    """Pass through the most recent human command; dead-man stop when stale."""
    if latest_cmd is None or staleness_ticks > DEADMAN_TICKS:
        return ControllerDecision(Twist(0.0, 0.0), done_hint=False)
    return ControllerDecision(latest_cmd, done_hint=False)


@dataclass(frozen=True)
class BaselineConfig:
    """All baseline thresholds, config-visible in one place."""

    replan_period: float = 2.0  # s
    lookahead: float = 1.0  # m
    slow_range: float = 1.5  # m, linear speed scaling starts here
    stop_range: float = 0.6  # m, full stop below this forward range
    sector_half_angle: float = math.pi / 6.0  # +-30 degrees forward sector
    heading_gain: float = 2.5  # rad/s per rad of heading error
    no_progress_window: float = 1.0  # s
    no_progress_distance: float = 0.1  # m
    start_snap_radius: float = 1.0  # m, re-plan start snapped to a free cell


@dataclass
class BaselineState:
    path: list[Point] | None = None
    last_replan_time: float = -math.inf
    history: deque = field(default_factory=deque)  # (sim_time, x, y)


def _forward_sector_indices(spec: ScanSpec, half_angle: float) -> list[int]:
    out = []
    step = spec.fov / spec.beam_count
    for k in range(spec.beam_count):
        rel = normalize_angle(spec.angular_offset + k * step)
        if -half_angle <= rel <= half_angle:
            out.append(k)
    return out


def _lookahead_point(path: list[Point], pose: Pose2D, lookahead: float) -> Point:
    """Point `lookahead` meters along the path beyond the robot's projection."""
    if len(path) == 1:
        return path[0]
    # Project onto the polyline: closest segment point wins.
    best_seg = 0
    best_t = 0.0
    best_d = math.inf
    for i in range(len(path) - 1):
        ax, ay = path[i]
        bx, by = path[i + 1]
        ex, ey = bx - ax, by - ay
        ll = ex * ex + ey * ey
        t = 0.0 if ll == 0.0 else ((pose.x - ax) * ex + (pose.y - ay) * ey) / ll
        t = min(max(t, 0.0), 1.0)
        qx, qy = ax + t * ex, ay + t * ey
        d = math.hypot(pose.x - qx, pose.y - qy)
        if d < best_d:
            best_d, best_seg, best_t = d, i, t
    # Walk forward along the remaining polyline.
    remaining = lookahead
    ax, ay = path[best_seg]
    bx, by = path[best_seg + 1]
    cx, cy = ax + best_t * (bx - ax), ay + best_t * (by - ay)
    for i in range(best_seg, len(path) - 1):
        tx, ty = path[i + 1]
        seg = math.hypot(tx - cx, ty - cy)
        if seg >= remaining and seg > 0.0:
            f = remaining / seg
            return (cx + f * (tx - cx), cy + f * (ty - cy))
        remaining -= seg
        cx, cy = tx, ty
    return path[-1]


def baseline_decide(
    obs: Observation,
    grid: OccupancyGrid,
    state: BaselineState,
    spec: RobotSpec,
    goal_tolerance: float,
    sector: list[int],
    cfg: BaselineConfig,
) -> ControllerDecision:
    """One decision of the built-in planner; mutates `state` (path, timers)."""
    goal_distance = obs.pose.distance_to(obs.goal)
    if goal_distance <= goal_tolerance:
        return ControllerDecision(Twist(0.0, 0.0), done_hint=True)

    # Progress bookkeeping for stuck detection.
    history = state.history
    history.append((obs.sim_time, obs.pose.x, obs.pose.y))
    while history and obs.sim_time - history[0][0] > cfg.no_progress_window:
        history.popleft()
    stuck = False
    if history and obs.sim_time - history[0][0] >= cfg.no_progress_window * 0.99:
        _, x0, y0 = history[0]
        stuck = math.hypot(obs.pose.x - x0, obs.pose.y - y0) < cfg.no_progress_distance

    if (
        state.path is None
        or obs.sim_time - state.last_replan_time >= cfg.replan_period
        or stuck
    ):
        state.last_replan_time = obs.sim_time
        if stuck:
            history.clear()
        start: Point | None = obs.pose.xy
        if not grid.is_free_point(start):
            cell = grid.nearest_free_cell(start, cfg.start_snap_radius)
            start = grid.center_of(*cell) if cell else None
        if start is None:
            state.path = None
        else:
            try:
                state.path = plan_waypoints(grid, start, obs.goal.xy)
            except NoPathError:
                state.path = None

    if state.path is None:
        return ControllerDecision(Twist(0.0, 0.0), done_hint=False)  # wait; may time out

    tx, ty = _lookahead_point(state.path, obs.pose, cfg.lookahead)
    alpha = normalize_angle(math.atan2(ty - obs.pose.y, tx - obs.pose.x) - obs.pose.theta)
    w = min(max(cfg.heading_gain * alpha, -spec.w_max), spec.w_max)

    min_ahead = min(obs.scan[k] for k in sector)
    if min_ahead < cfg.stop_range:
        return ControllerDecision(Twist(0.0, w), done_hint=False)
    scale = min(max((min_ahead - cfg.stop_range) / (cfg.slow_range - cfg.stop_range), 0.0), 1.0)
    v = spec.v_max * scale * max(0.0, math.cos(alpha))
    return ControllerDecision(Twist(v, w), done_hint=False)


class BaselineController:
    """Deterministic autonomous baseline: A* global path (replanned on a timer
    or when stuck) plus pure-pursuit steering with scan-based speed limits."""

    name = "builtin"

    def __init__(
        self,
        scene: Scene,
        spec: RobotSpec,
        goal_tolerance: float,
        scan_spec: ScanSpec = DEFAULT_SCAN,
        cfg: BaselineConfig | None = None,
    ) -> None:
        self.cfg = cfg or BaselineConfig()
        self.spec = spec
        self.goal_tolerance = goal_tolerance
        # Plan with at least the stop-range clearance: corridors the reactive
        # law refuses to enter must not appear in the global plan, or the
        # robot deadlocks in front of them.
        self.grid = rasterize_occupancy(scene, max(spec.footprint_radius, self.cfg.stop_range))
        self.sector = _forward_sector_indices(scan_spec, self.cfg.sector_half_angle)
        self.state = BaselineState()

    def reset(self) -> None:
        self.state = BaselineState()

    def decide(self, obs: Observation) -> ControllerDecision:
        return baseline_decide(
            obs, self.grid, self.state, self.spec, self.goal_tolerance, self.sector, self.cfg
        )


def make_controller(
    name: str, scene: Scene, spec: RobotSpec, goal_tolerance: float, scan_spec: ScanSpec = DEFAULT_SCAN
):
    """Controllers addressable from a trial config; `teleop` and `external`
    are driven through the bridge instead."""
    if name == "builtin":
        return BaselineController(scene, spec, goal_tolerance, scan_spec)
    if name == "zero":
        return ZeroController()
    raise KeyError(f"unknown controller {name!r} (known: builtin, zero)")
