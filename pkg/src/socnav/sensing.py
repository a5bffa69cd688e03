"""Robot observations: planar range scan by exact raycasting against obstacle
edges, scene bounds, and pedestrian circles, plus ground-truth pose/goal."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .geometry import Pose2D, rect_edges
from .robot import Twist
from .scene import Scene
from .world import WorldState


@dataclass(frozen=True)
class ScanSpec:
    beam_count: int = 360
    fov: float = 2.0 * math.pi
    r_min: float = 0.1  # m
    r_max: float = 30.0  # m
    angular_offset: float = 0.0  # beam 0 relative to the robot heading

    def __post_init__(self) -> None:
        if self.beam_count < 1:
            raise ValueError("beam_count must be >= 1")
        if not (0.0 < self.r_min < self.r_max):
            raise ValueError("need 0 < r_min < r_max")
        if not (0.0 < self.fov <= 2.0 * math.pi + 1e-12):
            raise ValueError("need 0 < fov <= 2*pi")

    def beam_angles(self, heading: float) -> np.ndarray:
        k = np.arange(self.beam_count, dtype=np.float64)
        return heading + self.angular_offset + k * (self.fov / self.beam_count)


DEFAULT_SCAN = ScanSpec()


def _scene_segments(scene: Scene) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (start, delta) arrays for every obstacle edge and bounds edge."""
    key = "scan_segments"
    cached = scene._derived.get(key)
    if cached is not None:
        return cached
    starts: list[tuple[float, float]] = []
    deltas: list[tuple[float, float]] = []
    for poly in scene.obstacles:
        n = len(poly)
        for i in range(n):
            a, b = poly[i], poly[(i + 1) % n]
            starts.append(a)
            deltas.append((b[0] - a[0], b[1] - a[1]))
    for a, b in rect_edges(scene.bounds):
        starts.append(a)
        deltas.append((b[0] - a[0], b[1] - a[1]))
    arrays = (np.asarray(starts, dtype=np.float64), np.asarray(deltas, dtype=np.float64))
    scene._derived[key] = arrays
    return arrays


def lidar_scan(world: WorldState, scene: Scene, spec: ScanSpec = DEFAULT_SCAN) -> list[float]:
    """One range per beam: nearest exact intersection with any obstacle edge,
    bounds edge, or pedestrian circle, clamped to [r_min, r_max]. Beams that
    hit nothing report exactly r_max. The robot never sees itself."""
    pose = world.robot.pose
    angles = spec.beam_angles(pose.theta)
    dx = np.cos(angles)
    dy = np.sin(angles)
    best = np.full(spec.beam_count, np.inf)

    starts, deltas = _scene_segments(scene)
    if len(starts):
        ax = starts[:, 0][None, :] - pose.x  # (beams, segments) after broadcast
        ay = starts[:, 1][None, :] - pose.y
        ex = deltas[:, 0][None, :]
        ey = deltas[:, 1][None, :]
        denom = dx[:, None] * ey - dy[:, None] * ex
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (ax * ey - ay * ex) / denom
            u = (ax * dy[:, None] - ay * dx[:, None]) / denom
        valid = (np.abs(denom) >= 1e-15) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
        t = np.where(valid, t, np.inf)
        best = np.minimum(best, t.min(axis=1, initial=np.inf))

    for ped in world.pedestrians:
        fx = pose.x - ped.pose.x
        fy = pose.y - ped.pose.y
        b = fx * dx + fy * dy
        c = fx * fx + fy * fy - ped.radius * ped.radius
        disc = b * b - c
        hit = disc >= 0.0
        s = np.sqrt(np.where(hit, disc, 0.0))
        t1 = -b - s
        t2 = -b + s
        t = np.where(t1 >= 0.0, t1, np.where(t2 >= 0.0, t2, np.inf))
        t = np.where(hit, t, np.inf)
        best = np.minimum(best, t)

    ranges = np.clip(best, spec.r_min, spec.r_max)
    return [float(r) for r in ranges]


@dataclass
class Observation:
    """The per-tick packet a controller consumes."""

    tick: int
    sim_time: float
    pose: Pose2D
    twist: Twist
    goal: Pose2D
    scan: list[float]
    nearest_ped_distance: float | None  # absent iff there are no pedestrians

    def to_payload(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "tick": self.tick,
            "sim_time": self.sim_time,
            "pose": [self.pose.x, self.pose.y, self.pose.theta],
            "twist": [self.twist.v, self.twist.w],
            "goal": [self.goal.x, self.goal.y, self.goal.theta],
            "scan": list(self.scan),
        }
        if self.nearest_ped_distance is not None:
            payload["nearest_ped_distance"] = self.nearest_ped_distance
        return payload

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "Observation":
        return cls(
            tick=int(payload["tick"]),
            sim_time=float(payload["sim_time"]),
            pose=Pose2D(*payload["pose"]),
            twist=Twist(*payload["twist"]),
            goal=Pose2D(*payload["goal"]),
            scan=[float(r) for r in payload["scan"]],
            nearest_ped_distance=payload.get("nearest_ped_distance"),
        )


def nearest_pedestrian_distance(world: WorldState) -> float | None:
    """Smallest robot-pedestrian surface distance, floored at 0; None without
    pedestrians."""
    if not world.pedestrians:
        return None
    rx, ry = world.robot.pose.x, world.robot.pose.y
    r = world.robot.spec.footprint_radius
    best = min(
        math.hypot(p.pose.x - rx, p.pose.y - ry) - r - p.radius for p in world.pedestrians
    )
    return max(0.0, best)


def make_observation(
    world: WorldState, scene: Scene, goal: Pose2D, spec: ScanSpec = DEFAULT_SCAN
) -> Observation:
    return Observation(
        tick=world.tick,
        sim_time=world.sim_time,
        pose=world.robot.pose,
        twist=world.robot.twist,
        goal=goal,
        scan=lidar_scan(world, scene, spec),
        nearest_ped_distance=nearest_pedestrian_distance(world),
    )
