"""Scene model: walkable bounds, obstacle polygons, spawn/goal anchors.

Scenes are shipped as JSON data files (see `socnav/scenes/`) and validated on
load; the simulator never hardcodes scene dimensions.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

from .geometry import (
    Point,
    Polygon,
    Pose2D,
    Rect,
    polygon_area,
    polygon_distance,
    polygon_is_simple,
    rect_contains,
)

# Largest shipped agent radius (warthog footprint); anchors must clear every
# obstacle by strictly more than this so any agent can legally occupy them.
MAX_AGENT_RADIUS = 0.70

SCENE_PATH_ENV = "SOCNAV_SCENE_PATH"

MIN_POLYGON_AREA = 1e-6  # m^2; degenerate polygons are rejected at load time


class SceneError(ValueError):
    """Raised when a scene file violates a scene invariant; message names the field."""


@dataclass
class Scene:
    name: str
    bounds: Rect
    grid_resolution: float
    obstacles: tuple[Polygon, ...]
    ped_anchors: tuple[Pose2D, ...]
    robot_anchors: tuple[Pose2D, ...]
    # Optional per-scene override of the crowd steering parameters (raw mapping,
    # merged with defaults in `crowd`). Shipped scenes use the defaults.
    social_force: dict[str, float] | None = None
    # Lazily built derived structures (occupancy grids, scan segment arrays);
    # keyed caches, not part of the scene's value.
    _derived: dict[Any, Any] = field(default_factory=dict, repr=False, compare=False)

    @property
    def width(self) -> float:
        return self.bounds[2] - self.bounds[0]

    @property
    def height(self) -> float:
        return self.bounds[3] - self.bounds[1]

    @property
    def area(self) -> float:
        return self.width * self.height

    def obstacle_clearance(self, p: Point) -> float:
        """Distance from p to the nearest obstacle (0 when inside one)."""
        if not self.obstacles:
            return math.inf
        return min(polygon_distance(p, poly) for poly in self.obstacles)


def validate_scene(scene: Scene) -> None:
    """Check every scene invariant; raises SceneError naming the offending field."""
    x0, y0, x1, y1 = scene.bounds
    if not all(math.isfinite(v) for v in scene.bounds):
        raise SceneError("bounds: values must be finite")
    if x1 <= x0 or y1 <= y0:
        raise SceneError("bounds: empty rectangle")
    if scene.grid_resolution <= 0.0:
        raise SceneError("grid_resolution: must be > 0")

    for i, poly in enumerate(scene.obstacles):
        if len(poly) < 3:
            raise SceneError(f"obstacles[{i}]: polygon needs at least 3 vertices")
        area = polygon_area(poly)
        if abs(area) < MIN_POLYGON_AREA:
            raise SceneError(f"obstacles[{i}]: degenerate polygon (area ~ 0)")
        if area < 0.0:
            raise SceneError(f"obstacles[{i}]: vertices must be counter-clockwise")
        if not polygon_is_simple(poly):
            raise SceneError(f"obstacles[{i}]: polygon is self-intersecting")

    for label, anchors in (("ped_anchors", scene.ped_anchors), ("robot_anchors", scene.robot_anchors)):
        for i, anchor in enumerate(anchors):
            if not rect_contains(scene.bounds, anchor.xy):
                raise SceneError(f"{label}[{i}]: anchor lies outside bounds")
            clearance = scene.obstacle_clearance(anchor.xy)
            if clearance <= MAX_AGENT_RADIUS:
                raise SceneError(
                    f"{label}[{i}]: anchor clearance {clearance:.3f} m does not exceed "
                    f"the largest agent radius {MAX_AGENT_RADIUS} m"
                )


def _parse_pose_list(raw: Any, label: str) -> tuple[Pose2D, ...]:
    if not isinstance(raw, list):
        raise SceneError(f"{label}: expected a list")
    poses = []
    for i, item in enumerate(raw):
        if not (isinstance(item, list) and len(item) == 3 and all(isinstance(v, (int, float)) for v in item)):
            raise SceneError(f"{label}[{i}]: expected [x, y, theta]")
        poses.append(Pose2D(float(item[0]), float(item[1]), float(item[2])))
    return tuple(poses)


def scene_from_dict(raw: dict[str, Any]) -> Scene:
    for key in ("name", "bounds", "grid_resolution", "obstacles", "ped_anchors", "robot_anchors"):
        if key not in raw:
            raise SceneError(f"{key}: missing required field")
    bounds_raw = raw["bounds"]
    if not (isinstance(bounds_raw, list) and len(bounds_raw) == 4):
        raise SceneError("bounds: expected [x0, y0, x1, y1]")
    obstacles = []
    if not isinstance(raw["obstacles"], list):
        raise SceneError("obstacles: expected a list of polygons")
    for i, poly_raw in enumerate(raw["obstacles"]):
        if not isinstance(poly_raw, list):
            raise SceneError(f"obstacles[{i}]: expected a list of [x, y] vertices")
        poly = []
        for j, vert in enumerate(poly_raw):
            if not (isinstance(vert, list) and len(vert) == 2 and all(isinstance(v, (int, float)) for v in vert)):
                raise SceneError(f"obstacles[{i}][{j}]: expected [x, y]")
            poly.append((float(vert[0]), float(vert[1])))
        obstacles.append(tuple(poly))
    sf = raw.get("social_force")
    if sf is not None and not isinstance(sf, dict):
        raise SceneError("social_force: expected an object of parameter overrides")
    scene = Scene(
        name=str(raw["name"]),
        bounds=tuple(float(v) for v in bounds_raw),  # type: ignore[arg-type]
        grid_resolution=float(raw["grid_resolution"]),
        obstacles=tuple(obstacles),
        ped_anchors=_parse_pose_list(raw["ped_anchors"], "ped_anchors"),
        robot_anchors=_parse_pose_list(raw["robot_anchors"], "robot_anchors"),
        social_force=dict(sf) if sf else None,
    )
    validate_scene(scene)
    return scene


def load_scene_file(path: str) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise SceneError(f"{path}: top level must be an object")
    try:
        return scene_from_dict(raw)
    except SceneError as exc:
        raise SceneError(f"{path}: {exc}") from None


def builtin_scene_names() -> list[str]:
    names = []
    for entry in resources.files("socnav.scenes").iterdir():
        if entry.name.endswith(".json"):
            names.append(entry.name[: -len(".json")])
    return sorted(names)


# Packaged scenes are immutable; sharing one instance shares its derived
# caches (occupancy grids, scan segments) across episodes.
_BUILTIN_CACHE: dict[str, Scene] = {}


def load_scene(name: str) -> Scene:
    """Load a scene by name, searching SOCNAV_SCENE_PATH directories first,
    then the scenes shipped with the package. A path to a .json file also works."""
    if name.endswith(".json") and os.path.exists(name):
        return load_scene_file(name)
    for directory in os.environ.get(SCENE_PATH_ENV, "").split(os.pathsep):
        if not directory:
            continue
        candidate = os.path.join(directory, f"{name}.json")
        if os.path.exists(candidate):
            return load_scene_file(candidate)
    if name in _BUILTIN_CACHE:
        return _BUILTIN_CACHE[name]
    packaged = resources.files("socnav.scenes").joinpath(f"{name}.json")
    if packaged.is_file():
        raw = json.loads(packaged.read_text(encoding="utf-8"))
        try:
            scene = scene_from_dict(raw)
        except SceneError as exc:
            raise SceneError(f"{name}.json: {exc}") from None
        _BUILTIN_CACHE[name] = scene
        return scene
    known = ", ".join(builtin_scene_names())
    raise KeyError(f"unknown scene {name!r} (known: {known})")
