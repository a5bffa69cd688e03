"""Shared test fixtures: synthetic scenes and small helpers."""

from __future__ import annotations

import math

import pytest

from socnav.geometry import Pose2D
from socnav.scene import Scene, validate_scene


def rect_poly(x0: float, y0: float, x1: float, y1: float):
    """Axis-aligned rectangle as a CCW polygon."""
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def make_scene(
    name: str = "test",
    bounds=(0.0, 0.0, 20.0, 20.0),
    obstacles=(),
    ped_anchors=(),
    robot_anchors=(),
    resolution: float = 0.25,
    validate: bool = True,
) -> Scene:
    scene = Scene(
        name=name,
        bounds=tuple(float(v) for v in bounds),
        grid_resolution=resolution,
        obstacles=tuple(tuple(tuple(p) for p in poly) for poly in obstacles),
        ped_anchors=tuple(a if isinstance(a, Pose2D) else Pose2D(*a) for a in ped_anchors),
        robot_anchors=tuple(a if isinstance(a, Pose2D) else Pose2D(*a) for a in robot_anchors),
    )
    if validate:
        validate_scene(scene)
    return scene


@pytest.fixture
def open_scene() -> Scene:
    """Wide empty scene whose walls sit beyond the default scan range."""
    return make_scene(name="open", bounds=(0.0, 0.0, 200.0, 200.0), resolution=1.0)


@pytest.fixture
def corridor_scene() -> Scene:
    """Empty 40 x 10 m strip for straight-line driving tests."""
    return make_scene(
        name="corridor",
        bounds=(0.0, 0.0, 40.0, 10.0),
        resolution=0.25,
        robot_anchors=((1.0, 5.0, 0.0), (6.0, 5.0, 0.0), (30.0, 5.0, 0.0)),
        ped_anchors=((2.0, 2.0, 0.0), (38.0, 2.0, 0.0), (20.0, 8.0, 0.0)),
    )


def close(a: float, b: float, tol: float = 1e-9) -> bool:
    return abs(a - b) <= tol


def angles_equal(a: float, b: float, tol: float = 1e-9) -> bool:
    d = (a - b) % (2.0 * math.pi)
    return min(d, 2.0 * math.pi - d) <= tol
