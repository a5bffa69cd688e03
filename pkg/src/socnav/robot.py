"""Robot kinematics: velocity commands, actuation limits, exact arc integration."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Pose2D, normalize_angle

# Below this angular rate the arc integrator falls back to a straight line.
STRAIGHT_W_EPS = 1e-9


@dataclass(frozen=True)
class Twist:
    """Commanded planar velocity: signed linear v (m/s) and angular w (rad/s)."""

    v: float = 0.0
    w: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.v) and math.isfinite(self.w)):
            raise ValueError(f"non-finite twist ({self.v}, {self.w})")


@dataclass(frozen=True)
class RobotSpec:
    name: str
    footprint_radius: float  # m
    v_max: float  # m/s
    w_max: float  # rad/s
    a_max: float  # m/s^2
    alpha_max: float  # rad/s^2

    def __post_init__(self) -> None:
        for field in ("footprint_radius", "v_max", "w_max", "a_max", "alpha_max"):
            if getattr(self, field) <= 0.0:
                raise ValueError(f"robot spec {self.name}: {field} must be > 0")


# Footprints and limits are declared here, not taken from the robots' datasheets
# verbatim; they are recorded in every episode config so experiments are explicit.
JACKAL = RobotSpec("jackal", footprint_radius=0.25, v_max=2.0, w_max=4.0, a_max=20.0, alpha_max=25.0)
WARTHOG = RobotSpec("warthog", footprint_radius=0.70, v_max=5.0, w_max=4.0, a_max=20.0, alpha_max=25.0)

BUILTIN_SPECS: dict[str, RobotSpec] = {spec.name: spec for spec in (JACKAL, WARTHOG)}


def get_spec(name: str) -> RobotSpec:
    try:
        return BUILTIN_SPECS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_SPECS))
        raise KeyError(f"unknown robot spec {name!r} (known: {known})") from None


def _rate_then_bound(requested: float, previous: float, rate: float, bound: float, dt: float) -> float:
    step = rate * dt
    value = previous + min(max(requested - previous, -step), step)
    return min(max(value, -bound), bound)


def clamp_twist(requested: Twist, previous: Twist, spec: RobotSpec, dt: float) -> Twist:
    """Apply acceleration limits relative to the previous command, then speed limits."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    return Twist(
        v=_rate_then_bound(requested.v, previous.v, spec.a_max, spec.v_max, dt),
        w=_rate_then_bound(requested.w, previous.w, spec.alpha_max, spec.w_max, dt),
    )


def integrate_unicycle(pose: Pose2D, twist: Twist, dt: float) -> Pose2D:
    """Exact constant-twist arc over dt (straight line when |w| is negligible)."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    v, w = twist.v, twist.w
    if abs(w) < STRAIGHT_W_EPS:
        return Pose2D(
            pose.x + v * dt * math.cos(pose.theta),
            pose.y + v * dt * math.sin(pose.theta),
            pose.theta,
        )
    theta1 = pose.theta + w * dt
    r = v / w
    return Pose2D(
        pose.x + r * (math.sin(theta1) - math.sin(pose.theta)),
        pose.y - r * (math.cos(theta1) - math.cos(pose.theta)),
        normalize_angle(theta1),
    )
