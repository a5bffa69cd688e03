"""Fixed-timestep world model: the tick loop that advances the robot and all
pedestrians, collision detection, and the contact debounce latch."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .crowd import CrowdNav, Pedestrian, social_force, step_pedestrian
from .geometry import Pose2D, polygon_distance, rect_inside_margin
from .robot import RobotSpec, Twist, clamp_twist, integrate_unicycle
from .scene import Scene

DT = 0.05  # s, fixed physics timestep (20 Hz)

# Engine identity recorded in every episode record; replay refuses records from
# an engine with a different step ordering or timing contract.
ENGINE_VERSION = "socnav-0.1.0/step1"

# A counted contact re-arms only after the surfaces separate by more than this.
CONTACT_REARM_SEPARATION = 0.05  # m

BOUNDS_ID = -1  # other_id used for contacts with the scene boundary

ContactPair = tuple[str, int]  # ("pedestrian" | "static", other_id)


@dataclass(frozen=True)
class ContactEvent:
    kind: str  # "pedestrian" or "static"
    other_id: int  # pedestrian id, obstacle index, or BOUNDS_ID


@dataclass(frozen=True)
class RobotState:
    pose: Pose2D
    twist: Twist
    spec: RobotSpec


@dataclass
class WorldState:
    """Snapshot of one tick.

    Stepping returns a fresh WorldState; pedestrian re-goal RNG streams are
    carried by reference, so advancing a world consumes them (rebuild from the
    episode config to branch).
    """

    tick: int
    dt: float
    robot: RobotState
    pedestrians: list[Pedestrian]  # fixed id order for the whole episode
    collision_flags: frozenset[ContactPair]
    nav: CrowdNav | None = None

    @property
    def sim_time(self) -> float:
        return self.tick * self.dt


def surface_separations(world: WorldState, scene: Scene) -> list[tuple[str, int, float]]:
    """Signed surface distance from the robot to every tracked other body.

    Negative means overlap; pedestrian entries are center distance minus both
    radii, static entries are obstacle (or boundary) distance minus the
    footprint radius.
    """
    robot = world.robot
    rx, ry = robot.pose.x, robot.pose.y
    r = robot.spec.footprint_radius
    out: list[tuple[str, int, float]] = []
    for ped in world.pedestrians:
        d = math.hypot(ped.pose.x - rx, ped.pose.y - ry)
        out.append(("pedestrian", ped.id, d - r - ped.radius))
    for idx, poly in enumerate(scene.obstacles):
        out.append(("static", idx, polygon_distance((rx, ry), poly) - r))
    out.append(("static", BOUNDS_ID, rect_inside_margin(scene.bounds, (rx, ry)) - r))
    return out


def detect_collisions(world: WorldState, scene: Scene) -> list[ContactEvent]:
    """Currently overlapping robot contacts, tagged pedestrian/static.

    Pedestrian-pedestrian contacts are not reported (not a tracked metric).
    """
    return [
        ContactEvent(kind, other_id)
        for kind, other_id, sep in surface_separations(world, scene)
        if sep < 0.0
    ]


def update_contact_latch(
    latched: frozenset[ContactPair], separations: list[tuple[str, int, float]]
) -> tuple[frozenset[ContactPair], list[ContactEvent]]:
    """Debounce automaton shared by live metric counting and record replay.

    A pair entering contact while unlatched counts once and latches; it
    unlatches (re-arms) only on a tick where its separation exceeds
    CONTACT_REARM_SEPARATION.
    """
    new_latched = set()
    newly_counted: list[ContactEvent] = []
    seen: set[ContactPair] = set()
    for kind, other_id, sep in separations:
        pair = (kind, other_id)
        seen.add(pair)
        if sep < 0.0:
            if pair not in latched:
                newly_counted.append(ContactEvent(kind, other_id))
            new_latched.add(pair)
        elif sep <= CONTACT_REARM_SEPARATION and pair in latched:
            new_latched.add(pair)  # hysteresis band: stay latched
    # Pairs no longer tracked at all count as fully separated.
    return frozenset(p for p in new_latched if p in seen), newly_counted


def step(
    world: WorldState, scene: Scene, robot_cmd: Twist, dt: float
) -> tuple[WorldState, list[ContactEvent]]:
    """Advance one tick. Fixed order: clamp robot command, integrate robot,
    compute all pedestrian forces from the pre-step snapshot, integrate
    pedestrians in id order, detect collisions, update the debounce latch,
    increment the tick. Identical inputs give bit-identical outputs."""
    if dt != world.dt:
        raise ValueError(f"step dt {dt} differs from the world timestep {world.dt}")

    clamped = clamp_twist(robot_cmd, world.robot.twist, world.robot.spec, dt)
    new_pose = integrate_unicycle(world.robot.pose, clamped, dt)
    robot = RobotState(pose=new_pose, twist=clamped, spec=world.robot.spec)

    # Forces read the pre-step world (robot circle included) so the update is
    # synchronous and independent of iteration order.
    pre_robot = (world.robot.pose.x, world.robot.pose.y, world.robot.spec.footprint_radius)
    pre_peds = world.pedestrians
    forces = [
        social_force(ped, [o for o in pre_peds if o.id != ped.id], pre_robot, scene)
        for ped in pre_peds
    ]
    new_peds = [
        step_pedestrian(ped, force, dt, world.nav) for ped, force in zip(pre_peds, forces)
    ]

    new_world = WorldState(
        tick=world.tick + 1,
        dt=world.dt,
        robot=robot,
        pedestrians=new_peds,
        collision_flags=world.collision_flags,
        nav=world.nav,
    )
    seps = surface_separations(new_world, scene)
    contacts = [ContactEvent(kind, other_id) for kind, other_id, sep in seps if sep < 0.0]
    new_flags, _ = update_contact_latch(world.collision_flags, seps)
    new_world.collision_flags = new_flags
    return new_world, contacts


def initial_world(
    spec: RobotSpec,
    pose,
    pedestrians: list[Pedestrian],
    nav: CrowdNav | None,
    dt: float = DT,
) -> WorldState:
    peds = sorted(pedestrians, key=lambda p: p.id)
    return WorldState(
        tick=0,
        dt=dt,
        robot=RobotState(pose=pose, twist=Twist(0.0, 0.0), spec=spec),
        pedestrians=peds,
        collision_flags=frozenset(),
        nav=nav,
    )
