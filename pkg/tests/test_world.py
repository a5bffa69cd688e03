import math
import random

import pytest

from conftest import make_scene, rect_poly

from test_crowd import mk_ped

from socnav.geometry import Pose2D
from socnav.robot import JACKAL, RobotSpec, Twist
from socnav.world import (
    CONTACT_REARM_SEPARATION,
    ContactEvent,
    detect_collisions,
    initial_world,
    step,
    surface_separations,
    update_contact_latch,
)

TEST_SPEC = RobotSpec("test", footprint_radius=0.3, v_max=2.0, w_max=4.0, a_max=20.0, alpha_max=25.0)


def mk_world(scene, pose=Pose2D(0.0, 0.0, 0.0), peds=(), spec=JACKAL, dt=0.05):
    return initial_world(spec, pose, list(peds), nav=None, dt=dt)


def test_step_zero_command_empty_scene(open_scene):
    world = mk_world(open_scene, pose=Pose2D(100.0, 100.0, 0.5))
    out, contacts = step(world, open_scene, Twist(0.0, 0.0), 0.05)
    assert out.tick == 1
    assert out.sim_time == pytest.approx(0.05)
    assert out.robot.pose == world.robot.pose
    assert out.robot.twist == Twist(0.0, 0.0)
    assert contacts == []


def test_step_straight_motion(open_scene):
    world = mk_world(open_scene, pose=Pose2D(100.0, 100.0, 0.0))
    out, _ = step(world, open_scene, Twist(1.0, 0.0), 0.05)
    assert out.robot.pose.x == pytest.approx(100.05)
    assert out.robot.pose.y == 100.0
    assert out.robot.pose.theta == 0.0
    assert out.tick == 1


def test_step_rejects_wrong_dt(open_scene):
    world = mk_world(open_scene)
    with pytest.raises(ValueError):
        step(world, open_scene, Twist(0.0, 0.0), 0.1)


def test_hundred_steps_vs_recomputation(open_scene):
    # Oracle: re-run the exact same stepping from a fresh build.
    def build():
        peds = [
            mk_ped(pid=0, x=104.0, y=100.0, waypoints=[(90.0, 100.0)]),
            mk_ped(pid=1, x=100.0, y=104.0, waypoints=[(100.0, 90.0)]),
        ]
        return mk_world(open_scene, pose=Pose2D(100.0, 100.0, 0.0), peds=peds)

    rng = random.Random(3)
    cmds = [Twist(rng.uniform(-2, 2), rng.uniform(-3, 3)) for _ in range(100)]

    worlds = []
    for _ in range(2):
        world = build()
        for cmd in cmds:
            world, _ = step(world, open_scene, cmd, 0.05)
        worlds.append(world)
    a, b = worlds
    assert a.robot.pose == b.robot.pose
    assert a.robot.twist == b.robot.twist
    assert a.tick == b.tick == 100
    for pa, pb in zip(a.pedestrians, b.pedestrians):
        assert pa.pose == pb.pose
        assert pa.velocity == pb.velocity


def test_speed_bound_and_theta_normalized(open_scene):
    rng = random.Random(11)
    world = mk_world(open_scene, pose=Pose2D(100.0, 100.0, 0.0))
    for _ in range(200):
        cmd = Twist(rng.uniform(-5, 5), rng.uniform(-6, 6))
        prev = world.robot.pose
        world, _ = step(world, open_scene, cmd, 0.05)
        moved = math.hypot(world.robot.pose.x - prev.x, world.robot.pose.y - prev.y)
        assert moved <= JACKAL.v_max * 0.05 + 1e-9
        assert -math.pi < world.robot.pose.theta <= math.pi


def test_detect_collisions_pedestrian_cases(open_scene):
    far = mk_ped(pid=0, x=101.0, y=100.0)
    world = mk_world(open_scene, pose=Pose2D(100.0, 100.0, 0.0), peds=[far], spec=TEST_SPEC)
    assert detect_collisions(world, open_scene) == []  # gap 0.4

    near = mk_ped(pid=0, x=100.5, y=100.0)
    world = mk_world(open_scene, pose=Pose2D(100.0, 100.0, 0.0), peds=[near], spec=TEST_SPEC)
    assert detect_collisions(world, open_scene) == [ContactEvent("pedestrian", 0)]


def test_detect_collisions_static_edge():
    scene = make_scene(bounds=(0.0, 0.0, 20.0, 20.0), obstacles=[rect_poly(10.0, 5.0, 12.0, 15.0)])
    world = mk_world(scene, pose=Pose2D(9.8, 10.0, 0.0), spec=TEST_SPEC)  # 0.2 m from edge
    assert detect_collisions(world, scene) == [ContactEvent("static", 0)]
    world = mk_world(scene, pose=Pose2D(9.6, 10.0, 0.0), spec=TEST_SPEC)  # 0.4 m away
    assert detect_collisions(world, scene) == []


def test_detect_collisions_bounds():
    scene = make_scene(bounds=(0.0, 0.0, 20.0, 20.0))
    world = mk_world(scene, pose=Pose2D(0.2, 10.0, 0.0), spec=TEST_SPEC)
    assert detect_collisions(world, scene) == [ContactEvent("static", -1)]


def test_collision_symmetry_brute_force(open_scene):
    rng = random.Random(77)
    for _ in range(50):
        peds = [
            mk_ped(pid=i, x=rng.uniform(98.0, 102.0), y=rng.uniform(98.0, 102.0))
            for i in range(6)
        ]
        pose = Pose2D(rng.uniform(98.0, 102.0), rng.uniform(98.0, 102.0), 0.0)
        world = mk_world(open_scene, pose=pose, peds=peds, spec=TEST_SPEC)
        got = {(c.kind, c.other_id) for c in detect_collisions(world, open_scene)}
        expected = set()
        for p in peds:
            d = math.hypot(p.pose.x - pose.x, p.pose.y - pose.y)
            if d < TEST_SPEC.footprint_radius + p.radius:
                expected.add(("pedestrian", p.id))
        assert got == expected


def test_latch_counts_once_per_contact():
    latched = frozenset()
    total = 0
    for _ in range(40):  # continuous overlap
        latched, newly = update_contact_latch(latched, [("pedestrian", 0, -0.05)])
        total += len(newly)
    assert total == 1
    # hysteresis: separated but within the re-arm band keeps the latch
    latched, newly = update_contact_latch(latched, [("pedestrian", 0, 0.03)])
    assert not newly
    latched, newly = update_contact_latch(latched, [("pedestrian", 0, -0.01)])
    assert not newly  # still latched: no second count
    # full separation re-arms
    latched, newly = update_contact_latch(latched, [("pedestrian", 0, CONTACT_REARM_SEPARATION + 1e-6)])
    assert not newly
    latched, newly = update_contact_latch(latched, [("pedestrian", 0, -0.01)])
    assert len(newly) == 1


def test_surface_separations_tracks_all_bodies():
    scene = make_scene(bounds=(0.0, 0.0, 20.0, 20.0), obstacles=[rect_poly(10.0, 5.0, 12.0, 15.0)])
    ped = mk_ped(pid=4, x=3.0, y=3.0)
    world = mk_world(scene, pose=Pose2D(5.0, 10.0, 0.0), peds=[ped], spec=TEST_SPEC)
    seps = dict(((k, i), s) for k, i, s in surface_separations(world, scene))
    assert seps[("pedestrian", 4)] == pytest.approx(math.hypot(2.0, 7.0) - 0.3 - 0.25)
    assert seps[("static", 0)] == pytest.approx(5.0 - 0.3)
    assert seps[("static", -1)] == pytest.approx(5.0 - 0.3)


def test_pedestrians_advance_in_id_order(open_scene):
    peds = [mk_ped(pid=2, x=105.0, y=100.0), mk_ped(pid=0, x=95.0, y=100.0)]
    world = mk_world(open_scene, pose=Pose2D(100.0, 100.0, 0.0), peds=peds)
    assert [p.id for p in world.pedestrians] == [0, 2]
    out, _ = step(world, open_scene, Twist(0.0, 0.0), 0.05)
    assert [p.id for p in out.pedestrians] == [0, 2]
