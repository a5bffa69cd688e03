import json
import math
import struct

import pytest

from socnav.control import BaselineController, ZeroController
from socnav.crowd import CrowdConfig
from socnav.geometry import Pose2D
from socnav.robot import JACKAL, Twist, get_spec
from socnav.scene import load_scene
from socnav.trial import (
    EpisodeConfig,
    EpisodeMetrics,
    EpisodeRun,
    ReplayMismatchError,
    ReplayVersionError,
    TrialConfig,
    TrialConfigError,
    aggregate,
    count_collisions,
    generate_episode,
    replay,
    run_episode,
    run_trial,
)

CORRIDOR = {
    "name": "strip",
    "bounds": [0.0, 0.0, 40.0, 10.0],
    "grid_resolution": 0.25,
    "obstacles": [],
    "ped_anchors": [[2.0, 2.0, 0.0], [38.0, 2.0, 0.0], [20.0, 8.0, 0.0]],
    "robot_anchors": [[1.0, 5.0, 0.0], [6.0, 5.0, 0.0], [30.0, 5.0, 0.0]],
}


@pytest.fixture
def corridor_path(tmp_path):
    path = tmp_path / "strip.json"
    path.write_text(json.dumps(CORRIDOR))
    return str(path)


def corridor_config(corridor_path, goal_x=6.0, timeout=10.0, tolerance=0.5, episode_id=0):
    return EpisodeConfig(
        episode_id=episode_id,
        master_seed=1,
        scene=corridor_path,
        robot_spec="jackal",
        robot_start=Pose2D(1.0, 5.0, 0.0),
        robot_goal=Pose2D(goal_x, 5.0, 0.0),
        crowd=CrowdConfig(count=0),
        pedestrians=(),
        dt=0.05,
        timeout=timeout,
        goal_tolerance=tolerance,
    )


def test_generate_episode_deterministic():
    cfg = TrialConfig(scene="lab", robot="jackal", episodes=1, master_seed=5, crowd=CrowdConfig(count=6))
    a = generate_episode(cfg, 0, 5)
    b = generate_episode(cfg, 0, 5)
    assert a == b
    assert a.config_hash == b.config_hash


def test_generate_episode_hashes_differ_across_indices():
    # Oracle: enumerate all 100 configs directly and compare hashes pairwise.
    cfg = TrialConfig(scene="lab", robot="jackal", episodes=100, master_seed=9, crowd=CrowdConfig(count=4))
    hashes = [generate_episode(cfg, i, 9).config_hash for i in range(100)]
    assert len(set(hashes)) == 100


def test_generate_episode_contract():
    cfg = TrialConfig(scene="city", robot="warthog", episodes=1, master_seed=3, crowd=CrowdConfig(count=10))
    ec = generate_episode(cfg, 0, 3)
    assert ec.robot_start != ec.robot_goal
    assert ec.robot_start.distance_to(ec.robot_goal) > cfg.goal_tolerance
    assert len(ec.pedestrians) == 10
    anchors = {a.xy for a in load_scene("city").robot_anchors}
    assert ec.robot_start.xy in anchors and ec.robot_goal.xy in anchors


def test_generate_episode_empty_crowd():
    cfg = TrialConfig(scene="lab", robot="jackal", episodes=1, master_seed=2, crowd=CrowdConfig(count=0))
    ec = generate_episode(cfg, 0, 2)
    assert ec.pedestrians == ()
    record = run_episode(ec, ZeroController())
    assert record.metrics.min_ped_distance is None


def test_zero_velocity_episode_times_out(corridor_path):
    config = corridor_config(corridor_path, goal_x=6.0, timeout=10.0)
    record = run_episode(config, ZeroController())
    m = record.metrics
    assert not m.completed
    assert m.elapsed == 10.0  # exactly the configured timeout
    assert m.final_distance == 5.0
    assert len(record.ticks) == round(m.elapsed / config.dt) + 1


def test_start_within_tolerance_completes_immediately(corridor_path):
    config = corridor_config(corridor_path, goal_x=1.3, tolerance=0.5)
    record = run_episode(config, ZeroController())
    assert record.metrics.completed
    assert record.metrics.elapsed == 0.0
    assert len(record.ticks) == 1
    assert record.ticks[0].cmd is None


def test_baseline_corridor_timing_matches_rate_limited_profile(corridor_path):
    # Oracle: scalar rate-limited speed profile, counted in whole ticks.
    # Tolerance must exceed v_max*dt/2 or the discrete trajectory can step
    # across the goal disc without ever sampling inside it.
    tolerance = 0.06
    config = corridor_config(corridor_path, goal_x=6.0, timeout=30.0, tolerance=tolerance)
    spec = get_spec("jackal")
    controller = BaselineController(load_scene(corridor_path), spec, tolerance)
    record = run_episode(config, controller)
    assert record.metrics.completed

    v = x = 0.0
    ticks = 0
    while x < 5.0 - tolerance:
        v = min(v + spec.a_max * config.dt, spec.v_max)
        x += v * config.dt
        ticks += 1
    expected = ticks * config.dt
    assert expected <= record.metrics.elapsed <= expected + 10 * config.dt


def test_count_collisions_examples():
    assert count_collisions([]) == (0, 0)
    assert count_collisions([[("pedestrian", 0, -0.1)]] * 40) == (1, 0)
    stream = (
        [[("pedestrian", 0, -0.1)]] * 3
        + [[("pedestrian", 0, 0.06)]] * 5
        + [[("pedestrian", 0, -0.1)]] * 3
    )
    assert count_collisions(stream) == (2, 0)
    # mixed kinds split correctly
    assert count_collisions([[("pedestrian", 0, -0.1), ("static", 2, -0.2)]]) == (1, 1)


def test_replay_fresh_record(corridor_path):
    config = corridor_config(corridor_path, goal_x=6.0, timeout=5.0)
    record = run_episode(config, ZeroController())
    first = replay(record)
    second = replay(record)
    assert first == record.metrics
    assert first == second


def test_replay_detects_flipped_cmd_bit():
    cfg = TrialConfig(scene="lab", robot="jackal", episodes=1, master_seed=4,
                      crowd=CrowdConfig(count=3), timeout=30.0)
    ec = generate_episode(cfg, 0, 4)
    controller = BaselineController(load_scene("lab"), JACKAL, cfg.goal_tolerance)
    record = run_episode(ec, controller)
    tick = min(10, len(record.ticks) - 2)
    cmd = record.ticks[tick].cmd
    bits = struct.unpack("<Q", struct.pack("<d", cmd.v))[0] ^ 1
    record.ticks[tick].cmd = Twist(struct.unpack("<d", struct.pack("<Q", bits))[0], cmd.w)
    with pytest.raises(ReplayMismatchError) as err:
        replay(record)
    assert err.value.tick == tick + 1


def test_replay_rejects_other_engine(corridor_path):
    config = corridor_config(corridor_path, goal_x=6.0, timeout=5.0)
    record = run_episode(config, ZeroController())
    record.engine_version = "other-engine/step9"
    with pytest.raises(ReplayVersionError):
        replay(record)


def test_metric_invariants_on_lab_runs():
    cfg = TrialConfig(scene="lab", robot="jackal", controller="zero", episodes=4,
                      master_seed=12, crowd=CrowdConfig(count=8), timeout=5.0)
    report, records = run_trial(cfg)
    for record in records:
        m = record.metrics
        if m.completed:
            assert m.final_distance <= cfg.goal_tolerance
        else:
            assert m.elapsed == cfg.timeout
        if m.ped_collisions > 0:
            assert m.min_ped_distance == 0.0
        if m.min_ped_distance is not None:
            assert m.min_ped_distance >= 0.0
        # final_distance is exactly the distance from the last logged pose
        last = record.ticks[-1].pose
        assert m.final_distance == last.distance_to(record.config.robot_goal)


def test_aggregate_identical_episodes():
    rows = [EpisodeMetrics(True, 5.0, 0.3, 1.0, 0, 0) for _ in range(10)]
    report = aggregate(rows)
    assert report.aggregates["elapsed"] == (5.0, 0.0)
    assert report.completion_rate == 100


def test_aggregate_sixty_percent():
    rows = [EpisodeMetrics(i < 6, 5.0, 0.3, None, 0, 0) for i in range(10)]
    assert aggregate(rows).completion_rate == 60


def test_aggregate_sample_std():
    rows = [EpisodeMetrics(True, float(v), 0.0, None, 0, 0) for v in (1, 2, 3)]
    mean, std = aggregate(rows).aggregates["elapsed"]
    assert mean == pytest.approx(2.0)
    assert std == pytest.approx(1.0)


def test_aggregate_single_episode_zero_std():
    rows = [EpisodeMetrics(True, 4.0, 0.1, 2.0, 1, 0)]
    report = aggregate(rows)
    assert report.aggregates["elapsed"] == (4.0, 0.0)
    assert report.aggregates["collisions"] == (1.0, 0.0)


def test_aggregate_excludes_aborted():
    rows = [
        EpisodeMetrics(True, 4.0, 0.1, None, 0, 0),
        EpisodeMetrics(False, 1.0, 3.0, None, 0, 0, aborted=True, abort_reason="disconnect"),
    ]
    report = aggregate(rows)
    assert report.aborted == 1
    assert report.completion_rate == 100
    assert report.aggregates["elapsed"] == (4.0, 0.0)


def test_run_trial_deterministic_files(tmp_path):
    cfg = TrialConfig(scene="lab", robot="jackal", controller="builtin", episodes=2,
                      master_seed=6, crowd=CrowdConfig(count=4), timeout=30.0)
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        run_trial(cfg, out_dir=str(out))
        outs.append(out)
    for name in ("report.json", "report.csv", "report.txt"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    for rec in sorted((outs[0] / "records").iterdir()):
        twin = outs[1] / "records" / rec.name
        assert rec.read_bytes() == twin.read_bytes()


def test_run_trial_row_count():
    cfg = TrialConfig(scene="lab", robot="jackal", controller="zero", episodes=10,
                      master_seed=8, crowd=CrowdConfig(count=0), timeout=1.0)
    report, records = run_trial(cfg)
    assert len(report.episodes) == 10
    assert len(records) == 10


def test_density_plumbing_matched_seeds():
    base = dict(scene="lab", robot="jackal", controller="zero", episodes=3,
                master_seed=21, timeout=5.0)
    empty, _ = run_trial(TrialConfig(crowd=CrowdConfig(count=0), **base))
    dense, _ = run_trial(TrialConfig(crowd=CrowdConfig(count=12), **base))
    assert empty.aggregates["min_ped_distance"] is None
    assert dense.aggregates["min_ped_distance"] is not None
    assert all(m.ped_collisions == 0 for m in empty.episodes)
    assert all(m.ped_collisions >= 0 for m in dense.episodes)


def test_controller_exception_aborts_episode(corridor_path):
    class Exploding:
        def reset(self):
            pass

        def decide(self, obs):
            raise RuntimeError("boom")

    config = corridor_config(corridor_path, goal_x=6.0, timeout=5.0)
    record = run_episode(config, Exploding())
    assert record.metrics.aborted
    assert "boom" in record.metrics.abort_reason
    assert not record.metrics.completed


def test_trial_config_validation():
    with pytest.raises(TrialConfigError):
        TrialConfig(episodes=-1)
    with pytest.raises(TrialConfigError):
        TrialConfig(timeout=0.07)  # not a multiple of dt
    with pytest.raises(TrialConfigError):
        TrialConfig(goal_tolerance=0.0)
    round_trip = TrialConfig.from_dict(TrialConfig().to_dict())
    assert round_trip == TrialConfig()
