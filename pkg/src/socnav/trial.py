"""The trial runner: seeded episode generation, execution with termination
rules, metric collection, bit-exact record/replay, and mu +/- sigma
aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable

from .crowd import (
    CrowdConfig,
    CrowdError,
    PEDESTRIAN_RADIUS,
    Pedestrian,
    make_nav,
    scene_params,
    spawn_crowd,
)
from .geometry import Pose2D
from .grid import rasterize_occupancy
from .jsonio import content_hash
from .planning import NoPathError, plan_waypoints
from .robot import Twist, get_spec
from .rng import episode_seed, make_stream
from .scene import Scene, load_scene
from .sensing import DEFAULT_SCAN, Observation, ScanSpec, make_observation, nearest_pedestrian_distance
from .world import (
    ContactEvent,
    DT,
    ENGINE_VERSION,
    WorldState,
    initial_world,
    step,
    surface_separations,
    update_contact_latch,
)

_SPAWN_ATTEMPTS = 100


class TrialConfigError(ValueError):
    """The trial configuration cannot be realized (unknown ids, bad counts...)."""


class ReplayVersionError(RuntimeError):
    """Record was produced by an incompatible engine."""


class ReplayMismatchError(RuntimeError):
    def __init__(self, tick: int, fieldname: str, detail: str = "") -> None:
        self.tick = tick
        self.field = fieldname
        super().__init__(f"replay diverged at tick {tick}, field {fieldname!r}{': ' + detail if detail else ''}")


@dataclass(frozen=True)
class TrialConfig:
    scene: str = "lab"
    robot: str = "jackal"
    controller: str = "builtin"
    episodes: int = 10
    master_seed: int = 0
    crowd: CrowdConfig = field(default_factory=lambda: CrowdConfig(count=6))
    timeout: float = 120.0  # s
    goal_tolerance: float = 0.5  # m
    dt: float = DT

    def __post_init__(self) -> None:
        if self.episodes < 0:
            raise TrialConfigError("episodes must be >= 0")
        if self.dt <= 0.0:
            raise TrialConfigError("dt must be > 0")
        if self.goal_tolerance <= 0.0:
            raise TrialConfigError("goal_tolerance must be > 0")
        ticks = self.timeout / self.dt
        if self.timeout <= 0.0 or abs(ticks - round(ticks)) > 1e-9:
            raise TrialConfigError("timeout must be a positive multiple of dt")

    def to_dict(self) -> dict[str, Any]:
        return {
            "scene": self.scene,
            "robot": self.robot,
            "controller": self.controller,
            "episodes": self.episodes,
            "master_seed": self.master_seed,
            "crowd": {
                "count": self.crowd.count,
                "speed_range": list(self.crowd.desired_speed_range),
                "regoal": self.crowd.regoal,
            },
            "timeout": self.timeout,
            "goal_tolerance": self.goal_tolerance,
            "dt": self.dt,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "TrialConfig":
        crowd_raw = raw.get("crowd", {})
        crowd = CrowdConfig(
            count=int(crowd_raw.get("count", 0)),
            desired_speed_range=tuple(crowd_raw.get("speed_range", (0.8, 1.6))),
            regoal=bool(crowd_raw.get("regoal", True)),
        )
        return cls(
            scene=raw.get("scene", "lab"),
            robot=raw.get("robot", "jackal"),
            controller=raw.get("controller", "builtin"),
            episodes=int(raw.get("episodes", 10)),
            master_seed=int(raw.get("master_seed", 0)),
            crowd=crowd,
            timeout=float(raw.get("timeout", 120.0)),
            goal_tolerance=float(raw.get("goal_tolerance", 0.5)),
            dt=float(raw.get("dt", DT)),
        )


@dataclass(frozen=True)
class PedestrianInit:
    id: int
    pose: Pose2D
    goal: Pose2D
    goal_anchor: int
    desired_speed: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "pose": [self.pose.x, self.pose.y, self.pose.theta],
            "goal": [self.goal.x, self.goal.y, self.goal.theta],
            "goal_anchor": self.goal_anchor,
            "desired_speed": self.desired_speed,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "PedestrianInit":
        return cls(
            id=int(raw["id"]),
            pose=Pose2D(*raw["pose"]),
            goal=Pose2D(*raw["goal"]),
            goal_anchor=int(raw["goal_anchor"]),
            desired_speed=float(raw["desired_speed"]),
        )


@dataclass(frozen=True)
class EpisodeConfig:
    """The complete recorded initial condition of one episode; everything
    needed to re-create tick 0 exactly. Identified by its content hash."""

    episode_id: int
    master_seed: int
    scene: str
    robot_spec: str
    robot_start: Pose2D
    robot_goal: Pose2D
    crowd: CrowdConfig
    pedestrians: tuple[PedestrianInit, ...]
    dt: float
    timeout: float
    goal_tolerance: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "episode_id": self.episode_id,
            "master_seed": self.master_seed,
            "scene": self.scene,
            "robot_spec": self.robot_spec,
            "robot_start": [self.robot_start.x, self.robot_start.y, self.robot_start.theta],
            "robot_goal": [self.robot_goal.x, self.robot_goal.y, self.robot_goal.theta],
            "crowd": {
                "count": self.crowd.count,
                "speed_range": list(self.crowd.desired_speed_range),
                "regoal": self.crowd.regoal,
            },
            "pedestrians": [p.to_dict() for p in self.pedestrians],
            "dt": self.dt,
            "timeout": self.timeout,
            "goal_tolerance": self.goal_tolerance,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "EpisodeConfig":
        crowd_raw = raw["crowd"]
        return cls(
            episode_id=int(raw["episode_id"]),
            master_seed=int(raw["master_seed"]),
            scene=str(raw["scene"]),
            robot_spec=str(raw["robot_spec"]),
            robot_start=Pose2D(*raw["robot_start"]),
            robot_goal=Pose2D(*raw["robot_goal"]),
            crowd=CrowdConfig(
                count=int(crowd_raw["count"]),
                desired_speed_range=tuple(crowd_raw["speed_range"]),
                regoal=bool(crowd_raw["regoal"]),
            ),
            pedestrians=tuple(PedestrianInit.from_dict(p) for p in raw["pedestrians"]),
            dt=float(raw["dt"]),
            timeout=float(raw["timeout"]),
            goal_tolerance=float(raw["goal_tolerance"]),
        )

    @property
    def config_hash(self) -> str:
        return content_hash(self.to_dict())


@dataclass
class EpisodeMetrics:
    completed: bool
    elapsed: float
    final_distance: float
    min_ped_distance: float | None
    ped_collisions: int
    static_collisions: int
    aborted: bool = False
    abort_reason: str | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "completed": self.completed,
            "elapsed": self.elapsed,
            "final_distance": self.final_distance,
            "ped_collisions": self.ped_collisions,
            "static_collisions": self.static_collisions,
            "aborted": self.aborted,
        }
        if self.min_ped_distance is not None:
            out["min_ped_distance"] = self.min_ped_distance
        if self.abort_reason is not None:
            out["abort_reason"] = self.abort_reason
        return out

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "EpisodeMetrics":
        return cls(
            completed=bool(raw["completed"]),
            elapsed=float(raw["elapsed"]),
            final_distance=float(raw["final_distance"]),
            min_ped_distance=raw.get("min_ped_distance"),
            ped_collisions=int(raw["ped_collisions"]),
            static_collisions=int(raw["static_collisions"]),
            aborted=bool(raw.get("aborted", False)),
            abort_reason=raw.get("abort_reason"),
        )


@dataclass
class TickLog:
    tick: int
    cmd: Twist | None  # the controller's requested twist, pre-clamp; None on the final tick
    pose: Pose2D
    twist: Twist  # actual (clamped) robot twist at this tick
    ped_poses: list[tuple[float, float, float]]
    contacts: list[ContactEvent]

    def to_dict(self) -> dict[str, Any]:
        return {
            "tick": self.tick,
            "cmd": None if self.cmd is None else [self.cmd.v, self.cmd.w],
            "robot": {
                "pose": [self.pose.x, self.pose.y, self.pose.theta],
                "twist": [self.twist.v, self.twist.w],
            },
            "peds": [list(p) for p in self.ped_poses],
            "contacts": [[c.kind, c.other_id] for c in self.contacts],
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "TickLog":
        cmd = raw["cmd"]
        return cls(
            tick=int(raw["tick"]),
            cmd=None if cmd is None else Twist(float(cmd[0]), float(cmd[1])),
            pose=Pose2D(*raw["robot"]["pose"]),
            twist=Twist(*raw["robot"]["twist"]),
            ped_poses=[tuple(p) for p in raw["peds"]],
            contacts=[ContactEvent(str(k), int(i)) for k, i in raw["contacts"]],
        )


@dataclass
class EpisodeRecord:
    config: EpisodeConfig
    ticks: list[TickLog]
    metrics: EpisodeMetrics
    engine_version: str = ENGINE_VERSION


def generate_episode(trial: TrialConfig, episode_index: int, master_seed: int) -> EpisodeConfig:
    """Pure function of its arguments: derives the per-episode seed and the
    named sub-streams, places the robot on a reachable anchor pair and spawns
    the crowd."""
    scene = load_scene(trial.scene)
    spec = get_spec(trial.robot)
    seed = episode_seed(master_seed, episode_index)
    robot_stream = make_stream(seed, "robot_spawn")
    crowd_stream = make_stream(seed, "crowd_spawn")

    anchors = scene.robot_anchors
    if len(anchors) < 2:
        raise TrialConfigError(f"scene {trial.scene!r} needs at least 2 robot anchors")
    grid = rasterize_occupancy(scene, spec.footprint_radius)

    chosen: tuple[Pose2D, Pose2D] | None = None
    for _ in range(_SPAWN_ATTEMPTS):
        si = robot_stream.randrange(len(anchors))
        gi = robot_stream.randrange(len(anchors))
        if si == gi:
            continue
        start, goal = anchors[si], anchors[gi]
        if start.distance_to(goal) <= trial.goal_tolerance:
            continue
        try:
            plan_waypoints(grid, start.xy, goal.xy)
        except NoPathError:
            continue
        chosen = (start, goal)
        break
    if chosen is None:
        raise TrialConfigError(
            f"scene {trial.scene!r}: no reachable robot start/goal pair after "
            f"{_SPAWN_ATTEMPTS} resamples (robot {trial.robot!r})"
        )

    try:
        peds = spawn_crowd(scene, trial.crowd, crowd_stream)
    except CrowdError as exc:
        raise TrialConfigError(str(exc)) from None

    return EpisodeConfig(
        episode_id=episode_index,
        master_seed=master_seed,
        scene=trial.scene,
        robot_spec=trial.robot,
        robot_start=chosen[0],
        robot_goal=chosen[1],
        crowd=trial.crowd,
        pedestrians=tuple(
            PedestrianInit(
                id=p.id, pose=p.pose, goal=p.goal, goal_anchor=p.goal_anchor, desired_speed=p.desired_speed
            )
            for p in peds
        ),
        dt=trial.dt,
        timeout=trial.timeout,
        goal_tolerance=trial.goal_tolerance,
    )


def _rebuild_pedestrians(config: EpisodeConfig, scene: Scene) -> list[Pedestrian]:
    """Reconstruct tick-0 pedestrians from the recorded initial conditions;
    waypoints and re-goal streams are deterministic functions of the config."""
    grid = rasterize_occupancy(scene, PEDESTRIAN_RADIUS)
    params = scene_params(scene)
    seed = episode_seed(config.master_seed, config.episode_id)
    peds = []
    for init in config.pedestrians:
        waypoints = plan_waypoints(grid, init.pose.xy, init.goal.xy)
        peds.append(
            Pedestrian(
                id=init.id,
                pose=init.pose,
                velocity=(0.0, 0.0),
                radius=PEDESTRIAN_RADIUS,
                desired_speed=init.desired_speed,
                goal=init.goal,
                goal_anchor=init.goal_anchor,
                waypoints=waypoints,
                params=params,
                regoal_rng=make_stream(seed, "crowd_regoal", init.id),
            )
        )
    return peds


class EpisodeRun:
    """Stateful stepper for one episode: observe -> apply a command -> repeat
    until goal-reach or timeout. Both the in-process runner and the bridge
    drive episodes through this class, so their trajectories are identical."""

    def __init__(self, config: EpisodeConfig, scan_spec: ScanSpec = DEFAULT_SCAN) -> None:
        self.config = config
        self.scene = load_scene(config.scene)
        self.spec = get_spec(config.robot_spec)
        self.scan_spec = scan_spec
        ticks = config.timeout / config.dt
        if abs(ticks - round(ticks)) > 1e-9:
            raise TrialConfigError("timeout must be a multiple of dt")
        self.max_ticks = int(round(ticks))

        nav = make_nav(self.scene, config.crowd.regoal)
        peds = _rebuild_pedestrians(config, self.scene)
        self.world: WorldState = initial_world(self.spec, config.robot_start, peds, nav, config.dt)
        seps = surface_separations(self.world, self.scene)
        flags, newly = update_contact_latch(frozenset(), seps)
        self.world.collision_flags = flags
        self.ped_collisions = sum(1 for e in newly if e.kind == "pedestrian")
        self.static_collisions = sum(1 for e in newly if e.kind == "static")
        self.min_ped_distance = nearest_pedestrian_distance(self.world)

        contacts0 = [ContactEvent(k, i) for k, i, s in seps if s < 0.0]
        self.ticks: list[TickLog] = [self._log_entry(contacts0)]

        self.done = False
        self.completed = False
        self.elapsed = 0.0
        self.final_distance = 0.0
        self.aborted = False
        self.abort_reason: str | None = None
        self._check_termination()

    def _log_entry(self, contacts: list[ContactEvent]) -> TickLog:
        robot = self.world.robot
        return TickLog(
            tick=self.world.tick,
            cmd=None,
            pose=robot.pose,
            twist=robot.twist,
            ped_poses=[(p.pose.x, p.pose.y, p.pose.theta) for p in self.world.pedestrians],
            contacts=contacts,
        )

    def _goal_distance(self) -> float:
        return self.world.robot.pose.distance_to(self.config.robot_goal)

    def _check_termination(self) -> None:
        d = self._goal_distance()
        if d <= self.config.goal_tolerance:
            self.done = True
            self.completed = True
            self.elapsed = self.world.tick * self.config.dt
            self.final_distance = d
        elif self.world.tick >= self.max_ticks:
            self.done = True
            self.completed = False
            self.elapsed = self.config.timeout  # exactly the configured value
            self.final_distance = d

    def observation(self) -> Observation:
        return make_observation(self.world, self.scene, self.config.robot_goal, self.scan_spec)

    def apply_cmd(self, twist: Twist) -> bool:
        """Advance one tick under the requested twist; returns True when the
        episode terminated on this tick."""
        if self.done:
            raise RuntimeError("episode already terminated")
        self.ticks[-1].cmd = twist
        before_flags = self.world.collision_flags
        self.world, contacts = step(self.world, self.scene, twist, self.config.dt)
        for kind, _ in self.world.collision_flags - before_flags:
            if kind == "pedestrian":
                self.ped_collisions += 1
            else:
                self.static_collisions += 1
        nearest = nearest_pedestrian_distance(self.world)
        if nearest is not None:
            self.min_ped_distance = (
                nearest if self.min_ped_distance is None else min(self.min_ped_distance, nearest)
            )
        self.ticks.append(self._log_entry(contacts))
        self._check_termination()
        return self.done

    def abort(self, reason: str) -> None:
        self.done = True
        self.completed = False
        self.aborted = True
        self.abort_reason = reason
        self.elapsed = self.world.tick * self.config.dt
        self.final_distance = self._goal_distance()

    def metrics(self) -> EpisodeMetrics:
        if not self.done:
            raise RuntimeError("episode still running")
        return EpisodeMetrics(
            completed=self.completed,
            elapsed=self.elapsed,
            final_distance=self.final_distance,
            min_ped_distance=self.min_ped_distance,
            ped_collisions=self.ped_collisions,
            static_collisions=self.static_collisions,
            aborted=self.aborted,
            abort_reason=self.abort_reason,
        )

    def record(self) -> EpisodeRecord:
        return EpisodeRecord(config=self.config, ticks=self.ticks, metrics=self.metrics())

    def live_metrics(self) -> dict[str, Any]:
        """Running values for HUD display over the bridge."""
        out: dict[str, Any] = {
            "elapsed": self.world.sim_time,
            "goal_distance": self._goal_distance(),
            "ped_collisions": self.ped_collisions,
            "static_collisions": self.static_collisions,
            "min_ped_distance": self.min_ped_distance,
        }
        return out


def run_episode(config: EpisodeConfig, controller) -> EpisodeRecord:
    """Drive an EpisodeRun with a synchronous controller until termination.

    A controller exception aborts the episode (partial metrics, reason kept)
    rather than crashing the trial.
    """
    run = EpisodeRun(config)
    controller.reset()
    while not run.done:
        obs = run.observation()
        try:
            decision = controller.decide(obs)
        except Exception as exc:  # noqa: BLE001 - fold into the record
            run.abort(f"controller-error: {type(exc).__name__}: {exc}")
            break
        run.apply_cmd(decision.twist)
    return run.record()


def count_collisions(separation_stream: Iterable[list[tuple[str, int, float]]]) -> tuple[int, int]:
    """Debounced (pedestrian, static) collision totals over a stream of
    per-tick surface separations."""
    latched: frozenset = frozenset()
    ped = static = 0
    for seps in separation_stream:
        latched, newly = update_contact_latch(latched, seps)
        for event in newly:
            if event.kind == "pedestrian":
                ped += 1
            else:
                static += 1
    return ped, static


def _compare_tick(expected: TickLog, actual: TickLog, tick: int) -> None:
    if expected.pose.x != actual.pose.x or expected.pose.y != actual.pose.y or expected.pose.theta != actual.pose.theta:
        raise ReplayMismatchError(tick, "robot.pose")
    if expected.twist.v != actual.twist.v or expected.twist.w != actual.twist.w:
        raise ReplayMismatchError(tick, "robot.twist")
    if expected.ped_poses != actual.ped_poses:
        raise ReplayMismatchError(tick, "peds")
    if expected.contacts != actual.contacts:
        raise ReplayMismatchError(tick, "contacts")


def replay(record: EpisodeRecord) -> EpisodeMetrics:
    """Re-simulate from the recorded config feeding the stored command stream;
    every logged tick and the final metrics must match bit-exactly."""
    if record.engine_version != ENGINE_VERSION:
        raise ReplayVersionError(
            f"record engine {record.engine_version!r} is incompatible with {ENGINE_VERSION!r}"
        )
    if not record.ticks:
        raise ReplayMismatchError(0, "ticks", "record has no tick log")
    run = EpisodeRun(record.config)
    _compare_tick(record.ticks[0], run.ticks[0], 0)
    for i, entry in enumerate(record.ticks[:-1]):
        if run.done:
            raise ReplayMismatchError(entry.tick, "termination", "record continues past termination")
        if entry.cmd is None:
            raise ReplayMismatchError(entry.tick, "cmd", "missing command before the final tick")
        run.apply_cmd(entry.cmd)
        _compare_tick(record.ticks[i + 1], run.ticks[i + 1], i + 1)
    last = record.ticks[-1]
    if last.cmd is not None:
        raise ReplayMismatchError(last.tick, "cmd", "final tick must not carry a command")
    if not run.done:
        raise ReplayMismatchError(last.tick, "termination", "record ends before termination")
    recomputed = run.metrics()
    stored = record.metrics
    for name in ("completed", "elapsed", "final_distance", "min_ped_distance",
                 "ped_collisions", "static_collisions", "aborted", "abort_reason"):
        if getattr(recomputed, name) != getattr(stored, name):
            raise ReplayMismatchError(last.tick, f"metrics.{name}")
    return recomputed


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


@dataclass
class TrialReport:
    episodes: list[EpisodeMetrics]  # aborted ones included, flagged
    aggregates: dict[str, tuple[float, float] | None]
    completion_rate: int  # integer percent over non-aborted episodes
    aborted: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "episodes": [m.to_dict() for m in self.episodes],
            "aggregates": {
                key: (None if value is None else {"mean": value[0], "std": value[1]})
                for key, value in self.aggregates.items()
            },
            "completion_rate": self.completion_rate,
            "aborted": self.aborted,
        }


def aggregate(metrics: list[EpisodeMetrics]) -> TrialReport:
    """mu and sample sigma (n-1) per numeric metric; aborted episodes are
    reported but excluded from the aggregates and the completion rate."""
    if not metrics:
        raise ValueError("need at least one episode")
    valid = [m for m in metrics if not m.aborted]
    aggregates: dict[str, tuple[float, float] | None] = {}
    if valid:
        aggregates["elapsed"] = _mean_std([m.elapsed for m in valid])
        aggregates["final_distance"] = _mean_std([m.final_distance for m in valid])
        ped_dists = [m.min_ped_distance for m in valid if m.min_ped_distance is not None]
        aggregates["min_ped_distance"] = _mean_std(ped_dists) if ped_dists else None
        aggregates["collisions"] = _mean_std(
            [float(m.ped_collisions + m.static_collisions) for m in valid]
        )
        aggregates["ped_collisions"] = _mean_std([float(m.ped_collisions) for m in valid])
        aggregates["static_collisions"] = _mean_std([float(m.static_collisions) for m in valid])
        completion = int(math.floor(100.0 * sum(1 for m in valid if m.completed) / len(valid) + 0.5))
    else:
        for key in ("elapsed", "final_distance", "min_ped_distance", "collisions",
                    "ped_collisions", "static_collisions"):
            aggregates[key] = None
        completion = 0
    return TrialReport(
        episodes=list(metrics),
        aggregates=aggregates,
        completion_rate=completion,
        aborted=len(metrics) - len(valid),
    )


def run_trial(
    trial: TrialConfig,
    controller=None,
    out_dir: str | None = None,
    scan_spec: ScanSpec = DEFAULT_SCAN,
) -> tuple[TrialReport, list[EpisodeRecord]]:
    """Generate and run the trial's episodes sequentially, persist each record
    and the aggregated report under out_dir (when given). Fully determined by
    (trial config, master seed, controller behavior)."""
    import os

    from .control import make_controller  # local: control depends on sensing
    from .records import record_filename, write_record
    from .report import write_report_files

    if trial.episodes < 1:
        raise TrialConfigError("run_trial needs at least one episode")
    if controller is None:
        scene = load_scene(trial.scene)
        spec = get_spec(trial.robot)
        controller = make_controller(trial.controller, scene, spec, trial.goal_tolerance, scan_spec)

    records_dir = None
    if out_dir is not None:
        records_dir = os.path.join(out_dir, "records")
        os.makedirs(records_dir, exist_ok=True)

    records: list[EpisodeRecord] = []
    for index in range(trial.episodes):
        config = generate_episode(trial, index, trial.master_seed)
        record = run_episode(config, controller)
        records.append(record)
        if records_dir is not None:
            write_record(os.path.join(records_dir, record_filename(index)), record)

    report = aggregate([r.metrics for r in records])
    if out_dir is not None:
        write_report_files(out_dir, report, trial)
    return report, records
