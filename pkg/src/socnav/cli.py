"""Command-line entry point: run trials, replay records, render reports, and
serve the bridge.

Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 replay or
report mismatch. Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from dataclasses import replace

from .bridge import BridgeServer
from .crowd import CrowdConfig
from .protocol import DEFAULT_PORT
from .records import RecordFormatError, list_record_files, read_record
from .report import render_table, write_report_files
from .robot import BUILTIN_SPECS
from .scene import SceneError, builtin_scene_names
from .trial import (
    ReplayMismatchError,
    ReplayVersionError,
    TrialConfig,
    TrialConfigError,
    aggregate,
    replay,
    run_trial,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_MISMATCH = 3


def _err(message: str) -> None:
    print(f"socnav: {message}", file=sys.stderr)


def _trial_from_args(args: argparse.Namespace) -> TrialConfig:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        base = TrialConfig.from_dict(raw)
    else:
        base = TrialConfig()
    overrides = {}
    if args.scene is not None:
        overrides["scene"] = args.scene
    if args.robot is not None:
        overrides["robot"] = args.robot
    if args.controller is not None:
        overrides["controller"] = args.controller
    if args.episodes is not None:
        overrides["episodes"] = args.episodes
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.timeout is not None:
        overrides["timeout"] = args.timeout
    if args.goal_tolerance is not None:
        overrides["goal_tolerance"] = args.goal_tolerance
    if args.ped_count is not None or args.no_regoal:
        crowd = base.crowd
        overrides["crowd"] = CrowdConfig(
            count=args.ped_count if args.ped_count is not None else crowd.count,
            desired_speed_range=crowd.desired_speed_range,
            regoal=False if args.no_regoal else crowd.regoal,
        )
    return replace(base, **overrides) if overrides else base


def _validate_names(cfg: TrialConfig) -> None:
    scenes = builtin_scene_names()
    if cfg.scene not in scenes and not os.path.exists(cfg.scene):
        raise TrialConfigError(f"unknown scene {cfg.scene!r} (known: {', '.join(scenes)})")
    if cfg.robot not in BUILTIN_SPECS:
        raise TrialConfigError(
            f"unknown robot {cfg.robot!r} (known: {', '.join(sorted(BUILTIN_SPECS))})"
        )


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = _trial_from_args(args)
        _validate_names(cfg)
        if cfg.controller not in ("builtin", "zero"):
            raise TrialConfigError(
                f"controller {cfg.controller!r} cannot run headless (use `serve` for teleop/external)"
            )
        if cfg.episodes < 1:
            raise TrialConfigError("episodes must be >= 1")
        report, _ = run_trial(cfg, out_dir=args.out)
    except (TrialConfigError, SceneError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    sys.stdout.write(render_table(report, cfg))
    if args.out:
        _err(f"records and report written under {args.out}")
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        record = read_record(args.record)
    except (FileNotFoundError, RecordFormatError, OSError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        metrics = replay(record)
    except ReplayVersionError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except ReplayMismatchError as exc:
        _err(str(exc))
        return EXIT_MISMATCH
    print(
        "REPLAY OK "
        + json.dumps(metrics.to_dict(), separators=(",", ":"))
    )
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        paths = list_record_files(args.records_dir)
    except (FileNotFoundError, NotADirectoryError, OSError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    if not paths:
        _err(f"no record files in {args.records_dir}")
        return EXIT_CONFIG
    metrics = []
    try:
        for path in paths:
            record = read_record(path)
            recomputed = replay(record)  # recompute, never trust stored metrics
            metrics.append(recomputed)
    except (RecordFormatError, ReplayVersionError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except ReplayMismatchError as exc:
        _err(str(exc))
        return EXIT_MISMATCH
    report = aggregate(metrics)
    sys.stdout.write(render_table(report))
    if args.out:
        write_report_files(args.out, report)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        cfg = _trial_from_args(args)
        _validate_names(cfg)
    except (TrialConfigError, SceneError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG

    async def _serve() -> None:
        server = BridgeServer(
            cfg,
            mode=args.mode,
            host=args.host,
            port=args.port,
            out_dir=args.out,
            ui_dir=args.ui_dir,
        )
        _err(f"serving {args.mode} on {args.host}:{args.port} (scene {cfg.scene}, robot {cfg.robot})")
        report = await server.serve()
        if report is not None:
            sys.stdout.write(render_table(report, cfg))

    try:
        asyncio.run(_serve())
    except OSError as exc:
        _err(f"cannot listen on port {args.port}: {exc}")
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        _err("interrupted; partial records flushed")
        return EXIT_OK
    return EXIT_OK


def _add_trial_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="trial config JSON file")
    parser.add_argument("--scene", help="scene name (lab, city) or scene file path")
    parser.add_argument("--robot", help="robot spec name (jackal, warthog)")
    parser.add_argument("--controller", help="builtin | zero (run) — serve drives teleop/external")
    parser.add_argument("--episodes", type=int, help="number of episodes")
    parser.add_argument("--seed", type=int, help="master seed (all randomness flows from it)")
    parser.add_argument("--ped-count", type=int, help="number of pedestrians")
    parser.add_argument("--no-regoal", action="store_true", help="pedestrians stop at their first goal")
    parser.add_argument("--timeout", type=float, help="episode timeout in seconds")
    parser.add_argument("--goal-tolerance", type=float, help="goal radius in meters")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socnav",
        description="Deterministic 2D social-navigation benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a seeded trial with a built-in controller")
    _add_trial_flags(p_run)
    p_run.add_argument("--out", help="output directory for records and report files")
    p_run.set_defaults(func=cmd_run)

    p_replay = sub.add_parser("replay", help="re-simulate a record and verify it bit-exactly")
    p_replay.add_argument("record", help="path to an episode record (.jsonl)")
    p_replay.set_defaults(func=cmd_replay)

    p_report = sub.add_parser("report", help="recompute metrics from records and render the table")
    p_report.add_argument("records_dir", help="directory of episode records from one trial")
    p_report.add_argument("--out", help="also write report files here")
    p_report.set_defaults(func=cmd_report)

    p_serve = sub.add_parser("serve", help="host the bridge for external controllers / teleop UI")
    _add_trial_flags(p_serve)
    p_serve.add_argument("--mode", choices=("lockstep", "realtime"), default="lockstep")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=DEFAULT_PORT)
    p_serve.add_argument("--out", help="output directory for records and report files")
    p_serve.add_argument("--ui-dir", default=os.environ.get("SOCNAV_UI_DIR"),
                         help="static teleop UI directory served under /ui")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
