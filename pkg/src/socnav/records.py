"""Episode record files: a JSONL header line, one tick object per line, and a
closing metrics line. Numbers keep full precision so files hash and replay
bit-exactly."""

from __future__ import annotations

import json
import os
from typing import Iterator

from .jsonio import canonical_dumps
from .trial import EpisodeConfig, EpisodeMetrics, EpisodeRecord, TickLog


class RecordFormatError(ValueError):
    pass


def record_lines(record: EpisodeRecord) -> Iterator[str]:
    header = {
        "kind": "header",
        "engine_version": record.engine_version,
        "config_hash": record.config.config_hash,
        "config": record.config.to_dict(),
    }
    yield canonical_dumps(header)
    for tick in record.ticks:
        yield canonical_dumps(tick.to_dict())
    yield canonical_dumps({"kind": "metrics", "metrics": record.metrics.to_dict()})


def write_record(path: str, record: EpisodeRecord) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in record_lines(record):
            fh.write(line + "\n")


def read_record(path: str) -> EpisodeRecord:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if len(lines) < 3:
        raise RecordFormatError(f"{path}: expected header, ticks, and metrics lines")
    try:
        header = json.loads(lines[0])
        tick_rows = [json.loads(line) for line in lines[1:-1]]
        metrics_row = json.loads(lines[-1])
    except json.JSONDecodeError as exc:
        raise RecordFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if header.get("kind") != "header":
        raise RecordFormatError(f"{path}: first line is not a record header")
    if metrics_row.get("kind") != "metrics":
        raise RecordFormatError(f"{path}: last line is not a metrics line")
    try:
        config = EpisodeConfig.from_dict(header["config"])
        ticks = [TickLog.from_dict(row) for row in tick_rows]
        metrics = EpisodeMetrics.from_dict(metrics_row["metrics"])
    except (KeyError, TypeError, ValueError) as exc:
        raise RecordFormatError(f"{path}: malformed record: {exc}") from None
    return EpisodeRecord(
        config=config,
        ticks=ticks,
        metrics=metrics,
        engine_version=str(header.get("engine_version", "")),
    )


def record_filename(episode_id: int) -> str:
    return f"episode_{episode_id:04d}.jsonl"


def list_record_files(directory: str) -> list[str]:
    names = sorted(n for n in os.listdir(directory) if n.endswith(".jsonl"))
    return [os.path.join(directory, n) for n in names]
