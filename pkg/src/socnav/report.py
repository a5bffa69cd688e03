"""Trial report rendering: an aligned text table plus machine-readable JSON
and CSV files. All outputs are deterministic (no timestamps)."""

from __future__ import annotations

import json
import os

from .jsonio import canonical_dumps
from .trial import EpisodeMetrics, TrialConfig, TrialReport
from .world import ENGINE_VERSION

TABLE_HEADER = "Elapsed (sec.) | Complete | Final Dist (m) | Ped. Dist (m) | Collisions"
_WIDTHS = [len(c) for c in TABLE_HEADER.split(" | ")]

CSV_HEADER = (
    "episode,completed,elapsed,final_distance,min_ped_distance,"
    "ped_collisions,static_collisions,collisions,aborted,abort_reason"
)


def _row(cells: list[str]) -> str:
    return " | ".join(cell.ljust(width) for cell, width in zip(cells, _WIDTHS)).rstrip()


def _fmt_pair(pair: tuple[float, float] | None) -> str:
    if pair is None:
        return "n/a"
    return f"{pair[0]:.2f} ± {pair[1]:.2f}"


def render_table(report: TrialReport, trial: TrialConfig | None = None) -> str:
    """Aligned summary table; the rendered Collisions column is the sum of
    pedestrian and static counts (both are kept separately in the data files)."""
    lines = []
    if trial is not None:
        lines.append(
            f"scene={trial.scene} robot={trial.robot} controller={trial.controller} "
            f"seed={trial.master_seed} episodes={trial.episodes} peds={trial.crowd.count}"
        )
    lines.append(TABLE_HEADER)
    for m in report.episodes:
        if m.aborted:
            lines.append(_row(["aborted", "-", "-", "-", "-"]) + f"  ({m.abort_reason})")
            continue
        lines.append(
            _row(
                [
                    f"{m.elapsed:.2f}",
                    "yes" if m.completed else "no",
                    f"{m.final_distance:.2f}",
                    "n/a" if m.min_ped_distance is None else f"{m.min_ped_distance:.2f}",
                    str(m.ped_collisions + m.static_collisions),
                ]
            )
        )
    n = len(report.episodes) - report.aborted
    lines.append(f"μ ± σ over {n} episodes")
    agg = report.aggregates
    lines.append(
        _row(
            [
                _fmt_pair(agg.get("elapsed")),
                f"{report.completion_rate}%",
                _fmt_pair(agg.get("final_distance")),
                _fmt_pair(agg.get("min_ped_distance")),
                _fmt_pair(agg.get("collisions")),
            ]
        )
    )
    if report.aborted:
        lines.append(f"aborted episodes: {report.aborted} (excluded from aggregates)")
    return "\n".join(lines) + "\n"


def _csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def render_csv(report: TrialReport) -> str:
    rows = [CSV_HEADER]
    for i, m in enumerate(report.episodes):
        rows.append(
            ",".join(
                [
                    str(i),
                    _csv_value(m.completed),
                    _csv_value(m.elapsed),
                    _csv_value(m.final_distance),
                    _csv_value(m.min_ped_distance),
                    str(m.ped_collisions),
                    str(m.static_collisions),
                    str(m.ped_collisions + m.static_collisions),
                    _csv_value(m.aborted),
                    m.abort_reason or "",
                ]
            )
        )
    return "\n".join(rows) + "\n"


def report_dict(report: TrialReport, trial: TrialConfig | None = None) -> dict:
    out = {"engine_version": ENGINE_VERSION}
    if trial is not None:
        out["trial"] = trial.to_dict()
    out.update(report.to_dict())
    return out


def parse_report_json(text: str) -> list[EpisodeMetrics]:
    """Episode rows from a persisted report (for re-aggregation checks)."""
    raw = json.loads(text)
    return [EpisodeMetrics.from_dict(row) for row in raw["episodes"]]


def write_report_files(out_dir: str, report: TrialReport, trial: TrialConfig | None = None) -> dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "json": os.path.join(out_dir, "report.json"),
        "csv": os.path.join(out_dir, "report.csv"),
        "txt": os.path.join(out_dir, "report.txt"),
    }
    with open(paths["json"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(canonical_dumps(report_dict(report, trial)) + "\n")
    with open(paths["csv"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_csv(report))
    with open(paths["txt"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_table(report, trial))
    return paths
