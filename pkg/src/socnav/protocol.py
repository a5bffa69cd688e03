"""Wire protocol: newline-delimited JSON envelopes between the simulator and
external controllers, teleop clients, and spectators.

One envelope per line: {"type": ..., "seq": ..., "payload": {...}}. Sequence
numbers start at 0 and increase by 1 per sender; numbers carry full precision
(round-trip exact for all finite doubles).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

from .jsonio import NonFiniteNumberError, canonical_dumps

MESSAGE_TYPES = (
    "hello",
    "scene_info",
    "episode_start",
    "obs",
    "cmd",
    "episode_end",
    "trial_end",
    "error",
    "ping",
    "pong",
)

ROLES = ("controller", "teleop", "spectator")

DEFAULT_PORT = 7654


class ProtocolError(Exception):
    """Wire-level violation; `reason` feeds the error reply."""

    def __init__(self, reason: str, detail: str = "", offending_seq: int | None = None) -> None:
        self.reason = reason
        self.detail = detail
        self.offending_seq = offending_seq
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass(frozen=True)
class Envelope:
    type: str
    seq: int
    payload: dict[str, Any]


def encode(env: Envelope) -> bytes:
    """One UTF-8 JSON line, canonical field order (type, seq, payload)."""
    if env.type not in MESSAGE_TYPES:
        raise ProtocolError("schema", f"unknown message type {env.type!r}")
    try:
        line = canonical_dumps({"type": env.type, "seq": env.seq, "payload": env.payload})
    except NonFiniteNumberError as exc:
        raise ProtocolError("encode", str(exc)) from None
    return line.encode("utf-8") + b"\n"


def _require(payload: dict[str, Any], key: str, kinds, label: str) -> Any:
    if key not in payload:
        raise ProtocolError("schema", f"{label}: missing field {key!r}")
    value = payload[key]
    kind_tuple = kinds if isinstance(kinds, tuple) else (kinds,)
    bad = not isinstance(value, kind_tuple)
    if isinstance(value, bool) and bool not in kind_tuple:
        bad = True  # bool is an int subclass; keep them apart in the schema
    if bad:
        raise ProtocolError("schema", f"{label}: field {key!r} has the wrong type")
    return value


def _require_number(payload: dict[str, Any], key: str, label: str) -> float:
    value = _require(payload, key, (int, float), label)
    if isinstance(value, bool) or not math.isfinite(float(value)):
        raise ProtocolError("schema", f"{label}: field {key!r} must be a finite number")
    return float(value)


def _check_vec(payload: dict[str, Any], key: str, length: int, label: str) -> None:
    value = _require(payload, key, list, label)
    if len(value) != length or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(float(v)) for v in value
    ):
        raise ProtocolError("schema", f"{label}: field {key!r} must be {length} finite numbers")


def _validate_hello(p: dict[str, Any]) -> None:
    role = _require(p, "role", str, "hello")
    if role not in ROLES:
        raise ProtocolError("schema", f"hello: unknown role {role!r}")


def _validate_scene_info(p: dict[str, Any]) -> None:
    _require(p, "name", str, "scene_info")
    _check_vec(p, "bounds", 4, "scene_info")
    _require_number(p, "grid_resolution", "scene_info")
    for key in ("obstacles", "ped_anchors", "robot_anchors"):
        _require(p, key, list, "scene_info")


def _validate_episode_start(p: dict[str, Any]) -> None:
    _require(p, "episode_id", int, "episode_start")
    _check_vec(p, "goal", 3, "episode_start")
    spec = _require(p, "robot_spec", dict, "episode_start")
    _require(spec, "name", str, "episode_start.robot_spec")
    for key in ("footprint_radius", "v_max", "w_max", "a_max", "alpha_max"):
        _require_number(spec, key, "episode_start.robot_spec")
    _require(p, "config_hash", str, "episode_start")


def _validate_obs(p: dict[str, Any]) -> None:
    _require(p, "tick", int, "obs")
    _require_number(p, "sim_time", "obs")
    _check_vec(p, "pose", 3, "obs")
    _check_vec(p, "twist", 2, "obs")
    _check_vec(p, "goal", 3, "obs")
    scan = _require(p, "scan", list, "obs")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in scan):
        raise ProtocolError("schema", "obs: scan must be a list of numbers")
    if "nearest_ped_distance" in p:
        _require_number(p, "nearest_ped_distance", "obs")
    if "pedestrians" in p:
        peds = _require(p, "pedestrians", list, "obs")
        for item in peds:
            if not (isinstance(item, list) and len(item) == 4):
                raise ProtocolError("schema", "obs: pedestrians entries must be [id, x, y, theta]")


def _validate_cmd(p: dict[str, Any]) -> None:
    _require_number(p, "v", "cmd")
    _require_number(p, "w", "cmd")


def _validate_episode_end(p: dict[str, Any]) -> None:
    _require(p, "episode_id", int, "episode_end")
    metrics = _require(p, "metrics", dict, "episode_end")
    _require(metrics, "completed", bool, "episode_end.metrics")
    _require_number(metrics, "elapsed", "episode_end.metrics")
    _require_number(metrics, "final_distance", "episode_end.metrics")
    _require(metrics, "ped_collisions", int, "episode_end.metrics")
    _require(metrics, "static_collisions", int, "episode_end.metrics")


def _validate_trial_end(p: dict[str, Any]) -> None:
    report = _require(p, "report", dict, "trial_end")
    _require(report, "episodes", list, "trial_end.report")
    _require(report, "aggregates", dict, "trial_end.report")


def _validate_error(p: dict[str, Any]) -> None:
    _require(p, "reason", str, "error")


_VALIDATORS = {
    "hello": _validate_hello,
    "scene_info": _validate_scene_info,
    "episode_start": _validate_episode_start,
    "obs": _validate_obs,
    "cmd": _validate_cmd,
    "episode_end": _validate_episode_end,
    "trial_end": _validate_trial_end,
    "error": _validate_error,
    "ping": lambda p: None,
    "pong": lambda p: None,
}


def decode(line: bytes | str) -> Envelope:
    """Parse and validate one envelope line. Unknown payload fields are
    ignored (forward compatibility); unknown types are rejected."""
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError("parse", f"invalid utf-8: {exc}") from None
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError("parse", exc.msg) from None
    if not isinstance(raw, dict):
        raise ProtocolError("schema", "envelope must be an object")
    msg_type = raw.get("type")
    if not isinstance(msg_type, str) or msg_type not in MESSAGE_TYPES:
        raise ProtocolError("schema", f"unknown message type {msg_type!r}")
    seq = raw.get("seq")
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
        raise ProtocolError("schema", "seq must be a non-negative integer")
    payload = raw.get("payload")
    if not isinstance(payload, dict):
        raise ProtocolError("schema", "payload must be an object")
    _VALIDATORS[msg_type](payload)
    return Envelope(type=msg_type, seq=seq, payload=payload)


class SeqTracker:
    """Per-direction sequence bookkeeping; a gap is a protocol error."""

    def __init__(self) -> None:
        self._next = 0

    def check(self, env: Envelope) -> None:
        if env.seq != self._next:
            raise ProtocolError(
                "seq", f"expected seq {self._next}, got {env.seq}", offending_seq=env.seq
            )
        self._next += 1

    def resync(self, seq: int) -> None:
        """Continue the session after a reported gap."""
        self._next = seq + 1

    def next_seq(self) -> int:
        seq = self._next
        self._next += 1
        return seq


class Sender:
    """Assigns outgoing sequence numbers and encodes envelopes."""

    def __init__(self) -> None:
        self._tracker = SeqTracker()

    def make(self, msg_type: str, payload: dict[str, Any]) -> bytes:
        return encode(Envelope(msg_type, self._tracker.next_seq(), payload))
