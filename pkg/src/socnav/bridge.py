"""Wire-protocol server connecting the simulator to external controllers and
the teleop UI.

One listening port speaks three dialects, sniffed from the first bytes of a
connection: newline-delimited JSON for controllers and scripted clients,
HTTP GET for the static UI assets under /ui, and a WebSocket upgrade at /ws
carrying one JSON envelope per text frame (the browser-side framing of the
same protocol).

Clocking: lockstep sessions advance the sim exactly one tick per received
cmd; realtime sessions tick at 20 Hz wall clock and pass the latest teleop
command through the dead-man rule.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import mimetypes
import os
import struct
from dataclasses import dataclass, field
from typing import Any

from .control import teleop_decide
from .protocol import DEFAULT_PORT, Envelope, ProtocolError, Sender, SeqTracker, decode
from .records import record_filename, write_record
from .report import report_dict, write_report_files
from .robot import Twist, get_spec
from .scene import Scene, load_scene
from .sensing import DEFAULT_SCAN, ScanSpec
from .trial import (
    EpisodeRecord,
    EpisodeRun,
    TrialConfig,
    TrialReport,
    aggregate,
    generate_episode,
)

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class _Disconnect(Exception):
    pass


class _LineFraming:
    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        self.reader = reader
        self.writer = writer

    async def recv(self) -> bytes:
        line = await self.reader.readline()
        if not line:
            raise _Disconnect()
        return line

    async def send(self, data: bytes) -> None:
        self.writer.write(data)
        await self.writer.drain()

    def close(self) -> None:
        try:
            self.writer.close()
        except Exception:
            pass


class _WsFraming:
    """Minimal RFC 6455 server-side framing: text frames carry envelopes."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        self.reader = reader
        self.writer = writer

    async def recv(self) -> bytes:
        message = b""
        while True:
            head = await self.reader.readexactly(2)
            fin = head[0] & 0x80
            opcode = head[0] & 0x0F
            masked = head[1] & 0x80
            length = head[1] & 0x7F
            if length == 126:
                length = struct.unpack(">H", await self.reader.readexactly(2))[0]
            elif length == 127:
                length = struct.unpack(">Q", await self.reader.readexactly(8))[0]
            mask = await self.reader.readexactly(4) if masked else b""
            payload = await self.reader.readexactly(length)
            if mask:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x8:  # close
                raise _Disconnect()
            if opcode == 0x9:  # ping -> pong
                await self._send_frame(0xA, payload)
                continue
            if opcode == 0xA:  # unsolicited pong
                continue
            message += payload
            if fin:
                return message

    async def _send_frame(self, opcode: int, payload: bytes) -> None:
        head = bytes([0x80 | opcode])
        n = len(payload)
        if n < 126:
            head += bytes([n])
        elif n < (1 << 16):
            head += bytes([126]) + struct.pack(">H", n)
        else:
            head += bytes([127]) + struct.pack(">Q", n)
        self.writer.write(head + payload)
        await self.writer.drain()

    async def send(self, data: bytes) -> None:
        await self._send_frame(0x1, data.rstrip(b"\n"))

    def close(self) -> None:
        try:
            self.writer.close()
        except Exception:
            pass


@dataclass
class _Client:
    framing: Any
    role: str
    sender: Sender = field(default_factory=Sender)
    rx: SeqTracker = field(default_factory=SeqTracker)
    alive: bool = True

    async def send(self, msg_type: str, payload: dict[str, Any]) -> None:
        if not self.alive:
            return
        try:
            await self.framing.send(self.sender.make(msg_type, payload))
        except (ConnectionError, _Disconnect, RuntimeError):
            self.alive = False


def scene_info_payload(scene: Scene, mode: str, dt: float) -> dict[str, Any]:
    return {
        "name": scene.name,
        "bounds": list(scene.bounds),
        "grid_resolution": scene.grid_resolution,
        "obstacles": [[list(v) for v in poly] for poly in scene.obstacles],
        "ped_anchors": [[a.x, a.y, a.theta] for a in scene.ped_anchors],
        "robot_anchors": [[a.x, a.y, a.theta] for a in scene.robot_anchors],
        "mode": mode,
        "dt": dt,
    }


def obs_payload(run: EpisodeRun, scan_spec: ScanSpec) -> dict[str, Any]:
    payload = run.observation().to_payload()
    payload["pedestrians"] = [
        [p.id, p.pose.x, p.pose.y, p.pose.theta] for p in run.world.pedestrians
    ]
    payload["metrics"] = run.live_metrics()
    return payload


def episode_start_payload(run: EpisodeRun) -> dict[str, Any]:
    cfg = run.config
    spec = run.spec
    return {
        "episode_id": cfg.episode_id,
        "goal": [cfg.robot_goal.x, cfg.robot_goal.y, cfg.robot_goal.theta],
        "robot_spec": {
            "name": spec.name,
            "footprint_radius": spec.footprint_radius,
            "v_max": spec.v_max,
            "w_max": spec.w_max,
            "a_max": spec.a_max,
            "alpha_max": spec.alpha_max,
        },
        "config_hash": cfg.config_hash,
    }


class BridgeServer:
    """Hosts one trial for one controlling client (plus spectators)."""

    def __init__(
        self,
        trial: TrialConfig,
        mode: str = "lockstep",
        host: str = "127.0.0.1",
        port: int = DEFAULT_PORT,
        out_dir: str | None = None,
        ui_dir: str | None = None,
        scan_spec: ScanSpec = DEFAULT_SCAN,
        realtime_rate: float | None = None,
    ) -> None:
        if mode not in ("lockstep", "realtime"):
            raise ValueError("mode must be lockstep or realtime")
        self.trial = trial
        self.mode = mode
        self.host = host
        self.port = port
        self.out_dir = out_dir
        self.ui_dir = ui_dir
        self.scan_spec = scan_spec
        # Wall-clock tick rate in realtime mode; defaults to 1/dt (20 Hz).
        self.realtime_rate = realtime_rate or (1.0 / trial.dt)

        self.scene = load_scene(trial.scene)
        get_spec(trial.robot)  # validate early
        self.bound_port: int | None = None
        self.ready = asyncio.Event()
        self.control_client: _Client | None = None
        self.spectators: list[_Client] = []
        self._control_connected = asyncio.Event()
        self._cmd_queue: asyncio.Queue = asyncio.Queue()
        self._cmd_expected = False
        self._latest_cmd: tuple[Twist, int] | None = None  # (twist, tick received)
        self._current_run: EpisodeRun | None = None
        self.records: list[EpisodeRecord] = []
        self.report: TrialReport | None = None

    # -- connection plumbing ------------------------------------------------

    async def _on_connect(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        try:
            first = await reader.readline()
        except ConnectionError:
            writer.close()
            return
        if not first:
            writer.close()
            return
        if first.startswith(b"GET ") or first.startswith(b"HEAD "):
            await self._handle_http(first, reader, writer)
            return
        await self._handle_protocol_client(_LineFraming(reader, writer), first)

    async def _handle_http(self, request_line: bytes, reader, writer) -> None:
        headers: dict[str, str] = {}
        while True:
            line = await reader.readline()
            if line in (b"\r\n", b"\n", b""):
                break
            if b":" in line:
                key, _, value = line.partition(b":")
                headers[key.decode("latin-1").strip().lower()] = value.decode("latin-1").strip()
        try:
            path = request_line.split()[1].decode("latin-1")
        except (IndexError, UnicodeDecodeError):
            writer.close()
            return
        if path == "/ws" and headers.get("upgrade", "").lower() == "websocket":
            key = headers.get("sec-websocket-key", "")
            accept = base64.b64encode(
                hashlib.sha1((key + _WS_GUID).encode("latin-1")).digest()
            ).decode("latin-1")
            writer.write(
                b"HTTP/1.1 101 Switching Protocols\r\n"
                b"Upgrade: websocket\r\nConnection: Upgrade\r\n"
                b"Sec-WebSocket-Accept: " + accept.encode("latin-1") + b"\r\n\r\n"
            )
            await writer.drain()
            await self._handle_protocol_client(_WsFraming(reader, writer), None)
            return
        await self._serve_static(path, writer)

    async def _serve_static(self, path: str, writer) -> None:
        body = b"not found"
        status = b"404 Not Found"
        ctype = "text/plain"
        if path in ("/", "/ui"):
            writer.write(b"HTTP/1.1 302 Found\r\nLocation: /ui/\r\nContent-Length: 0\r\n\r\n")
            await writer.drain()
            writer.close()
            return
        if path.startswith("/ui/") and self.ui_dir:
            rel = path[len("/ui/"):] or "index.html"
            rel = rel.split("?", 1)[0]
            full = os.path.realpath(os.path.join(self.ui_dir, rel))
            root = os.path.realpath(self.ui_dir)
            if full.startswith(root + os.sep) or full == root:
                if os.path.isdir(full):
                    full = os.path.join(full, "index.html")
                if os.path.isfile(full):
                    with open(full, "rb") as fh:
                        body = fh.read()
                    status = b"200 OK"
                    ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        writer.write(
            b"HTTP/1.1 " + status + b"\r\n"
            b"Content-Type: " + ctype.encode("latin-1") + b"\r\n"
            b"Content-Length: " + str(len(body)).encode("latin-1") + b"\r\n"
            b"Cache-Control: no-store\r\n\r\n" + body
        )
        await writer.drain()
        writer.close()

    async def _handle_protocol_client(self, framing, first_line: bytes | None) -> None:
        client = _Client(framing=framing, role="")
        try:
            raw = first_line if first_line is not None else await framing.recv()
            env = decode(raw)
            client.rx.check(env)
            if env.type != "hello":
                await client.send("error", {"reason": "protocol", "detail": "expected hello", "offending_seq": env.seq})
                framing.close()
                return
            role = env.payload["role"]
            expected_role = "controller" if self.mode == "lockstep" else "teleop"
            if role in ("controller", "teleop"):
                if role != expected_role:
                    await client.send(
                        "error",
                        {"reason": "role", "detail": f"{self.mode} mode expects role {expected_role}", "offending_seq": env.seq},
                    )
                    framing.close()
                    return
                if self.control_client is not None and self.control_client.alive:
                    await client.send(
                        "error", {"reason": "role", "detail": "control role already taken", "offending_seq": env.seq}
                    )
                    framing.close()
                    return
                client.role = role
                self.control_client = client
            else:
                client.role = "spectator"
                self.spectators.append(client)
        except (ProtocolError, _Disconnect, asyncio.IncompleteReadError, ConnectionError, KeyError) as exc:
            if isinstance(exc, ProtocolError):
                await client.send("error", {"reason": exc.reason, "detail": exc.detail, "offending_seq": exc.offending_seq or 0})
            framing.close()
            return

        await client.send("scene_info", scene_info_payload(self.scene, self.mode, self.trial.dt))
        if client.role in ("controller", "teleop"):
            self._control_connected.set()
        await self._reader_loop(client)

    async def _reader_loop(self, client: _Client) -> None:
        while client.alive:
            try:
                raw = await client.framing.recv()
            except (_Disconnect, asyncio.IncompleteReadError, ConnectionError):
                break
            try:
                env = decode(raw)
            except ProtocolError as exc:
                await client.send("error", {"reason": exc.reason, "detail": exc.detail, "offending_seq": -1})
                continue
            try:
                client.rx.check(env)
            except ProtocolError as exc:
                await client.send("error", {"reason": "seq", "detail": exc.detail, "offending_seq": env.seq})
                client.rx.resync(env.seq)  # keep the session alive
                continue
            await self._dispatch(client, env)
        client.alive = False
        if client is self.control_client:
            self._cmd_queue.put_nowait(None)  # wake the trial driver

    async def _dispatch(self, client: _Client, env: Envelope) -> None:
        if env.type == "ping":
            await client.send("pong", env.payload)
            return
        if env.type == "pong":
            return
        if env.type == "cmd":
            if client.role == "spectator":
                await client.send("error", {"reason": "role", "detail": "spectators may not send cmd", "offending_seq": env.seq})
                return
            twist = Twist(float(env.payload["v"]), float(env.payload["w"]))
            if self.mode == "lockstep":
                if not self._cmd_expected:
                    await client.send(
                        "error",
                        {"reason": "lockstep", "detail": "one cmd per obs", "offending_seq": env.seq},
                    )
                    return
                self._cmd_expected = False
                self._cmd_queue.put_nowait(twist)
            else:
                run = self._current_run
                tick = run.world.tick if run is not None else 0
                self._latest_cmd = (twist, tick)
            return
        await client.send(
            "error", {"reason": "protocol", "detail": f"unexpected {env.type}", "offending_seq": env.seq}
        )

    # -- broadcasting --------------------------------------------------------

    async def _broadcast(self, msg_type: str, payload: dict[str, Any]) -> None:
        if self.control_client is not None:
            await self.control_client.send(msg_type, payload)
        for spectator in self.spectators:
            await spectator.send(msg_type, payload)

    # -- trial driving -------------------------------------------------------

    async def _run_lockstep_episode(self, run: EpisodeRun) -> None:
        while not run.done:
            # Arm the cmd gate before the obs goes out so an instant reply
            # cannot race the gate; exactly one cmd is accepted per obs.
            self._cmd_expected = True
            await self._broadcast("obs", obs_payload(run, self.scan_spec))
            cmd = await self._cmd_queue.get()
            if cmd is None:
                run.abort("disconnect")
                return
            run.apply_cmd(cmd)

    async def _run_realtime_episode(self, run: EpisodeRun) -> None:
        loop = asyncio.get_running_loop()
        period = 1.0 / self.realtime_rate
        next_at = loop.time()
        while not run.done:
            await self._broadcast("obs", obs_payload(run, self.scan_spec))
            next_at += period
            delay = next_at - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            control = self.control_client
            if control is None or not control.alive:
                run.abort("disconnect")
                return
            if self._latest_cmd is None:
                decision = teleop_decide(None, 0)
            else:
                twist, tick = self._latest_cmd
                decision = teleop_decide(twist, run.world.tick - tick)
            run.apply_cmd(decision.twist)

    async def _run_trial(self) -> None:
        records_dir = None
        if self.out_dir is not None:
            records_dir = os.path.join(self.out_dir, "records")
            os.makedirs(records_dir, exist_ok=True)

        # A session exists even with zero episodes configured: the client still
        # gets its hello/scene_info/trial_end exchange.
        await self._control_connected.wait()

        aborted_trial = False
        try:
            for index in range(self.trial.episodes):
                config = generate_episode(self.trial, index, self.trial.master_seed)
                run = EpisodeRun(config, self.scan_spec)
                self._current_run = run
                self._latest_cmd = None
                await self._broadcast("episode_start", episode_start_payload(run))
                if self.mode == "lockstep":
                    await self._run_lockstep_episode(run)
                else:
                    await self._run_realtime_episode(run)
                record = run.record()
                self.records.append(record)
                if records_dir is not None:
                    write_record(os.path.join(records_dir, record_filename(index)), record)
                await self._broadcast(
                    "episode_end",
                    {"episode_id": config.episode_id, "metrics": record.metrics.to_dict()},
                )
                if record.metrics.aborted and record.metrics.abort_reason == "disconnect":
                    aborted_trial = True
                    break
        except asyncio.CancelledError:
            run = self._current_run
            if run is not None and not run.done:
                run.abort("interrupt")
                record = run.record()
                self.records.append(record)
                if records_dir is not None:
                    write_record(os.path.join(records_dir, record_filename(record.config.episode_id)), record)
            aborted_trial = True

        if self.records:
            self.report = aggregate([r.metrics for r in self.records])
            report_payload = report_dict(self.report, self.trial)
            if self.out_dir is not None:
                write_report_files(self.out_dir, self.report, self.trial)
        else:
            report_payload = {"episodes": [], "aggregates": {}, "completion_rate": 0, "aborted": 0}
        if not aborted_trial or self.records:
            await self._broadcast("trial_end", {"report": report_payload})

    async def serve(self) -> TrialReport | None:
        """Run the trial to completion (or interrupt) and return the report."""
        server = await asyncio.start_server(self._on_connect, self.host, self.port)
        self.bound_port = server.sockets[0].getsockname()[1]
        self.ready.set()
        trial_task = asyncio.create_task(self._run_trial())
        try:
            await trial_task
        finally:
            for client in [self.control_client, *self.spectators]:
                if client is not None:
                    client.framing.close()
            server.close()
            await server.wait_closed()
        return self.report
