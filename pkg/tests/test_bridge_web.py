"""Browser-facing bridge surfaces: the WebSocket framing of the protocol and
static UI serving, exercised with a hand-rolled RFC 6455 client."""

import asyncio
import base64
import hashlib
import os
import struct

import pytest

from test_bridge import run, start_server, tiny_trial

from socnav.crowd import CrowdConfig
from socnav.protocol import Sender, decode

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class WsClient:
    """Minimal client-side WebSocket (masked text frames only)."""

    def __init__(self, reader, writer):
        self.reader = reader
        self.writer = writer
        self.tx = Sender()

    @classmethod
    async def connect(cls, port, path="/ws"):
        reader, writer = await asyncio.open_connection("127.0.0.1", port)
        key = base64.b64encode(os.urandom(16)).decode()
        writer.write(
            f"GET {path} HTTP/1.1\r\nHost: 127.0.0.1:{port}\r\n"
            f"Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n".encode()
        )
        await writer.drain()
        status = await reader.readline()
        assert b"101" in status, status
        accept = None
        while True:
            line = await reader.readline()
            if line in (b"\r\n", b"\n"):
                break
            if line.lower().startswith(b"sec-websocket-accept:"):
                accept = line.split(b":", 1)[1].strip().decode()
        expected = base64.b64encode(hashlib.sha1((key + _WS_GUID).encode()).digest()).decode()
        assert accept == expected
        return cls(reader, writer)

    async def send_text(self, text: str):
        payload = text.encode()
        mask = os.urandom(4)
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        n = len(payload)
        if n < 126:
            head = bytes([0x81, 0x80 | n])
        else:
            head = bytes([0x81, 0x80 | 126]) + struct.pack(">H", n)
        self.writer.write(head + mask + masked)
        await self.writer.drain()

    async def send_envelope(self, msg_type, payload):
        await self.send_text(self.tx.make(msg_type, payload).decode().rstrip("\n"))

    async def recv_text(self) -> str:
        head = await self.reader.readexactly(2)
        opcode = head[0] & 0x0F
        length = head[1] & 0x7F
        if length == 126:
            length = struct.unpack(">H", await self.reader.readexactly(2))[0]
        elif length == 127:
            length = struct.unpack(">Q", await self.reader.readexactly(8))[0]
        data = await self.reader.readexactly(length)
        if opcode == 0x8:
            raise ConnectionError("closed")
        return data.decode()

    async def recv_type(self, msg_type):
        while True:
            env = decode(await self.recv_text())
            if env.type == msg_type:
                return env

    def close(self):
        self.writer.close()


def test_websocket_carries_the_full_session():
    async def main():
        server, task = await start_server(tiny_trial(crowd=CrowdConfig(count=2)), mode="realtime")
        client = await WsClient.connect(server.bound_port)
        await client.send_envelope("hello", {"role": "teleop"})
        env = await client.recv_type("scene_info")
        assert env.payload["name"] == "lab"
        assert env.payload["mode"] == "realtime"
        await client.recv_type("episode_start")
        obs = await client.recv_type("obs")
        assert "pedestrians" in obs.payload and len(obs.payload["pedestrians"]) == 2
        assert "metrics" in obs.payload
        await client.send_envelope("cmd", {"v": 1.0, "w": 0.0})
        await client.recv_type("episode_end")
        await client.recv_type("trial_end")
        await task
        client.close()

    run(main())


def test_websocket_ping_frame_answered():
    async def main():
        server, task = await start_server(tiny_trial(episodes=0), mode="lockstep")
        client = await WsClient.connect(server.bound_port)
        # ws-level ping (opcode 0x9) must come back as pong (0xA)
        mask = os.urandom(4)
        body = b"hi"
        client.writer.write(bytes([0x89, 0x80 | len(body)]) + mask + bytes(b ^ mask[i % 4] for i, b in enumerate(body)))
        await client.writer.drain()
        head = await client.reader.readexactly(2)
        assert head[0] & 0x0F == 0xA
        data = await client.reader.readexactly(head[1] & 0x7F)
        assert data == b"hi"
        # now complete a proper session so the server exits
        await client.send_envelope("hello", {"role": "controller"})
        await client.recv_type("trial_end")
        await task
        client.close()

    run(main())


def test_static_ui_serving(tmp_path):
    (tmp_path / "index.html").write_text("<html><body>teleop</body></html>")
    (tmp_path / "js").mkdir()
    (tmp_path / "js" / "main.js").write_text("export {};")

    async def fetch(port, path):
        reader, writer = await asyncio.open_connection("127.0.0.1", port)
        writer.write(f"GET {path} HTTP/1.1\r\nHost: x\r\n\r\n".encode())
        await writer.drain()
        status = (await reader.readline()).decode()
        headers = {}
        while True:
            line = await reader.readline()
            if line in (b"\r\n", b"\n", b""):
                break
            key, _, value = line.decode().partition(":")
            headers[key.strip().lower()] = value.strip()
        body = await reader.read(int(headers.get("content-length", 0)))
        writer.close()
        return status, headers, body

    async def main():
        server, task = await start_server(tiny_trial(episodes=0), ui_dir=str(tmp_path))
        status, _, body = await fetch(server.bound_port, "/ui/")
        assert "200" in status and b"teleop" in body
        status, headers, _ = await fetch(server.bound_port, "/ui/js/main.js")
        assert "200" in status
        assert "javascript" in headers["content-type"]
        status, _, _ = await fetch(server.bound_port, "/ui/../secret")
        assert "404" in status
        status, headers, _ = await fetch(server.bound_port, "/")
        assert "302" in status
        status, _, _ = await fetch(server.bound_port, "/ui/missing.js")
        assert "404" in status
        # let the pending session requirement resolve so the server exits
        from test_bridge import WireClient

        client = await WireClient.connect(server.bound_port)
        await client.recv_type("trial_end")
        await task
        client.close()

    run(main())
