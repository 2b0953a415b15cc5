import base64
import json
import os
import socket
import struct
import time

import numpy as np
import pytest

from scenecast.bmp import decode_bmp24
from scenecast.engine import Engine
from scenecast.model import OutputConfig
from scenecast.server import ControlServer


@pytest.fixture
def server():
    engine = Engine(OutputConfig(width=64, height=48, fps=60, keyframe_interval=30),
                    keep_log=False)
    srv = ControlServer(engine, "127.0.0.1", 0)
    srv.start()
    yield srv
    srv.stop()


class TcpClient:
    """Length-delimited JSON over plain TCP."""

    def __init__(self, address):
        self.sock = socket.create_connection(address, timeout=5)
        self.sock.settimeout(5)

    def send(self, obj):
        data = json.dumps(obj).encode()
        self.sock.sendall(struct.pack(">I", len(data)) + data)

    def recv(self):
        header = self._exact(4)
        (n,) = struct.unpack(">I", header)
        return json.loads(self._exact(n))

    def recv_until(self, predicate, limit=50):
        for _ in range(limit):
            msg = self.recv()
            if predicate(msg):
                return msg
        raise AssertionError("expected message never arrived")

    def command(self, op, args=None, seq=1):
        self.send({"op": op, "args": args or {}, "seq": seq})
        return self.recv_until(lambda m: m.get("seq") == seq)

    def _exact(self, n):
        buf = b""
        while len(buf) < n:
            piece = self.sock.recv(n - len(buf))
            if not piece:
                raise AssertionError("connection closed")
            buf += piece
        return buf

    def close(self):
        self.sock.close()


class WsClient:
    """Just enough RFC 6455 to drive the server in tests."""

    def __init__(self, address):
        self.sock = socket.create_connection(address, timeout=5)
        self.sock.settimeout(5)
        key = base64.b64encode(os.urandom(16)).decode()
        self.sock.sendall(
            (
                f"GET / HTTP/1.1\r\nHost: {address[0]}:{address[1]}\r\n"
                "Upgrade: websocket\r\nConnection: Upgrade\r\n"
                f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
            ).encode()
        )
        response = b""
        while b"\r\n\r\n" not in response:
            response += self.sock.recv(4096)
        assert b"101" in response.split(b"\r\n", 1)[0]

    def send_text(self, obj):
        payload = json.dumps(obj).encode()
        mask = os.urandom(4)
        head = bytearray([0x81])
        n = len(payload)
        if n < 126:
            head.append(0x80 | n)
        elif n < 65536:
            head.append(0x80 | 126)
            head += struct.pack(">H", n)
        else:
            head.append(0x80 | 127)
            head += struct.pack(">Q", n)
        head += mask
        body = bytes(b ^ mask[i & 3] for i, b in enumerate(payload))
        self.sock.sendall(bytes(head) + body)

    def recv_frame(self):
        head = self._exact(2)
        opcode = head[0] & 0x0F
        n = head[1] & 0x7F
        if n == 126:
            (n,) = struct.unpack(">H", self._exact(2))
        elif n == 127:
            (n,) = struct.unpack(">Q", self._exact(8))
        payload = self._exact(n) if n else b""
        return opcode, payload

    def recv_until(self, predicate, limit=200):
        for _ in range(limit):
            opcode, payload = self.recv_frame()
            result = predicate(opcode, payload)
            if result is not None:
                return result
        raise AssertionError("expected frame never arrived")

    def command(self, op, args=None, seq=1):
        self.send_text({"op": op, "args": args or {}, "seq": seq})

        def match(opcode, payload):
            if opcode != 1:
                return None
            msg = json.loads(payload)
            return msg if msg.get("seq") == seq else None

        return self.recv_until(match)

    def _exact(self, n):
        buf = b""
        while len(buf) < n:
            piece = self.sock.recv(n - len(buf))
            if not piece:
                raise AssertionError("connection closed")
            buf += piece
        return buf

    def close(self):
        self.sock.close()


class TestTcpProtocol:
    def test_command_reply_carries_seq(self, server):
        client = TcpClient(server.address)
        reply = client.command("create_scene", {"name": "intro", "id": "intro"}, seq=7)
        assert reply["seq"] == 7 and reply["ok"]
        assert "applied_at_frame" in reply
        client.close()

    def test_unknown_op_error(self, server):
        client = TcpClient(server.address)
        reply = client.command("frobnicate", seq=2)
        assert reply == {"seq": 2, "ok": False, "error": "unknown op 'frobnicate'"}
        client.close()

    def test_malformed_frame_keeps_connection(self, server):
        client = TcpClient(server.address)
        bad = b"{not json"
        client.sock.sendall(struct.pack(">I", len(bad)) + bad)
        msg = client.recv_until(lambda m: m.get("ok") is False)
        assert "malformed" in msg["error"]
        # still serviceable afterwards
        assert client.command("get_state", seq=3)["ok"]
        client.close()

    def test_initial_state_snapshot_event(self, server):
        client = TcpClient(server.address)
        # the first frame identifies the transport; the snapshot follows
        client.send({"op": "get_state", "args": {}, "seq": 1})
        snap = client.recv_until(lambda m: m.get("kind") == "state-changed")
        assert snap["body"]["op"] == "hello"
        assert snap["body"]["state"]["mode"] == "offline"
        client.close()

    def test_two_clients_last_writer_wins(self, server):
        a = TcpClient(server.address)
        b = TcpClient(server.address)
        assert a.command("create_scene", {"name": "x", "id": "x"}, seq=10)["ok"]
        assert b.command("create_scene", {"name": "y", "id": "y"}, seq=20)["ok"]
        ra = a.command("set_active_scene", {"scene": "x"}, seq=11)
        rb = b.command("set_active_scene", {"scene": "y"}, seq=21)
        assert ra["ok"] and rb["ok"]
        state = a.command("get_state", seq=12)["result"]
        assert state["active_scene"] in ("x", "y")
        a.close()
        b.close()

    def test_events_broadcast_to_other_clients(self, server):
        a = TcpClient(server.address)
        b = TcpClient(server.address)
        assert b.command("get_state", seq=99)["ok"]  # identify b's transport
        a.command("create_scene", {"name": "z", "id": "z"}, seq=1)
        event = b.recv_until(
            lambda m: m.get("kind") == "state-changed"
            and m["body"].get("op") == "create_scene"
        )
        assert any(s["id"] == "z" for s in event["body"]["state"]["scenes"])
        a.close()
        b.close()


class TestWebSocket:
    def test_command_over_ws(self, server):
        ws = WsClient(server.address)
        reply = ws.command("get_state", seq=5)
        assert reply["ok"] and reply["result"]["mode"] == "offline"
        ws.close()

    def test_preview_subscription_delivers_bmp(self, server):
        ws = WsClient(server.address)
        reply = ws.command("preview_subscribe", {"every_n_frames": 1}, seq=1)
        assert reply["ok"]

        def binary(opcode, payload):
            return payload if opcode == 2 else None

        payload = ws.recv_until(binary)
        (frame_index,) = struct.unpack(">Q", payload[:8])
        assert payload[8:10] == b"BM"
        pixels = decode_bmp24(payload[8:])
        assert pixels.shape == (48, 64, 3)
        assert (pixels == 0).all()  # empty default scene renders black
        ws.close()

    def test_preview_requires_ws_transport(self, server):
        client = TcpClient(server.address)
        reply = client.command("preview_subscribe", {"every_n_frames": 1}, seq=9)
        assert not reply["ok"]
        client.close()

    def test_preview_reflects_scene_content(self, server):
        ws = WsClient(server.address)
        ws.command(
            "create_source",
            {
                "id": "red",
                "kind": "pattern",
                "params": {"variant": "solid", "width": 64, "height": 48,
                           "colors": [[255, 0, 0, 255]]},
            },
            seq=1,
        )
        ws.command("add_to_scene", {"scene": "default", "source": "red"}, seq=2)
        ws.command("preview_subscribe", {"every_n_frames": 1}, seq=3)

        def red_frame(opcode, payload):
            if opcode != 2:
                return None
            pixels = decode_bmp24(payload[8:])
            return pixels if (pixels[:, :, 0] == 255).all() else None

        pixels = ws.recv_until(red_frame)
        assert (pixels[:, :, 2] == 0).all()
        ws.close()


class TestStaticFiles:
    def test_serves_ui_directory(self, tmp_path):
        (tmp_path / "index.html").write_text("<html>panel</html>")
        engine = Engine(OutputConfig(width=16, height=16, fps=30), keep_log=False)
        srv = ControlServer(engine, "127.0.0.1", 0, ui_dir=str(tmp_path))
        srv.start()
        try:
            sock = socket.create_connection(srv.address, timeout=5)
            sock.sendall(b"GET / HTTP/1.1\r\nHost: x\r\n\r\n")
            data = b""
            while True:
                piece = sock.recv(4096)
                if not piece:
                    break
                data += piece
            assert b"200 OK" in data and b"panel" in data
            sock.close()
        finally:
            srv.stop()

    def test_path_traversal_blocked(self, tmp_path):
        (tmp_path / "index.html").write_text("x")
        engine = Engine(OutputConfig(width=16, height=16, fps=30), keep_log=False)
        srv = ControlServer(engine, "127.0.0.1", 0, ui_dir=str(tmp_path))
        srv.start()
        try:
            sock = socket.create_connection(srv.address, timeout=5)
            sock.sendall(b"GET /../../../etc/passwd HTTP/1.1\r\nHost: x\r\n\r\n")
            data = b""
            while True:
                piece = sock.recv(4096)
                if not piece:
                    break
                data += piece
            assert b"404" in data
            sock.close()
        finally:
            srv.stop()
