"""Network front door: commands in, events and preview frames out.

One listening port speaks three dialects, distinguished by the first
byte of a connection:

* length-delimited JSON over plain TCP (a 4-byte big-endian length
  prefix, then a UTF-8 JSON object) for tooling and tests;
* WebSocket (RFC 6455) carrying the same JSON payloads as text frames,
  plus binary preview frames (8-byte big-endian frame index + BMP);
* plain HTTP GET for the bundled control-panel static files.

Every connection feeds one command queue; the render loop drains the
queue at each frame boundary, applies commands, and answers with the
frame index the command first affects, so acknowledged latency is at
most one frame. Event fan-out never blocks the render loop: slow
subscribers lose events (counted), never replies.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import queue
import socket
import struct
import threading
import time
from collections import deque

from .bmp import preview_message
from .engine import Engine

log = logging.getLogger(__name__)

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
_MAX_FRAME = 16 * 1024 * 1024
_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
}


class _Outbox:
    """Per-connection outbound queues: replies never drop, events may."""

    def __init__(self, max_events: int = 256):
        self._cv = threading.Condition()
        self._replies: deque = deque()
        self._events: deque = deque()
        self._max_events = max_events
        self.dropped_events = 0
        self.closed = False

    def put_reply(self, item) -> None:
        with self._cv:
            self._replies.append(item)
            self._cv.notify()

    def put_event(self, item) -> None:
        with self._cv:
            if len(self._events) >= self._max_events:
                self._events.popleft()
                self.dropped_events += 1
            self._events.append(item)
            self._cv.notify()

    def get(self, timeout: float = 0.5):
        with self._cv:
            if not self._replies and not self._events:
                self._cv.wait(timeout)
            if self._replies:
                return self._replies.popleft()
            if self._events:
                return self._events.popleft()
            return None

    def close(self) -> None:
        with self._cv:
            self.closed = True
            self._cv.notify_all()


class _Connection:
    def __init__(self, server: "ControlServer", sock: socket.socket, peer):
        self.server = server
        self.sock = sock
        self.peer = peer
        self.kind = "raw"
        self.outbox = _Outbox()
        self.preview_every = 0  # 0 = not subscribed
        self.alive = True
        self._write_lock = threading.Lock()

    # -- outbound ---------------------------------------------------------

    def send_json(self, obj: dict, is_reply: bool) -> None:
        data = json.dumps(obj, separators=(",", ":")).encode("utf-8")
        if is_reply:
            self.outbox.put_reply(("json", data))
        else:
            self.outbox.put_event(("json", data))

    def send_preview(self, payload: bytes) -> None:
        self.outbox.put_event(("binary", payload))

    def writer_loop(self) -> None:
        while self.alive and not self.outbox.closed:
            item = self.outbox.get()
            if item is None:
                continue
            kind, data = item
            try:
                with self._write_lock:
                    if self.kind == "ws":
                        self.sock.sendall(
                            _ws_frame(data, opcode=1 if kind == "json" else 2)
                        )
                    elif kind == "json":
                        self.sock.sendall(struct.pack(">I", len(data)) + data)
                    # raw TCP has no binary channel: previews are WS-only
            except OSError:
                self.close()
                return

    def close(self) -> None:
        self.alive = False
        self.outbox.close()
        try:
            self.sock.close()
        except OSError:
            pass
        self.server._forget(self)


def _ws_frame(payload: bytes, opcode: int) -> bytes:
    head = bytearray([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head.append(n)
    elif n < 65536:
        head.append(126)
        head += struct.pack(">H", n)
    else:
        head.append(127)
        head += struct.pack(">Q", n)
    return bytes(head) + payload


def _ws_accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


class ControlServer:
    def __init__(
        self,
        engine: Engine,
        host: str = "127.0.0.1",
        port: int = 0,
        ui_dir: str | None = None,
    ):
        self.engine = engine
        self.ui_dir = os.path.abspath(ui_dir) if ui_dir else None
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(16)
        self._listener.settimeout(0.2)
        self.address = self._listener.getsockname()
        self._queue: "queue.Queue" = queue.Queue()
        self._conns: list[_Connection] = []
        self._conn_lock = threading.Lock()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        engine.listeners.append(self._broadcast_event)
        engine.frame_listeners.append(self._dispatch_preview)

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        for target, name in (
            (self._accept_loop, "ctl-accept"),
            (self._render_loop, "ctl-render"),
        ):
            t = threading.Thread(target=target, name=name, daemon=True)
            t.start()
            self._threads.append(t)

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        with self._conn_lock:
            conns = list(self._conns)
        for conn in conns:
            conn.close()
        for t in self._threads:
            t.join(timeout=5)
        self.engine.shutdown()

    def serve_forever(self) -> None:
        self.start()
        try:
            while not self._stop.is_set():
                time.sleep(0.2)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def _forget(self, conn: _Connection) -> None:
        with self._conn_lock:
            if conn in self._conns:
                self._conns.remove(conn)

    # -- render loop ---------------------------------------------------------

    def _render_loop(self) -> None:
        fps = self.engine.output.fps
        period = 1.0 / fps
        start = time.monotonic()
        next_index = 0
        while not self._stop.is_set():
            self._drain_commands()
            deadline = start + (next_index + 1) * period
            now = time.monotonic()
            if now < deadline:
                time.sleep(min(deadline - now, period))
            else:
                behind = int((now - deadline) / period)
                if behind > 0:
                    self.engine.skip_frames(behind)
                    next_index += behind
            try:
                self.engine.tick()
            except Exception:
                log.exception("render tick failed")
            next_index += 1

    def _drain_commands(self) -> None:
        while True:
            try:
                item = self._queue.get_nowait()
            except queue.Empty:
                return
            if callable(item):
                item()
                continue
            conn, msg = item
            seq = msg.get("seq")
            op = msg.get("op")
            if not isinstance(op, str):
                conn.send_json({"seq": seq, "ok": False, "error": "missing op"}, True)
                continue
            if op == "preview_subscribe":
                reply = self._subscribe_preview(conn, msg.get("args", {}))
            else:
                reply = self.engine.execute(op, msg.get("args", {}))
            conn.send_json({"seq": seq, **reply}, True)

    def _subscribe_preview(self, conn: _Connection, args: dict) -> dict:
        every = int(args.get("every_n_frames", 1))
        if every < 1:
            return {"ok": False, "error": "every_n_frames must be >= 1"}
        if conn.kind != "ws":
            return {"ok": False, "error": "preview frames require the WebSocket transport"}
        conn.preview_every = every
        return {"ok": True, "applied_at_frame": self.engine.frame_index}

    # -- fan-out ---------------------------------------------------------------

    def _broadcast_event(self, event: dict) -> None:
        with self._conn_lock:
            conns = list(self._conns)
        for conn in conns:
            conn.send_json(event, is_reply=False)

    def _dispatch_preview(self, frame_index: int, frame) -> None:
        with self._conn_lock:
            takers = [
                c
                for c in self._conns
                if c.kind == "ws" and c.preview_every and frame_index % c.preview_every == 0
            ]
        if not takers:
            return
        payload = preview_message(frame_index, frame.pixels)
        for conn in takers:
            conn.send_preview(payload)

    # -- connection handling ------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, peer = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            conn = _Connection(self, sock, peer)
            with self._conn_lock:
                self._conns.append(conn)
            t = threading.Thread(
                target=self._serve_connection, args=(conn,), name=f"ctl-{peer[1]}", daemon=True
            )
            t.start()

    def _serve_connection(self, conn: _Connection) -> None:
        try:
            first = conn.sock.recv(1, socket.MSG_PEEK)
            if not first:
                conn.close()
                return
            if first == b"\x00":
                conn.kind = "tcp"
                self._start_writer(conn)
                self._raw_loop(conn)
            else:
                self._http_entry(conn)
        except OSError:
            pass
        finally:
            conn.close()

    def _start_writer(self, conn: _Connection) -> None:
        t = threading.Thread(target=conn.writer_loop, name="ctl-writer", daemon=True)
        t.start()
        self._push_state_snapshot(conn)

    def _push_state_snapshot(self, conn: _Connection) -> None:
        def job():
            state = self.engine.doc.describe()
            state["frame"] = self.engine.frame_index
            conn.send_json(
                {"kind": "state-changed", "body": {"op": "hello", "state": state},
                 "at_frame": self.engine.frame_index},
                is_reply=False,
            )

        self._queue.put(job)

    # raw TCP: u32 length + JSON
    def _raw_loop(self, conn: _Connection) -> None:
        sock = conn.sock
        while conn.alive:
            header = _recv_exact(sock, 4)
            if header is None:
                return
            (length,) = struct.unpack(">I", header)
            if length > _MAX_FRAME:
                conn.send_json({"seq": None, "ok": False, "error": "frame too large"}, True)
                return
            body = _recv_exact(sock, length)
            if body is None:
                return
            self._handle_payload(conn, body)

    def _handle_payload(self, conn: _Connection, body: bytes) -> None:
        try:
            msg = json.loads(body.decode("utf-8"))
            if not isinstance(msg, dict):
                raise ValueError("not an object")
        except (ValueError, UnicodeDecodeError) as exc:
            conn.send_json(
                {"seq": None, "ok": False, "error": f"malformed frame: {exc}"}, True
            )
            return
        self._queue.put((conn, msg))

    # -- HTTP and WebSocket --------------------------------------------------------

    def _http_entry(self, conn: _Connection) -> None:
        request = _read_http_request(conn.sock)
        if request is None:
            return
        method, path, headers = request
        if headers.get("upgrade", "").lower() == "websocket":
            key = headers.get("sec-websocket-key", "")
            if not key:
                conn.sock.sendall(b"HTTP/1.1 400 Bad Request\r\n\r\n")
                return
            accept = _ws_accept_key(key)
            conn.sock.sendall(
                (
                    "HTTP/1.1 101 Switching Protocols\r\n"
                    "Upgrade: websocket\r\n"
                    "Connection: Upgrade\r\n"
                    f"Sec-WebSocket-Accept: {accept}\r\n\r\n"
                ).encode("ascii")
            )
            conn.kind = "ws"
            self._start_writer(conn)
            self._ws_loop(conn)
            return
        self._serve_static(conn, method, path)

    def _serve_static(self, conn: _Connection, method: str, path: str) -> None:
        if self.ui_dir is None or method != "GET":
            _http_simple(conn.sock, 404, b"no static content here\n")
            return
        rel = path.split("?", 1)[0].lstrip("/") or "index.html"
        full = os.path.normpath(os.path.join(self.ui_dir, rel))
        if not full.startswith(self.ui_dir) or not os.path.isfile(full):
            _http_simple(conn.sock, 404, b"not found\n")
            return
        ext = os.path.splitext(full)[1].lower()
        ctype = _CONTENT_TYPES.get(ext, "application/octet-stream")
        with open(full, "rb") as fh:
            body = fh.read()
        head = (
            f"HTTP/1.1 200 OK\r\nContent-Type: {ctype}\r\n"
            f"Content-Length: {len(body)}\r\nConnection: close\r\n\r\n"
        ).encode("ascii")
        conn.sock.sendall(head + body)

    def _ws_loop(self, conn: _Connection) -> None:
        sock = conn.sock
        fragments: list[bytes] = []
        while conn.alive:
            frame = _read_ws_frame(sock)
            if frame is None:
                return
            fin, opcode, payload = frame
            if opcode == 8:  # close
                try:
                    sock.sendall(_ws_frame(payload[:2], opcode=8))
                except OSError:
                    pass
                return
            if opcode == 9:  # ping
                with conn._write_lock:
                    sock.sendall(_ws_frame(payload, opcode=10))
                continue
            if opcode == 10:  # pong
                continue
            fragments.append(payload)
            if not fin:
                continue
            data = b"".join(fragments)
            fragments = []
            if opcode in (1, 0):
                self._handle_payload(conn, data)
            # binary frames from clients are not part of the protocol


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        try:
            piece = sock.recv(n - len(buf))
        except OSError:
            return None
        if not piece:
            return None
        buf += piece
    return buf


def _read_http_request(sock: socket.socket):
    data = b""
    while b"\r\n\r\n" not in data:
        piece = sock.recv(4096)
        if not piece:
            return None
        data += piece
        if len(data) > 64 * 1024:
            return None
    head = data.split(b"\r\n\r\n", 1)[0].decode("latin-1")
    lines = head.split("\r\n")
    parts = lines[0].split()
    if len(parts) < 3:
        return None
    method, path = parts[0], parts[1]
    headers = {}
    for line in lines[1:]:
        name, _, value = line.partition(":")
        headers[name.strip().lower()] = value.strip()
    return method, path, headers


def _http_simple(sock: socket.socket, status: int, body: bytes) -> None:
    reason = {200: "OK", 400: "Bad Request", 404: "Not Found"}.get(status, "Error")
    head = (
        f"HTTP/1.1 {status} {reason}\r\nContent-Type: text/plain\r\n"
        f"Content-Length: {len(body)}\r\nConnection: close\r\n\r\n"
    ).encode("ascii")
    try:
        sock.sendall(head + body)
    except OSError:
        pass


def _read_ws_frame(sock: socket.socket):
    head = _recv_exact(sock, 2)
    if head is None:
        return None
    fin = bool(head[0] & 0x80)
    opcode = head[0] & 0x0F
    masked = bool(head[1] & 0x80)
    length = head[1] & 0x7F
    if length == 126:
        ext = _recv_exact(sock, 2)
        if ext is None:
            return None
        (length,) = struct.unpack(">H", ext)
    elif length == 127:
        ext = _recv_exact(sock, 8)
        if ext is None:
            return None
        (length,) = struct.unpack(">Q", ext)
    if length > _MAX_FRAME:
        return None
    mask = b"\x00\x00\x00\x00"
    if masked:
        mask = _recv_exact(sock, 4)
        if mask is None:
            return None
    payload = _recv_exact(sock, length) if length else b""
    if payload is None:
        return None
    if masked and length:
        decoded = bytearray(payload)
        for i in range(length):
            decoded[i] ^= mask[i & 3]
        payload = bytes(decoded)
    return fin, opcode, payload
