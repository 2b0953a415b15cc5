"""RTMP publishing client: handshake, chunk stream, command flow.

Implements the simple (non-digest) handshake and the subset of the
protocol needed to publish: set-chunk-size, connect, createStream,
publish, then AMF0 data and video messages whose payloads are exactly
the FLV tag payloads with FLV (absolute, millisecond) timestamps.

Wire conventions: every multi-byte integer is big-endian except the
message stream id inside a format-0 chunk message header, which is
little-endian. A message starts with a format-0 chunk and continues
with format-3 chunks; when the timestamp needs the extended field the
continuation chunks repeat it.
"""

from __future__ import annotations

import os
import socket
import struct
import urllib.parse
from dataclasses import dataclass, field

from . import amf0

DEFAULT_PORT = 1935
HANDSHAKE_SIZE = 1536
PROTOCOL_VERSION = 3

MSG_SET_CHUNK_SIZE = 1
MSG_ABORT = 2
MSG_ACK = 3
MSG_USER_CONTROL = 4
MSG_WINDOW_ACK_SIZE = 5
MSG_SET_PEER_BANDWIDTH = 6
MSG_AUDIO = 8
MSG_VIDEO = 9
MSG_DATA_AMF0 = 18
MSG_COMMAND_AMF0 = 20

CSID_PROTOCOL = 2
CSID_COMMAND = 3
CSID_MEDIA = 4

DEFAULT_CHUNK_SIZE = 128
OUT_CHUNK_SIZE = 4096


class RtmpError(RuntimeError):
    pass


@dataclass
class RtmpMessage:
    msg_type: int
    msg_stream_id: int
    timestamp: int
    payload: bytes
    chunk_stream_id: int = CSID_COMMAND


# ---------------------------------------------------------------------------
# Byte stream helpers

def read_exact(read, n: int) -> bytes:
    """Read exactly n bytes from a read(k) callable or fail."""
    chunks = []
    remaining = n
    while remaining:
        piece = read(remaining)
        if not piece:
            raise RtmpError(f"short read: wanted {n}, missing {remaining}")
        chunks.append(piece)
        remaining -= len(piece)
    return b"".join(chunks)


# ---------------------------------------------------------------------------
# Handshake

def _handshake_block(rng) -> bytes:
    rand = rng.randbytes(HANDSHAKE_SIZE - 8) if rng is not None else os.urandom(
        HANDSHAKE_SIZE - 8
    )
    return struct.pack(">II", 0, 0) + rand


def client_handshake(read, write, rng=None) -> None:
    c1 = _handshake_block(rng)
    write(bytes([PROTOCOL_VERSION]) + c1)
    s0 = read_exact(read, 1)[0]
    if s0 != PROTOCOL_VERSION:
        raise RtmpError(f"wrong version byte 0x{s0:02x} from server")
    s1 = read_exact(read, HANDSHAKE_SIZE)
    write(s1)  # C2 echoes S1
    s2 = read_exact(read, HANDSHAKE_SIZE)
    if s2 != c1:
        raise RtmpError("handshake echo mismatch")


def server_handshake(read, write, rng=None) -> None:
    c0 = read_exact(read, 1)[0]
    if c0 != PROTOCOL_VERSION:
        raise RtmpError(f"wrong version byte 0x{c0:02x} from client")
    c1 = read_exact(read, HANDSHAKE_SIZE)
    s1 = _handshake_block(rng)
    write(bytes([PROTOCOL_VERSION]) + s1 + c1)  # S0 + S1 + S2 echoing C1
    c2 = read_exact(read, HANDSHAKE_SIZE)
    if c2 != s1:
        raise RtmpError("handshake echo mismatch")


# ---------------------------------------------------------------------------
# Chunk stream

@dataclass
class _ChunkStreamState:
    timestamp: int = 0
    timestamp_delta: int = 0
    length: int = 0
    msg_type: int = 0
    msg_stream_id: int = 0
    extended: bool = False
    buffer: bytearray = field(default_factory=bytearray)


class ChunkWriter:
    """Serializes messages: format-0 header then format-3 continuations."""

    def __init__(self, chunk_size: int = DEFAULT_CHUNK_SIZE):
        self.chunk_size = chunk_size

    def encode(self, msg: RtmpMessage) -> bytes:
        csid = msg.chunk_stream_id
        if not (2 <= csid <= 63):
            raise RtmpError(f"chunk stream id {csid} outside the 1-byte form")
        extended = msg.timestamp >= 0xFFFFFF
        ts_field = 0xFFFFFF if extended else msg.timestamp
        out = bytearray()
        out.append((0 << 6) | csid)
        out += ts_field.to_bytes(3, "big")
        out += len(msg.payload).to_bytes(3, "big")
        out.append(msg.msg_type)
        out += struct.pack("<I", msg.msg_stream_id)  # the one little-endian field
        if extended:
            out += struct.pack(">I", msg.timestamp)
        pos = 0
        first = True
        while True:
            if not first:
                out.append((3 << 6) | csid)
                if extended:
                    out += struct.pack(">I", msg.timestamp)
            take = msg.payload[pos : pos + self.chunk_size]
            out += take
            pos += len(take)
            first = False
            if pos >= len(msg.payload):
                break
        return bytes(out)


class ChunkReader:
    """Reassembles messages, tracking per-chunk-stream header state.

    Handles header formats 0..3 and applies set-chunk-size messages to
    its own state as soon as they complete (they also get returned).
    """

    def __init__(self, chunk_size: int = DEFAULT_CHUNK_SIZE):
        self.chunk_size = chunk_size
        self._streams: dict[int, _ChunkStreamState] = {}

    def has_partial(self) -> bool:
        return any(st.buffer for st in self._streams.values())

    def read_message(self, read) -> RtmpMessage:
        while True:
            msg = self._read_chunk(read)
            if msg is not None:
                if msg.msg_type == MSG_SET_CHUNK_SIZE and len(msg.payload) >= 4:
                    self.chunk_size = struct.unpack(">I", msg.payload[:4])[0] & 0x7FFFFFFF
                return msg

    def _read_chunk(self, read) -> RtmpMessage | None:
        basic = read_exact(read, 1)[0]
        fmt = basic >> 6
        csid = basic & 0x3F
        if csid == 0:
            csid = 64 + read_exact(read, 1)[0]
        elif csid == 1:
            b = read_exact(read, 2)
            csid = 64 + b[0] + (b[1] << 8)
        st = self._streams.get(csid)
        if st is None:
            if fmt != 0:
                raise RtmpError(
                    f"continuation chunk (fmt {fmt}) on unknown chunk stream {csid}"
                )
            st = self._streams[csid] = _ChunkStreamState()

        if fmt == 0:
            hdr = read_exact(read, 11)
            ts = int.from_bytes(hdr[0:3], "big")
            st.length = int.from_bytes(hdr[3:6], "big")
            st.msg_type = hdr[6]
            st.msg_stream_id = struct.unpack("<I", hdr[7:11])[0]
            st.extended = ts == 0xFFFFFF
            if st.extended:
                ts = struct.unpack(">I", read_exact(read, 4))[0]
            st.timestamp = ts
            st.timestamp_delta = 0
        elif fmt == 1:
            hdr = read_exact(read, 7)
            delta = int.from_bytes(hdr[0:3], "big")
            st.length = int.from_bytes(hdr[3:6], "big")
            st.msg_type = hdr[6]
            st.extended = delta == 0xFFFFFF
            if st.extended:
                delta = struct.unpack(">I", read_exact(read, 4))[0]
            st.timestamp_delta = delta
            st.timestamp += delta
        elif fmt == 2:
            delta = int.from_bytes(read_exact(read, 3), "big")
            st.extended = delta == 0xFFFFFF
            if st.extended:
                delta = struct.unpack(">I", read_exact(read, 4))[0]
            st.timestamp_delta = delta
            st.timestamp += delta
        else:  # fmt == 3
            if st.extended:
                # continuations repeat the extended timestamp
                ext = struct.unpack(">I", read_exact(read, 4))[0]
                if not st.buffer:
                    st.timestamp = ext
            elif not st.buffer:
                # a fresh message reusing every previous field
                st.timestamp += st.timestamp_delta

        if st.length > 0x7FFFFFFF:
            raise RtmpError(f"declared message length {st.length} overflows")
        take = min(self.chunk_size, st.length - len(st.buffer))
        if take < 0:
            raise RtmpError("chunk accounting underflow")
        st.buffer += read_exact(read, take)
        if len(st.buffer) < st.length:
            return None
        payload = bytes(st.buffer)
        st.buffer = bytearray()
        return RtmpMessage(
            msg_type=st.msg_type,
            msg_stream_id=st.msg_stream_id,
            timestamp=st.timestamp,
            payload=payload,
            chunk_stream_id=csid,
        )


def set_chunk_size_message(size: int) -> RtmpMessage:
    return RtmpMessage(
        msg_type=MSG_SET_CHUNK_SIZE,
        msg_stream_id=0,
        timestamp=0,
        payload=struct.pack(">I", size),
        chunk_stream_id=CSID_PROTOCOL,
    )


def command_message(payload_values, stream_id: int = 0, csid: int = CSID_COMMAND) -> RtmpMessage:
    return RtmpMessage(
        msg_type=MSG_COMMAND_AMF0,
        msg_stream_id=stream_id,
        timestamp=0,
        payload=amf0.encode_values(*payload_values),
        chunk_stream_id=csid,
    )


# ---------------------------------------------------------------------------
# URLs

@dataclass(frozen=True)
class RtmpUrl:
    host: str
    port: int
    app: str
    stream_key: str


def parse_rtmp_url(url: str) -> RtmpUrl:
    parsed = urllib.parse.urlparse(url)
    if parsed.scheme != "rtmp":
        raise RtmpError(f"unsupported scheme {parsed.scheme!r}, expected rtmp://")
    if not parsed.hostname:
        raise RtmpError(f"missing host in {url!r}")
    path = parsed.path.strip("/")
    if "/" not in path:
        raise RtmpError(f"expected rtmp://host[:port]/app/stream_key, got {url!r}")
    app, _, key = path.rpartition("/")
    if not app or not key:
        raise RtmpError(f"expected rtmp://host[:port]/app/stream_key, got {url!r}")
    return RtmpUrl(parsed.hostname, parsed.port or DEFAULT_PORT, app, key)


# ---------------------------------------------------------------------------
# Publish session

class PublishSession:
    """One outgoing stream: connect, createStream, publish, then media.

    Never sends video before the server's NetStream.Publish.Start is
    observed. A transport or protocol failure puts the session into the
    failed state; the caller decides what to do about its other sinks.
    """

    def __init__(self, url: RtmpUrl, timeout: float = 5.0, rng=None):
        self.url = url
        self.timeout = timeout
        self.state = "new"
        self._rng = rng
        self._sock: socket.socket | None = None
        self._reader = ChunkReader()
        self._writer = ChunkWriter()
        self._stream_id = 0
        self._txn = 0

    # -- plumbing ---------------------------------------------------------

    def _recv(self, n: int) -> bytes:
        try:
            return self._sock.recv(n)
        except socket.timeout as exc:
            raise RtmpError(f"timeout waiting for server data: {exc}") from exc

    def _send(self, data: bytes) -> None:
        self._sock.sendall(data)

    def _send_message(self, msg: RtmpMessage) -> None:
        self._send(self._writer.encode(msg))

    def _await_command(self, names: tuple[str, ...]) -> list:
        """Read messages until a command with one of the given names."""
        while True:
            msg = self._reader.read_message(self._recv)
            if msg.msg_type != MSG_COMMAND_AMF0:
                continue  # window-ack, peer bandwidth, user control: ignored
            values = amf0.decode_all(msg.payload)
            if values and values[0] in names:
                return values

    # -- protocol flow ------------------------------------------------------

    def start(self) -> None:
        """Run handshake and command flow up to the publishing state."""
        try:
            self._start()
        except Exception:
            self.state = "failed"
            self._close_socket()
            raise

    def _start(self) -> None:
        try:
            self._sock = socket.create_connection(
                (self.url.host, self.url.port), timeout=self.timeout
            )
        except OSError as exc:
            raise RtmpError(
                f"cannot reach {self.url.host}:{self.url.port}: {exc}"
            ) from exc
        client_handshake(self._recv, self._send, self._rng)
        self._send_message(set_chunk_size_message(OUT_CHUNK_SIZE))
        self._writer.chunk_size = OUT_CHUNK_SIZE

        self._txn += 1
        tc_url = f"rtmp://{self.url.host}:{self.url.port}/{self.url.app}"
        self._send_message(
            command_message(
                ["connect", float(self._txn), {"app": self.url.app, "tcUrl": tc_url}]
            )
        )
        reply = self._await_command(("_result", "_error"))
        info = next((v for v in reply if isinstance(v, dict) and "code" in v), {})
        if reply[0] == "_error" or info.get("code") != "NetConnection.Connect.Success":
            raise RtmpError(f"connect rejected: {info.get('code', 'no code')}")

        self._txn += 1
        self._send_message(command_message(["createStream", float(self._txn), None]))
        reply = self._await_command(("_result", "_error"))
        if reply[0] == "_error" or len(reply) < 4 or not isinstance(reply[3], float):
            raise RtmpError("createStream rejected")
        self._stream_id = int(reply[3])

        self._send_message(
            command_message(
                ["publish", 0.0, None, self.url.stream_key, "live"],
                stream_id=self._stream_id,
                csid=CSID_MEDIA,
            )
        )
        reply = self._await_command(("onStatus", "_error"))
        info = next((v for v in reply if isinstance(v, dict) and "code" in v), {})
        if info.get("code") != "NetStream.Publish.Start":
            raise RtmpError(f"publish rejected: {info.get('code', 'no code')}")
        self.state = "publishing"

    def send_metadata(self, payload: bytes) -> None:
        self._require_publishing()
        self._guarded_send(
            RtmpMessage(
                msg_type=MSG_DATA_AMF0,
                msg_stream_id=self._stream_id,
                timestamp=0,
                payload=payload,
                chunk_stream_id=CSID_MEDIA,
            )
        )

    def send_video(self, timestamp_ms: int, payload: bytes) -> None:
        self._require_publishing()
        self._guarded_send(
            RtmpMessage(
                msg_type=MSG_VIDEO,
                msg_stream_id=self._stream_id,
                timestamp=timestamp_ms,
                payload=payload,
                chunk_stream_id=CSID_MEDIA,
            )
        )

    def _guarded_send(self, msg: RtmpMessage) -> None:
        try:
            self._send_message(msg)
        except OSError as exc:
            self.state = "failed"
            self._close_socket()
            raise RtmpError(f"connection lost: {exc}") from exc

    def _require_publishing(self) -> None:
        if self.state != "publishing":
            raise RtmpError(f"session is {self.state}, not publishing")

    def close(self) -> None:
        if self.state == "publishing":
            self.state = "closed"
        self._close_socket()

    def _close_socket(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None


def publish(url: str | RtmpUrl, timeout: float = 5.0, rng=None) -> PublishSession:
    """Open a publish session against an RTMP ingest and start it."""
    if isinstance(url, str):
        url = parse_rtmp_url(url)
    session = PublishSession(url, timeout=timeout, rng=rng)
    session.start()
    return session
