"""Loopback RTMP ingest server.

Accepts one publisher at a time, answers the standard command sequence,
and writes received metadata/video messages to an FLV file named by the
stream key. Point any FLV-capable player at the output directory to
watch what a session published.

The file is written as <key>.flv.partial while the session runs and
renamed to <key>.flv on a clean end of stream; a malformed session
drops the connection and leaves the .partial file behind.
"""

from __future__ import annotations

import logging
import os
import re
import socket
import struct
import threading

from . import amf0
from .flv import FlvError, FlvTag, FlvWriter, TAG_SCRIPT, TAG_VIDEO
from .rtmp import (
    CSID_COMMAND,
    MSG_AUDIO,
    MSG_COMMAND_AMF0,
    MSG_DATA_AMF0,
    MSG_VIDEO,
    MSG_WINDOW_ACK_SIZE,
    MSG_SET_PEER_BANDWIDTH,
    ChunkReader,
    ChunkWriter,
    RtmpError,
    RtmpMessage,
    command_message,
    server_handshake,
)

log = logging.getLogger(__name__)

_SAFE_KEY = re.compile(r"[^A-Za-z0-9._-]")


def _safe_stream_name(key: str) -> str:
    cleaned = _SAFE_KEY.sub("_", os.path.basename(key)) or "stream"
    return cleaned


class _SocketReader:
    """recv wrapper with one-byte pushback for clean-EOF detection."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._pushed = b""

    def read(self, n: int) -> bytes:
        if self._pushed:
            take, self._pushed = self._pushed[:n], self._pushed[n:]
            return take
        return self._sock.recv(n)

    def peek_byte(self) -> bytes:
        """One byte, or b'' on EOF; the byte stays queued for read()."""
        if not self._pushed:
            self._pushed = self._sock.recv(1)
        return self._pushed


class IngestServer:
    """Single-slot RTMP ingest recording published streams to FLV."""

    def __init__(self, host: str, port: int, out_dir: str, rng=None, timeout: float = 10.0):
        self.out_dir = out_dir
        self.timeout = timeout
        self._rng = rng
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(4)
        # closing the socket does not wake a blocked accept() on Linux
        self._listener.settimeout(0.2)
        self.address = self._listener.getsockname()
        self._slot = threading.Semaphore(1)
        self._stop = threading.Event()
        self._accept_thread: threading.Thread | None = None
        self._workers: list[threading.Thread] = []
        os.makedirs(out_dir, exist_ok=True)

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="ingest-accept", daemon=True
        )
        self._accept_thread.start()

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=5)
        for worker in self._workers:
            worker.join(timeout=5)

    def serve_forever(self) -> None:
        self.start()
        try:
            self._stop.wait()
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, peer = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            worker = threading.Thread(
                target=self._serve_connection,
                args=(conn, peer),
                name=f"ingest-{peer[0]}:{peer[1]}",
                daemon=True,
            )
            self._workers.append(worker)
            worker.start()

    # -- one connection -------------------------------------------------------

    def _serve_connection(self, conn: socket.socket, peer) -> None:
        conn.settimeout(self.timeout)
        session = _PublisherSession(self, conn, peer)
        try:
            session.run()
        except (RtmpError, FlvError, amf0.Amf0Error, OSError, struct.error) as exc:
            log.warning("dropping %s: %s", peer, exc)
            session.abort()
        finally:
            try:
                conn.close()
            except OSError:
                pass
            if session.holds_slot:
                self._slot.release()

    def try_claim_slot(self) -> bool:
        return self._slot.acquire(blocking=False)


class _PublisherSession:
    def __init__(self, server: IngestServer, conn: socket.socket, peer):
        self.server = server
        self.conn = conn
        self.peer = peer
        self.reader = ChunkReader()
        self.writer = ChunkWriter()
        self.holds_slot = False
        self._fh = None
        self._flv: FlvWriter | None = None
        self._partial_path: str | None = None
        self._final_path: str | None = None

    def run(self) -> None:
        sock_reader = _SocketReader(self.conn)
        server_handshake(sock_reader.read, self.conn.sendall, self.server._rng)
        while True:
            if not sock_reader.peek_byte():
                if self.reader.has_partial():
                    raise RtmpError("connection closed mid-message")
                self.finalize()
                return
            msg = self.reader.read_message(sock_reader.read)
            self._handle(msg)

    # -- message handling ----------------------------------------------------

    def _handle(self, msg) -> None:
        if msg.msg_type == MSG_COMMAND_AMF0:
            self._handle_command(msg)
        elif msg.msg_type == MSG_DATA_AMF0:
            self._write_data(msg)
        elif msg.msg_type == MSG_VIDEO:
            self._write_video(msg)
        elif msg.msg_type == MSG_AUDIO:
            log.debug("ignoring audio message from %s", self.peer)
        # protocol control (set-chunk-size already applied by the reader),
        # acks and user control need no reply here

    def _handle_command(self, msg) -> None:
        values = amf0.decode_all(msg.payload)
        if not values or not isinstance(values[0], str):
            raise RtmpError("command message without a name")
        name = values[0]
        txn = values[1] if len(values) > 1 and isinstance(values[1], float) else 0.0
        if name == "connect":
            if not self.server.try_claim_slot():
                self._reply(
                    command_message(
                        [
                            "_error",
                            txn,
                            None,
                            {
                                "level": "error",
                                "code": "NetConnection.Connect.Rejected",
                                "description": "another publisher is active",
                            },
                        ]
                    )
                )
                raise RtmpError("rejected second concurrent publisher")
            self.holds_slot = True
            self._send_protocol_control()
            self._reply(
                command_message(
                    [
                        "_result",
                        txn,
                        {"fmsVer": "Loopback/1.0", "capabilities": 31.0},
                        {
                            "level": "status",
                            "code": "NetConnection.Connect.Success",
                            "description": "Connection succeeded.",
                        },
                    ]
                )
            )
        elif name == "createStream":
            self._reply(command_message(["_result", txn, None, 1.0]))
        elif name == "publish":
            if len(values) < 4 or not isinstance(values[3], str):
                raise RtmpError("publish without a stream key")
            self._open_output(values[3])
            self._reply(
                command_message(
                    [
                        "onStatus",
                        0.0,
                        None,
                        {
                            "level": "status",
                            "code": "NetStream.Publish.Start",
                            "description": f"{values[3]} is now published.",
                        },
                    ],
                    stream_id=msg.msg_stream_id,
                )
            )
        elif name in ("deleteStream", "FCUnpublish", "closeStream"):
            self.finalize()
        # releaseStream, FCPublish and friends are optional preamble: ignored

    def _send_protocol_control(self) -> None:
        self._reply(
            RtmpMessage(
                msg_type=MSG_WINDOW_ACK_SIZE,
                msg_stream_id=0,
                timestamp=0,
                payload=struct.pack(">I", 2500000),
                chunk_stream_id=2,
            )
        )
        self._reply(
            RtmpMessage(
                msg_type=MSG_SET_PEER_BANDWIDTH,
                msg_stream_id=0,
                timestamp=0,
                payload=struct.pack(">IB", 2500000, 2),
                chunk_stream_id=2,
            )
        )

    def _reply(self, msg) -> None:
        self.conn.sendall(self.writer.encode(msg))

    # -- output file --------------------------------------------------------

    def _open_output(self, stream_key: str) -> None:
        if self._fh is not None:
            raise RtmpError("second publish on one connection")
        name = _safe_stream_name(stream_key)
        self._final_path = os.path.join(self.server.out_dir, name + ".flv")
        self._partial_path = self._final_path + ".partial"
        self._fh = open(self._partial_path, "wb")
        self._flv = FlvWriter(self._fh)
        log.info("publishing %s from %s", self._final_path, self.peer)

    def _write_data(self, msg) -> None:
        if self._flv is None:
            return
        payload = msg.payload
        values = amf0.decode_all(payload)
        if values and values[0] == "@setDataFrame":
            # some encoders wrap metadata; store the unwrapped form
            payload = amf0.encode_values(*values[1:])
        self._flv.write_tag(FlvTag(TAG_SCRIPT, msg.timestamp, payload))

    def _write_video(self, msg) -> None:
        if self._flv is None:
            raise RtmpError("video message before publish")
        tag = FlvTag(TAG_VIDEO, msg.timestamp, msg.payload)
        self._flv.write_tag(tag)
        if tag.is_keyframe_video():
            self._fh.flush()

    def finalize(self) -> None:
        """Clean end of stream: close and promote the partial file."""
        if self._fh is None:
            return
        self._fh.close()
        os.replace(self._partial_path, self._final_path)
        self._fh = None
        self._flv = None

    def abort(self) -> None:
        """Protocol failure: keep whatever bytes made it as .partial."""
        if self._fh is None:
            return
        try:
            self._fh.close()
        except OSError:
            pass
        self._fh = None
        self._flv = None


def ingest_serve(listen_address: tuple[str, int] | str, out_dir: str) -> IngestServer:
    """Spin up an ingest server (started, caller stops it)."""
    if isinstance(listen_address, str):
        host, _, port = listen_address.rpartition(":")
        listen_address = (host or "127.0.0.1", int(port))
    server = IngestServer(listen_address[0], listen_address[1], out_dir)
    server.start()
    return server
