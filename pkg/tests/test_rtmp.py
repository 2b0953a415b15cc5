import io
import random
import socket
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenecast.rtmp import (
    ChunkReader,
    ChunkWriter,
    RtmpError,
    RtmpMessage,
    client_handshake,
    parse_rtmp_url,
    server_handshake,
    set_chunk_size_message,
)


def roundtrip(messages, chunk_size):
    writer = ChunkWriter(chunk_size)
    reader = ChunkReader(chunk_size)
    stream = io.BytesIO(b"".join(writer.encode(m) for m in messages))
    out = [reader.read_message(stream.read) for _ in messages]
    return out


class TestHandshake:
    def run_pair(self, client_rng=None, server_rng=None):
        a, b = socket.socketpair()
        errors = []

        def server():
            try:
                server_handshake(b.recv, b.sendall, server_rng)
            except Exception as exc:  # noqa: BLE001
                errors.append(exc)

        t = threading.Thread(target=server)
        t.start()
        client_handshake(a.recv, a.sendall, client_rng)
        t.join()
        a.close()
        b.close()
        if errors:
            raise errors[0]

    def test_first_client_byte_is_0x03(self):
        a, b = socket.socketpair()
        try:
            threading.Thread(
                target=lambda: server_handshake(b.recv, b.sendall), daemon=True
            ).start()
            chunks = []
            orig = a.sendall

            def capture(data):
                chunks.append(bytes(data))
                orig(data)

            client_handshake(a.recv, capture)
            assert chunks[0][0] == 0x03
            assert len(chunks[0]) == 1 + 1536
        finally:
            a.close()
            b.close()

    def test_loopback_completes_with_seeded_rng(self):
        self.run_pair(random.Random(1), random.Random(2))
        self.run_pair(random.Random(1), random.Random(2))  # reproducible

    def test_echo_mismatch_aborts(self):
        a, b = socket.socketpair()
        try:

            def evil_server():
                b.recv(1)
                c1 = b""
                while len(c1) < 1536:
                    c1 += b.recv(1536 - len(c1))
                bad = bytearray(c1)
                bad[100] ^= 0xFF
                b.sendall(bytes([3]) + bytes(1536) + bytes(bad))

            threading.Thread(target=evil_server, daemon=True).start()
            with pytest.raises(RtmpError, match="echo mismatch"):
                client_handshake(a.recv, a.sendall)
        finally:
            a.close()
            b.close()


class TestChunking:
    def test_fmt0_basic_header_byte(self):
        msg = RtmpMessage(20, 0, 0, b"x", chunk_stream_id=3)
        raw = ChunkWriter(128).encode(msg)
        assert raw[0] == 0x03  # (fmt 0 << 6) | csid 3

    def test_300_bytes_splits_128_128_44(self):
        msg = RtmpMessage(9, 1, 0, bytes(300), chunk_stream_id=4)
        raw = ChunkWriter(128).encode(msg)
        # fmt0 header is 12 bytes, each continuation adds 1 byte
        assert len(raw) == 12 + 128 + 1 + 128 + 1 + 44
        assert raw[12 + 128] == (3 << 6) | 4

    def test_roundtrip_basic(self):
        msgs = [
            RtmpMessage(20, 0, 0, b"hello world"),
            RtmpMessage(9, 1, 40, bytes(range(256)) * 3, chunk_stream_id=4),
            RtmpMessage(18, 1, 40, b"", chunk_stream_id=4),
        ]
        out = roundtrip(msgs, 128)
        assert out == msgs

    def test_extended_timestamp_roundtrip(self):
        msg = RtmpMessage(9, 1, 0x01000000, bytes(200), chunk_stream_id=4)
        out = roundtrip([msg], 64)
        assert out == [msg]

    def test_set_chunk_size_applies_mid_stream(self):
        writer = ChunkWriter(128)
        reader = ChunkReader(128)
        big = RtmpMessage(9, 1, 0, bytes(5000), chunk_stream_id=4)
        stream = io.BytesIO()
        stream.write(writer.encode(set_chunk_size_message(4096)))
        writer.chunk_size = 4096
        stream.write(writer.encode(big))
        stream.seek(0)
        first = reader.read_message(stream.read)
        assert first.msg_type == 1
        assert reader.chunk_size == 4096
        assert reader.read_message(stream.read) == big

    def test_continuation_on_unknown_stream_rejected(self):
        reader = ChunkReader(128)
        stream = io.BytesIO(bytes([(3 << 6) | 9]))
        with pytest.raises(RtmpError, match="unknown chunk stream"):
            reader.read_message(stream.read)

    def test_interleaved_chunk_streams(self):
        writer = ChunkWriter(64)
        a = RtmpMessage(9, 1, 10, bytes([1]) * 100, chunk_stream_id=4)
        b = RtmpMessage(20, 0, 0, bytes([2]) * 100, chunk_stream_id=3)
        raw_a = writer.encode(a)
        raw_b = writer.encode(b)
        # interleave: a's first chunk, b's first chunk, a's rest, b's rest
        split_a = 1 + 11 + 64
        split_b = 1 + 11 + 64
        stream = io.BytesIO(
            raw_a[:split_a] + raw_b[:split_b] + raw_a[split_a:] + raw_b[split_b:]
        )
        reader = ChunkReader(64)
        assert reader.read_message(stream.read) == a
        assert reader.read_message(stream.read) == b

    @settings(max_examples=50, deadline=None)
    @given(
        chunk_size=st.integers(64, 65536),
        seed=st.integers(0, 2**31),
        count=st.integers(1, 10),
    )
    def test_roundtrip_property(self, chunk_size, seed, count):
        rng = random.Random(seed)
        msgs = [
            RtmpMessage(
                msg_type=rng.choice([1, 4, 8, 9, 18, 20]),
                msg_stream_id=rng.randrange(0, 5),
                timestamp=rng.choice([0, 1, 1000, 0xFFFFFE, 0xFFFFFF, 0x1000000]),
                payload=rng.randbytes(rng.randrange(0, 3000)),
                chunk_stream_id=rng.randrange(2, 64),
            )
            for _ in range(count)
        ]
        # exclude real set-chunk-size payload semantics from this property
        msgs = [m for m in msgs if m.msg_type != 1] or [
            RtmpMessage(9, 0, 0, b"x", chunk_stream_id=5)
        ]
        assert roundtrip(msgs, chunk_size) == msgs


class TestUrls:
    def test_full_form(self):
        u = parse_rtmp_url("rtmp://example.com:2935/live/abc123")
        assert (u.host, u.port, u.app, u.stream_key) == ("example.com", 2935, "live", "abc123")

    def test_default_port(self):
        assert parse_rtmp_url("rtmp://h/app/key").port == 1935

    def test_nested_app(self):
        u = parse_rtmp_url("rtmp://h/app/inst/key")
        assert u.app == "app/inst"
        assert u.stream_key == "key"

    def test_bad_scheme(self):
        with pytest.raises(RtmpError, match="scheme"):
            parse_rtmp_url("http://h/app/key")

    def test_missing_key(self):
        with pytest.raises(RtmpError):
            parse_rtmp_url("rtmp://h/justapp")
