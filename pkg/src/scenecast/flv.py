"""FLV container writer and parser.

The engine records video-only FLV: a 9-byte file header, then tagged
packets, each followed by a u32 back-pointer (PreviousTagSize). Video
payloads carry the block codec from screenvideo.py (codec id 3); script
payloads carry AMF0. Timestamps are u24 milliseconds plus an extended
byte for the high bits and must never decrease within a stream.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Iterator

from . import amf0, screenvideo
from .model import OutputConfig
from .raster import FrameBuffer

TAG_AUDIO = 8
TAG_VIDEO = 9
TAG_SCRIPT = 18

FRAME_KEY = 1
FRAME_INTER = 2
CODEC_SCREEN_VIDEO = 3

HEADER_SIZE = 9
TAG_HEADER_SIZE = 11


class FlvError(ValueError):
    pass


@dataclass
class FlvTag:
    tag_type: int
    timestamp_ms: int
    payload: bytes

    def is_keyframe_video(self) -> bool:
        return (
            self.tag_type == TAG_VIDEO
            and len(self.payload) > 0
            and (self.payload[0] >> 4) == FRAME_KEY
        )


def write_header(video_only: bool = True) -> bytes:
    """File header plus the zero PreviousTagSize0 word (13 bytes)."""
    flags = 0x01 if video_only else 0x05
    return b"FLV" + bytes([1, flags]) + struct.pack(">I", HEADER_SIZE) + b"\x00\x00\x00\x00"


def encode_tag(tag: FlvTag) -> bytes:
    if not (0 <= tag.timestamp_ms <= 0xFFFFFFFF):
        raise FlvError(f"timestamp {tag.timestamp_ms} out of u32 range")
    size = len(tag.payload)
    if size > 0xFFFFFF:
        raise FlvError(f"tag payload too large: {size}")
    header = struct.pack(
        ">B3s3sB3s",
        tag.tag_type,
        size.to_bytes(3, "big"),
        (tag.timestamp_ms & 0xFFFFFF).to_bytes(3, "big"),
        (tag.timestamp_ms >> 24) & 0xFF,
        b"\x00\x00\x00",
    )
    return header + tag.payload + struct.pack(">I", TAG_HEADER_SIZE + size)


def video_tag_payload(codec_data: bytes, keyframe: bool) -> bytes:
    frame_type = FRAME_KEY if keyframe else FRAME_INTER
    return bytes([(frame_type << 4) | CODEC_SCREEN_VIDEO]) + codec_data


def write_metadata(width: int, height: int, fps: float) -> FlvTag:
    """onMetaData script tag advertising the stream layout."""
    if width <= 0 or height <= 0 or fps <= 0:
        raise FlvError("metadata values must be positive")
    payload = amf0.encode_values(
        "onMetaData",
        amf0.EcmaArray(
            {
                "width": float(width),
                "height": float(height),
                "framerate": float(fps),
                "videocodecid": float(CODEC_SCREEN_VIDEO),
            }
        ),
    )
    return FlvTag(tag_type=TAG_SCRIPT, timestamp_ms=0, payload=payload)


class FlvWriter:
    """Streams tags to a file-like object, enforcing timestamp order."""

    def __init__(self, fh: BinaryIO, video_only: bool = True):
        self._fh = fh
        self._last_ts: int | None = None
        self.bytes_written = 0
        self._write(write_header(video_only))

    def _write(self, data: bytes) -> None:
        self._fh.write(data)
        self.bytes_written += len(data)

    def write_tag(self, tag: FlvTag) -> None:
        if self._last_ts is not None and tag.timestamp_ms < self._last_ts:
            raise FlvError(
                f"timestamp regression: {tag.timestamp_ms} after {self._last_ts}"
            )
        self._last_ts = tag.timestamp_ms
        self._write(encode_tag(tag))


class TagEncoder:
    """Turns the frame stream into video tags: keyframe every
    keyframe_interval frames, inter tags encoding only changed blocks."""

    def __init__(self, config: OutputConfig, block: int = screenvideo.DEFAULT_BLOCK):
        self.config = config
        self.block = block
        self.index = 0
        self._prev: FrameBuffer | None = None

    def encode_next(self, frame: FrameBuffer) -> tuple[FlvTag, bool]:
        return self.encode_next_at(frame, self.config.frame_timestamp_ms(self.index))

    def encode_next_at(self, frame: FrameBuffer, timestamp_ms: int) -> tuple[FlvTag, bool]:
        """Encode with an explicit timestamp (live mode may skip frames)."""
        keyframe = self.index % self.config.keyframe_interval == 0
        if keyframe or self._prev is None:
            data = screenvideo.sv1_encode_keyframe(frame, self.block)
            keyframe = True
        else:
            data = screenvideo.sv1_encode_inter(self._prev, frame, self.block)
        tag = FlvTag(
            tag_type=TAG_VIDEO,
            timestamp_ms=timestamp_ms,
            payload=video_tag_payload(data, keyframe),
        )
        self._prev = frame
        self.index += 1
        return tag, keyframe


def mux_session(frames: Iterable[FrameBuffer], config: OutputConfig) -> bytes:
    """Complete in-memory FLV for a finite frame stream: header,
    onMetaData, then one video tag per frame."""
    import io

    buf = io.BytesIO()
    writer = FlvWriter(buf)
    writer.write_tag(write_metadata(config.width, config.height, config.fps))
    encoder = TagEncoder(config)
    for frame in frames:
        tag, _ = encoder.encode_next(frame)
        writer.write_tag(tag)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Reading side

def read_header(data: bytes) -> int:
    """Validate the file header; returns the offset of the first tag."""
    if len(data) < HEADER_SIZE + 4:
        raise FlvError("file too short for FLV header")
    if data[:3] != b"FLV":
        raise FlvError(f"bad magic {data[:3]!r}")
    if data[3] != 1:
        raise FlvError(f"unsupported FLV version {data[3]}")
    offset = struct.unpack_from(">I", data, 5)[0]
    if offset < HEADER_SIZE:
        raise FlvError(f"bad data offset {offset}")
    prev0 = struct.unpack_from(">I", data, offset)[0]
    if prev0 != 0:
        raise FlvError(f"PreviousTagSize0 is {prev0}, expected 0")
    return offset + 4


def iter_tags(data: bytes, check_back_pointers: bool = True) -> Iterator[FlvTag]:
    pos = read_header(data)
    while pos < len(data):
        if pos + TAG_HEADER_SIZE > len(data):
            raise FlvError(f"truncated tag header at byte {pos}")
        tag_type = data[pos]
        size = int.from_bytes(data[pos + 1 : pos + 4], "big")
        ts = int.from_bytes(data[pos + 4 : pos + 7], "big") | (data[pos + 7] << 24)
        stream_id = int.from_bytes(data[pos + 8 : pos + 11], "big")
        if stream_id != 0:
            raise FlvError(f"nonzero stream id {stream_id} at byte {pos}")
        body_start = pos + TAG_HEADER_SIZE
        if body_start + size + 4 > len(data):
            raise FlvError(f"truncated tag body at byte {pos}")
        back = struct.unpack_from(">I", data, body_start + size)[0]
        if check_back_pointers and back != TAG_HEADER_SIZE + size:
            raise FlvError(
                f"bad PreviousTagSize {back} at byte {body_start + size}, "
                f"expected {TAG_HEADER_SIZE + size}"
            )
        yield FlvTag(tag_type, ts, bytes(data[body_start : body_start + size]))
        pos = body_start + size + 4


def walk(data: bytes) -> dict:
    """Full-file integrity check; raises FlvError on any inconsistency.

    Verifies the header, every back-pointer, timestamp monotonicity,
    and that video tags carry the expected codec id. Returns counts.
    """
    last_ts = None
    counts = {"video": 0, "script": 0, "keyframes": 0}
    for tag in iter_tags(data, check_back_pointers=True):
        if last_ts is not None and tag.timestamp_ms < last_ts:
            raise FlvError(f"timestamp regression at {tag.timestamp_ms}")
        last_ts = tag.timestamp_ms
        if tag.tag_type == TAG_VIDEO:
            counts["video"] += 1
            if not tag.payload:
                raise FlvError("empty video tag")
            if (tag.payload[0] & 0x0F) != CODEC_SCREEN_VIDEO:
                raise FlvError(f"unexpected codec id {tag.payload[0] & 0x0F}")
            if tag.is_keyframe_video():
                counts["keyframes"] += 1
        elif tag.tag_type == TAG_SCRIPT:
            counts["script"] += 1
        else:
            raise FlvError(f"unexpected tag type {tag.tag_type}")
    return counts


def decode_video_frames(data: bytes) -> list[tuple[int, FrameBuffer]]:
    """Decode every video tag; returns (timestamp_ms, frame) pairs."""
    frames: list[tuple[int, FrameBuffer]] = []
    prev: FrameBuffer | None = None
    for tag in iter_tags(data):
        if tag.tag_type != TAG_VIDEO:
            continue
        if (tag.payload[0] & 0x0F) != CODEC_SCREEN_VIDEO:
            raise FlvError(f"unexpected codec id {tag.payload[0] & 0x0F}")
        frame = screenvideo.sv1_decode(tag.payload[1:], prev)
        frame.pts_ms = tag.timestamp_ms
        frames.append((tag.timestamp_ms, frame))
        prev = frame
    return frames


def read_metadata(data: bytes) -> dict | None:
    """Return the first onMetaData payload as a dict, if present."""
    for tag in iter_tags(data):
        if tag.tag_type != TAG_SCRIPT:
            continue
        values = amf0.decode_all(tag.payload)
        if len(values) >= 2 and values[0] == "onMetaData" and isinstance(values[1], dict):
            return dict(values[1])
    return None
