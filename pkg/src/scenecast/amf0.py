"""AMF0 value codec, the subset needed by FLV script tags and RTMP
commands: number, boolean, string, object, ecma-array, null.

Numbers are IEEE-754 doubles, big-endian. Objects keep key order.
decode(encode(v)) == v on the supported subset.
"""

from __future__ import annotations

import struct

MARKER_NUMBER = 0x00
MARKER_BOOLEAN = 0x01
MARKER_STRING = 0x02
MARKER_OBJECT = 0x03
MARKER_NULL = 0x05
MARKER_UNDEFINED = 0x06
MARKER_ECMA_ARRAY = 0x08
MARKER_OBJECT_END = 0x09


class Amf0Error(ValueError):
    pass


class EcmaArray(dict):
    """dict that round-trips as an AMF0 ecma-array instead of an object."""


def encode_value(value) -> bytes:
    if value is None:
        return bytes([MARKER_NULL])
    if isinstance(value, bool):
        return bytes([MARKER_BOOLEAN, 1 if value else 0])
    if isinstance(value, (int, float)):
        return bytes([MARKER_NUMBER]) + struct.pack(">d", float(value))
    if isinstance(value, str):
        raw = value.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise Amf0Error(f"string too long for AMF0 short string: {len(raw)} bytes")
        return bytes([MARKER_STRING]) + struct.pack(">H", len(raw)) + raw
    if isinstance(value, EcmaArray):
        return (
            bytes([MARKER_ECMA_ARRAY])
            + struct.pack(">I", len(value))
            + _encode_properties(value)
        )
    if isinstance(value, dict):
        return bytes([MARKER_OBJECT]) + _encode_properties(value)
    raise Amf0Error(f"cannot encode {type(value).__name__} as AMF0")


def _encode_properties(obj: dict) -> bytes:
    parts = []
    for key, val in obj.items():
        raw = str(key).encode("utf-8")
        if len(raw) > 0xFFFF:
            raise Amf0Error("property name too long")
        parts.append(struct.pack(">H", len(raw)) + raw)
        parts.append(encode_value(val))
    parts.append(b"\x00\x00" + bytes([MARKER_OBJECT_END]))
    return b"".join(parts)


def encode_values(*values) -> bytes:
    return b"".join(encode_value(v) for v in values)


def decode_value(data: bytes, offset: int = 0):
    """Decode one value; returns (value, next_offset)."""
    if offset >= len(data):
        raise Amf0Error("truncated AMF0 data")
    marker = data[offset]
    offset += 1
    if marker == MARKER_NUMBER:
        _need(data, offset, 8)
        return struct.unpack_from(">d", data, offset)[0], offset + 8
    if marker == MARKER_BOOLEAN:
        _need(data, offset, 1)
        return data[offset] != 0, offset + 1
    if marker == MARKER_STRING:
        text, offset = _decode_short_string(data, offset)
        return text, offset
    if marker == MARKER_OBJECT:
        return _decode_properties(data, offset, dict())
    if marker in (MARKER_NULL, MARKER_UNDEFINED):
        return None, offset
    if marker == MARKER_ECMA_ARRAY:
        _need(data, offset, 4)
        # declared count is advisory; properties end at the end marker
        return _decode_properties(data, offset + 4, EcmaArray())
    raise Amf0Error(f"unsupported AMF0 marker 0x{marker:02x}")


def _decode_short_string(data: bytes, offset: int) -> tuple[str, int]:
    _need(data, offset, 2)
    length = struct.unpack_from(">H", data, offset)[0]
    offset += 2
    _need(data, offset, length)
    return data[offset : offset + length].decode("utf-8"), offset + length


def _decode_properties(data: bytes, offset: int, out: dict):
    while True:
        key, offset = _decode_short_string(data, offset)
        _need(data, offset, 1)
        if key == "" and data[offset] == MARKER_OBJECT_END:
            return out, offset + 1
        value, offset = decode_value(data, offset)
        out[key] = value


def decode_all(data: bytes) -> list:
    """Decode back-to-back values, e.g. an RTMP command payload."""
    values = []
    offset = 0
    while offset < len(data):
        value, offset = decode_value(data, offset)
        values.append(value)
    return values


def _need(data: bytes, offset: int, count: int) -> None:
    if offset + count > len(data):
        raise Amf0Error("truncated AMF0 data")
