"""Lossless block video codec used in the FLV output (codec id 3).

Bitstream layout:

* 4-byte header: two big-endian u16 values, one for each axis, packing
  (block_size / 16 - 1) in the top 4 bits and the image dimension in
  the low 12 bits, width first.
* Blocks walk the image from the bottom-left corner, left to right then
  bottom to top. The grid is anchored at the bottom edge, so partial
  blocks sit along the top and right edges.
* Each block is a big-endian u16 byte count followed by a zlib-format
  DEFLATE stream of 24-bit BGR pixels, rows bottom-up, pixels left to
  right. A count of zero in an inter frame means "unchanged since the
  previous frame".

The codec is exactly lossless: decode(encode(frame)) reproduces the
input bytes, which the round-trip tests rely on. DEFLATE level is fixed
at 6 so a given zlib build produces stable output.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .raster import FrameBuffer

DEFAULT_BLOCK = 64
_DEFLATE_LEVEL = 6
_MAX_DIM = 4095


class CodecError(ValueError):
    pass


def _validate(width: int, height: int, block: int) -> None:
    if not (16 <= block <= 256) or block % 16:
        raise CodecError(f"block size must be a multiple of 16 in 16..256, got {block}")
    if width > _MAX_DIM or height > _MAX_DIM:
        raise CodecError(f"dimensions {width}x{height} exceed {_MAX_DIM}")
    if width < 1 or height < 1:
        raise CodecError("dimensions must be >= 1")


def _as_bgr(frame: FrameBuffer | np.ndarray) -> np.ndarray:
    pixels = frame.pixels if isinstance(frame, FrameBuffer) else frame
    if pixels.ndim != 3 or pixels.shape[2] not in (3, 4):
        raise CodecError(f"expected (h, w, 3|4) pixels, got {pixels.shape}")
    return pixels[:, :, 2::-1]  # RGB(A) -> BGR view


def _block_spans(width: int, height: int, block: int):
    """Yield (x0, x1, y0, y1) in bottom-left traversal order."""
    cols = (width + block - 1) // block
    rows = (height + block - 1) // block
    for brow in range(rows):
        y1 = height - brow * block
        y0 = max(y1 - block, 0)
        for bcol in range(cols):
            x0 = bcol * block
            x1 = min(x0 + block, width)
            yield (x0, x1, y0, y1)


def _header(width: int, height: int, block: int) -> bytes:
    packed_w = ((block // 16 - 1) << 12) | width
    packed_h = ((block // 16 - 1) << 12) | height
    return struct.pack(">HH", packed_w, packed_h)


def _compress_block(bgr: np.ndarray, x0: int, x1: int, y0: int, y1: int) -> bytes:
    raw = np.ascontiguousarray(bgr[y0:y1, x0:x1][::-1]).tobytes()
    comp = zlib.compress(raw, _DEFLATE_LEVEL)
    if len(comp) > 0xFFFF:
        raise CodecError(
            f"compressed block exceeds 65535 bytes ({len(comp)}); use a smaller block size"
        )
    return struct.pack(">H", len(comp)) + comp


def sv1_encode_keyframe(frame: FrameBuffer | np.ndarray, block: int = DEFAULT_BLOCK) -> bytes:
    bgr = _as_bgr(frame)
    height, width = bgr.shape[:2]
    _validate(width, height, block)
    parts = [_header(width, height, block)]
    for x0, x1, y0, y1 in _block_spans(width, height, block):
        parts.append(_compress_block(bgr, x0, x1, y0, y1))
    return b"".join(parts)


def _block_change_grid(prev: np.ndarray, cur: np.ndarray, block: int) -> np.ndarray:
    """Bool (rows, cols) in top-down order: does each block's RGB differ?

    A block is flagged iff some color byte differs; alpha never counts.
    The per-pixel diff runs on a u32 view when both arrays allow it, and
    any flagged block is re-verified on color channels only, so blocks
    differing solely in alpha are still emitted as unchanged.
    """
    height, width = cur.shape[:2]
    rows = (height + block - 1) // block
    cols = (width + block - 1) // block
    # top-down block row starts; the grid anchors at the bottom edge, so
    # the top row is the partial one
    row_starts = np.array(
        [max(height - (rows - r) * block, 0) for r in range(rows)], dtype=np.intp
    )
    col_starts = np.arange(0, width, block, dtype=np.intp)

    fast = (
        prev.ndim == 3
        and prev.shape[2] == 4
        and prev.flags.c_contiguous
        and cur.flags.c_contiguous
    )
    if fast:
        a = prev.reshape(height, width * 4).view(np.uint32)
        b = cur.reshape(height, width * 4).view(np.uint32)
        diff = a != b
    else:
        diff = prev[:, :, 0] != cur[:, :, 0]
        diff |= prev[:, :, 1] != cur[:, :, 1]
        diff |= prev[:, :, 2] != cur[:, :, 2]
    changed = np.add.reduceat(
        np.add.reduceat(diff, row_starts, axis=0), col_starts, axis=1
    )
    if fast and changed.any():
        # u32 compare saw the alpha byte too; confirm on color channels
        for r, c in zip(*np.nonzero(changed)):
            y0 = row_starts[r]
            y1 = row_starts[r + 1] if r + 1 < rows else height
            x0 = col_starts[c]
            x1 = min(x0 + block, width)
            changed[r, c] = not np.array_equal(
                prev[y0:y1, x0:x1, :3], cur[y0:y1, x0:x1, :3]
            )
    return changed


def sv1_encode_inter(
    prev: FrameBuffer | np.ndarray,
    frame: FrameBuffer | np.ndarray,
    block: int = DEFAULT_BLOCK,
) -> bytes:
    prev_px = prev.pixels if isinstance(prev, FrameBuffer) else prev
    cur_px = frame.pixels if isinstance(frame, FrameBuffer) else frame
    bgr_prev = _as_bgr(prev)
    bgr = _as_bgr(frame)
    if bgr_prev.shape != bgr.shape:
        raise CodecError(
            f"frame size changed {bgr_prev.shape[:2]} -> {bgr.shape[:2]}; "
            "inter frames need matching dimensions"
        )
    height, width = bgr.shape[:2]
    _validate(width, height, block)
    rows = (height + block - 1) // block
    changed = _block_change_grid(prev_px, cur_px, block)
    parts = [_header(width, height, block)]
    for x0, x1, y0, y1 in _block_spans(width, height, block):
        brow_td = rows - 1 - (height - y1) // block
        if not changed[brow_td, x0 // block]:
            parts.append(b"\x00\x00")
        else:
            parts.append(_compress_block(bgr, x0, x1, y0, y1))
    return b"".join(parts)


def sv1_decode(data: bytes, prev: FrameBuffer | np.ndarray | None = None) -> FrameBuffer:
    """Recover exact pixels; prev is required to fill unchanged blocks."""
    if len(data) < 4:
        raise CodecError("short payload: missing header")
    packed_w, packed_h = struct.unpack_from(">HH", data, 0)
    block_w = ((packed_w >> 12) + 1) * 16
    block_h = ((packed_h >> 12) + 1) * 16
    width = packed_w & 0x0FFF
    height = packed_h & 0x0FFF
    if block_w != block_h:
        raise CodecError(f"asymmetric block size {block_w}x{block_h} unsupported")
    if width < 1 or height < 1:
        raise CodecError(f"bad dimensions {width}x{height}")
    prev_bgr = None
    if prev is not None:
        prev_bgr = _as_bgr(prev)
        if prev_bgr.shape[:2] != (height, width):
            raise CodecError(
                f"previous frame is {prev_bgr.shape[1]}x{prev_bgr.shape[0]}, "
                f"stream says {width}x{height}"
            )
    out = np.empty((height, width, 3), dtype=np.uint8)
    pos = 4
    for x0, x1, y0, y1 in _block_spans(width, height, block_w):
        if pos + 2 > len(data):
            raise CodecError("short payload: truncated block length")
        (length,) = struct.unpack_from(">H", data, pos)
        pos += 2
        if length == 0:
            if prev_bgr is None:
                raise CodecError("unchanged block but no previous frame given")
            out[y0:y1, x0:x1] = prev_bgr[y0:y1, x0:x1]
            continue
        if pos + length > len(data):
            raise CodecError("short payload: truncated block data")
        try:
            raw = zlib.decompress(data[pos : pos + length])
        except zlib.error as exc:
            raise CodecError(f"inflate failure: {exc}") from exc
        pos += length
        rows = y1 - y0
        cols = x1 - x0
        if len(raw) != rows * cols * 3:
            raise CodecError(
                f"block payload is {len(raw)} bytes, expected {rows * cols * 3}"
            )
        out[y0:y1, x0:x1] = np.frombuffer(raw, dtype=np.uint8).reshape(rows, cols, 3)[::-1]
    if pos != len(data):
        raise CodecError(f"{len(data) - pos} trailing bytes after last block")
    rgba = np.empty((height, width, 4), dtype=np.uint8)
    rgba[:, :, 0] = out[:, :, 2]
    rgba[:, :, 1] = out[:, :, 1]
    rgba[:, :, 2] = out[:, :, 0]
    rgba[:, :, 3] = 255
    return FrameBuffer(width, height, rgba)
