"""Uncompressed 24-bit BMP encoding for the preview feed.

Preview frames go out as a binary message: an 8-byte big-endian frame
index, then a complete BMP file (BITMAPFILEHEADER + BITMAPINFOHEADER,
bottom-up BGR rows padded to 4 bytes).
"""

from __future__ import annotations

import struct

import numpy as np

PREVIEW_MAX_WIDTH = 480


def downscale_nearest(pixels: np.ndarray, max_width: int = PREVIEW_MAX_WIDTH) -> np.ndarray:
    """Nearest-neighbor downscale to at most max_width columns.

    Sampling rule (mirrored by the control panel's coordinate mapping):
    destination pixel p reads source pixel floor((p + 0.5) * src / dst).
    """
    h, w = pixels.shape[:2]
    if w <= max_width:
        return pixels
    dw = max_width
    dh = max(1, round(h * dw / w))
    xs = np.minimum(((np.arange(dw) + 0.5) * (w / dw)).astype(np.int64), w - 1)
    ys = np.minimum(((np.arange(dh) + 0.5) * (h / dh)).astype(np.int64), h - 1)
    return pixels[ys[:, None], xs[None, :]]


def encode_bmp24(pixels: np.ndarray) -> bytes:
    h, w = pixels.shape[:2]
    bgr = pixels[:, :, 2::-1]
    row_bytes = w * 3
    pad = (4 - row_bytes % 4) % 4
    if pad:
        padded = np.zeros((h, row_bytes + pad), dtype=np.uint8)
        padded[:, :row_bytes] = bgr.reshape(h, row_bytes)
    else:
        padded = np.ascontiguousarray(bgr).reshape(h, row_bytes)
    body = np.ascontiguousarray(padded[::-1]).tobytes()  # bottom-up rows
    file_size = 14 + 40 + len(body)
    file_header = struct.pack("<2sIHHI", b"BM", file_size, 0, 0, 54)
    info_header = struct.pack(
        "<IiiHHIIiiII", 40, w, h, 1, 24, 0, len(body), 2835, 2835, 0, 0
    )
    return file_header + info_header + body


def decode_bmp24(data: bytes) -> np.ndarray:
    """Minimal reader for round-trip tests; returns (H, W, 3) RGB."""
    if data[:2] != b"BM":
        raise ValueError("not a BMP file")
    offset = struct.unpack_from("<I", data, 10)[0]
    header_size, w, h = struct.unpack_from("<Iii", data, 14)
    planes, bpp = struct.unpack_from("<HH", data, 26)
    compression = struct.unpack_from("<I", data, 30)[0]
    if header_size < 40 or planes != 1 or bpp != 24 or compression != 0:
        raise ValueError("unsupported BMP flavor")
    row_bytes = (w * 3 + 3) & ~3
    rows = np.frombuffer(data, dtype=np.uint8, count=abs(h) * row_bytes, offset=offset)
    rows = rows.reshape(abs(h), row_bytes)[:, : w * 3].reshape(abs(h), w, 3)
    if h > 0:
        rows = rows[::-1]
    return np.ascontiguousarray(rows[:, :, ::-1])


def preview_message(frame_index: int, pixels: np.ndarray, max_width: int = PREVIEW_MAX_WIDTH) -> bytes:
    small = downscale_nearest(pixels, max_width)
    return struct.pack(">Q", frame_index) + encode_bmp24(small)
