"""RGBA frame buffer shared by every stage of the pipeline.

Pixels are stored as a numpy (height, width, 4) uint8 array in row-major
order with straight (non-premultiplied) alpha. All producers, the
compositor, and the encoders exchange this one type.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RGBA = tuple[int, int, int, int]

OPAQUE_BLACK: RGBA = (0, 0, 0, 255)


@dataclass
class FrameBuffer:
    width: int
    height: int
    pixels: np.ndarray
    pts_ms: int = 0

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("frame dimensions must be >= 1")
        if self.pixels.shape != (self.height, self.width, 4):
            raise ValueError(
                f"pixel array shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}x4"
            )
        if self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be uint8")

    @classmethod
    def filled(cls, width: int, height: int, color: RGBA, pts_ms: int = 0) -> "FrameBuffer":
        px = np.empty((height, width, 4), dtype=np.uint8)
        px[:, :] = color
        return cls(width, height, px, pts_ms)

    @classmethod
    def from_array(cls, pixels: np.ndarray, pts_ms: int = 0) -> "FrameBuffer":
        h, w = pixels.shape[:2]
        return cls(w, h, np.ascontiguousarray(pixels, dtype=np.uint8), pts_ms)

    def copy(self) -> "FrameBuffer":
        return FrameBuffer(self.width, self.height, self.pixels.copy(), self.pts_ms)

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrameBuffer):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.pixels, other.pixels)
        )
