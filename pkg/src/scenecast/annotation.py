"""Live scribble overlay: pen, highlighter, eraser.

Strokes are rasterized immediately, event by event, so the very next
frame shows them. The model is disk stamping: a disk of radius width/2
is stamped at points spaced at most one pixel apart along each segment,
and a pixel is covered iff its center lies within a stamped disk.
Stroke coordinates are in output-canvas space where integer coordinates
are pixel centers, so a width-1 point at (10, 10) covers exactly pixel
(10, 10).

Tool semantics on the layer raster:

* pen writes (r, g, b, 255), replacing whatever the layer held;
* highlighter composites (r, g, b, 96) over the layer pixel, at most
  once per pixel within a single stroke so speed does not change depth;
* eraser resets covered pixels to fully transparent.

The layer persists across scene switches until clear() is called.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .raster import RGBA

HIGHLIGHTER_ALPHA = 96

TOOLS = ("pen", "highlighter", "eraser")


class AnnotationError(ValueError):
    """Stroke protocol violations (add/end without begin, bad tool)."""


@dataclass
class Stroke:
    tool: str
    color: RGBA
    width: float
    points: list[tuple[float, float]]


class AnnotationLayer:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.raster = np.zeros((height, width, 4), dtype=np.uint8)
        self.open_stroke: Stroke | None = None
        self._stroke_mask = np.zeros((height, width), dtype=bool)
        self._maybe_nonempty = False
        # conservative bounding box (x0, y0, x1, y1, exclusive) of every
        # pixel that might be non-transparent; lets the renderer blend
        # only the painted region
        self.bounds: tuple[int, int, int, int] | None = None

    @property
    def maybe_nonempty(self) -> bool:
        """Conservative: False guarantees the raster is fully transparent."""
        return self._maybe_nonempty

    def _grow_bounds(self, x0: int, y0: int, x1: int, y1: int) -> None:
        x0 = max(x0, 0)
        y0 = max(y0, 0)
        x1 = min(x1, self.width)
        y1 = min(y1, self.height)
        if x0 >= x1 or y0 >= y1:
            return
        if self.bounds is None:
            self.bounds = (x0, y0, x1, y1)
        else:
            bx0, by0, bx1, by1 = self.bounds
            self.bounds = (min(bx0, x0), min(by0, y0), max(bx1, x1), max(by1, y1))

    # -- stroke protocol ----------------------------------------------------

    def begin_stroke(self, tool: str, color: RGBA, width: float, p0: tuple[float, float]) -> None:
        if self.open_stroke is not None:
            raise AnnotationError("a stroke is already open")
        if tool not in TOOLS:
            raise AnnotationError(f"unknown tool {tool!r}")
        if width < 1:
            raise AnnotationError(f"stroke width must be >= 1, got {width}")
        self.open_stroke = Stroke(tool=tool, color=color, width=float(width), points=[p0])
        self._stroke_mask[:] = False
        self._apply_segment(self.open_stroke, p0, p0)

    def add_point(self, p: tuple[float, float]) -> None:
        if self.open_stroke is None:
            raise AnnotationError("add_point without begin_stroke")
        prev = self.open_stroke.points[-1]
        self.open_stroke.points.append(p)
        self._apply_segment(self.open_stroke, prev, p)

    def end_stroke(self) -> None:
        if self.open_stroke is None:
            raise AnnotationError("end_stroke without begin_stroke")
        self.open_stroke = None
        self._stroke_mask[:] = False

    def clear(self) -> None:
        self.raster[:] = 0
        self.open_stroke = None
        self._stroke_mask[:] = False
        self._maybe_nonempty = False
        self.bounds = None

    # -- rasterization --------------------------------------------------------

    def rasterize_segment(
        self,
        tool: str,
        color: RGBA,
        width: float,
        a: tuple[float, float],
        b: tuple[float, float],
        stroke_mask: np.ndarray | None = None,
    ) -> None:
        """Stamp one segment outside the begin/add/end protocol.

        stroke_mask carries the highlighter's once-per-stroke state
        between segments; pass the same array for every segment of one
        stroke.
        """
        covered = self._segment_coverage(width, a, b)
        if tool in ("pen", "highlighter"):
            r = width / 2.0
            self._grow_bounds(
                math.floor(min(a[0], b[0]) - r),
                math.floor(min(a[1], b[1]) - r),
                math.ceil(max(a[0], b[0]) + r) + 1,
                math.ceil(max(a[1], b[1]) + r) + 1,
            )
        self._paint(tool, color, covered, stroke_mask)

    def _apply_segment(self, stroke: Stroke, a, b) -> None:
        covered = self._segment_coverage(stroke.width, a, b)
        if stroke.tool in ("pen", "highlighter"):
            r = stroke.width / 2.0
            self._grow_bounds(
                math.floor(min(a[0], b[0]) - r),
                math.floor(min(a[1], b[1]) - r),
                math.ceil(max(a[0], b[0]) + r) + 1,
                math.ceil(max(a[1], b[1]) + r) + 1,
            )
        self._paint(stroke.tool, stroke.color, covered, self._stroke_mask)

    def _segment_coverage(self, width: float, a, b) -> np.ndarray:
        """Bool (H, W) mask of pixels whose centers fall in a stamped disk."""
        r = width / 2.0
        ax, ay = float(a[0]), float(a[1])
        bx, by = float(b[0]), float(b[1])
        dist = math.hypot(bx - ax, by - ay)
        steps = max(int(math.ceil(dist)), 0)
        covered = np.zeros((self.height, self.width), dtype=bool)
        r2 = r * r
        for k in range(steps + 1):
            t = k / steps if steps else 0.0
            cx = ax + (bx - ax) * t
            cy = ay + (by - ay) * t
            x0 = max(int(math.ceil(cx - r)), 0)
            x1 = min(int(math.floor(cx + r)), self.width - 1)
            y0 = max(int(math.ceil(cy - r)), 0)
            y1 = min(int(math.floor(cy + r)), self.height - 1)
            if x0 > x1 or y0 > y1:
                continue
            xs = np.arange(x0, x1 + 1, dtype=np.float64) - cx
            ys = np.arange(y0, y1 + 1, dtype=np.float64) - cy
            disk = xs[None, :] * xs[None, :] + ys[:, None] * ys[:, None] <= r2
            covered[y0 : y1 + 1, x0 : x1 + 1] |= disk
        return covered

    def _paint(self, tool: str, color: RGBA, covered: np.ndarray, stroke_mask: np.ndarray | None) -> None:
        if tool == "pen":
            self.raster[covered] = (color[0], color[1], color[2], 255)
            self._maybe_nonempty = True
        elif tool == "eraser":
            self.raster[covered] = (0, 0, 0, 0)
        elif tool == "highlighter":
            if stroke_mask is not None:
                fresh = covered & ~stroke_mask
                stroke_mask |= covered
            else:
                fresh = covered
            if fresh.any():
                self.raster[fresh] = _over_u8((color[0], color[1], color[2], HIGHLIGHTER_ALPHA), self.raster[fresh])
                self._maybe_nonempty = True
        else:
            raise AnnotationError(f"unknown tool {tool!r}")


def _over_u8(fg: RGBA, bg: np.ndarray) -> np.ndarray:
    """Vectorized alpha_over of a constant fg over (n, 4) uint8 pixels.

    Mirrors compositor.alpha_over operation for operation so scalar and
    batched results are byte-identical.
    """
    a_f = fg[3] / 255.0
    a_b = bg[:, 3].astype(np.float64) / 255.0
    na = 1.0 - a_f
    t = a_b * na
    a_o = a_f + t
    out = np.empty_like(bg)
    for ch in range(3):
        c = ((fg[ch] / 255.0) * a_f + (bg[:, ch].astype(np.float64) / 255.0) * t) / a_o
        q = np.floor(c * 255.0 + 0.5)
        np.minimum(q, 255.0, out=q)
        out[:, ch] = q.astype(np.uint8)
    q = np.floor(a_o * 255.0 + 0.5)
    np.minimum(q, 255.0, out=q)
    out[:, 3] = q.astype(np.uint8)
    return out
