"""Scene renderer: crop, viewport, scale, rotate, translate, then
painter's-algorithm alpha compositing and the annotation overlay.

Determinism contract
--------------------
Rendering the same snapshot twice yields byte-identical frames on every
platform. To make that testable against a naive per-pixel reference,
the arithmetic is pinned down exactly:

* A destination pixel (x, y) is sampled at its center (x + 0.5, y + 0.5).
* The inverse map per placement, in order, is::

      rx = (x + 0.5) - pos_x            ry = (y + 0.5) - pos_y
      dx = rx - cx                      dy = ry - cy
      ux = cos_t * dx + sin_t * dy + cx
      uy = -sin_t * dx + cos_t * dy + cy
      vx = ux / scale_x                 vy = uy / scale_y
      inside iff 0 <= vx < crop_w and 0 <= vy < crop_h
      sx = pan_x + vx / zoom            sy = pan_y + vy / zoom
      X = floor(crop_x + sx)            Y = floor(crop_y + sy)

  where (cx, cy) = (crop_w * scale_x / 2, crop_h * scale_y / 2) is the
  placed rectangle's center and cos_t/sin_t come from
  rotation_cos_sin(). Sampling is nearest neighbor at (X, Y).
* Rotations that are multiples of 90 degrees use exact cos/sin values
  (0, 1, -1); other angles use math.cos/math.sin of the radian value.
* Per pixel, layers accumulate premultiplied alpha in float64:
  ``A' = a_f + A * (1 - a_f)`` and ``P' = c_f * a_f + P * (1 - a_f)``
  with channel values normalized by dividing by 255.0. Quantization to
  8 bits happens once per pixel at the very end: un-premultiply
  (c = P / A, zero when A = 0), then ``floor(v * 255.0 + 0.5)``.

All math is float64 elementwise; no FMA, no dot products, so the
vectorized path reproduces scalar evaluation bit-for-bit.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import Scene, SourcePlacement
from .raster import RGBA, FrameBuffer

_RIGHT_ANGLES = {0.0: (1.0, 0.0), 90.0: (0.0, 1.0), 180.0: (-1.0, 0.0), 270.0: (0.0, -1.0)}


def rotation_cos_sin(degrees: float) -> tuple[float, float]:
    """cos/sin used by both the renderer and the inverse mapper.

    Right angles snap to exact values so axis-aligned placements stay
    crisp; anything else is plain libm cos/sin.
    """
    norm = degrees % 360.0
    if norm in _RIGHT_ANGLES:
        return _RIGHT_ANGLES[norm]
    rad = math.radians(degrees)
    return (math.cos(rad), math.sin(rad))


def map_dest_to_source(
    placement: SourcePlacement, dest_xy: tuple[int, int]
) -> tuple[int, int] | None:
    """Map an output pixel back to the source pixel it samples.

    Returns None when the pixel falls outside the placed rectangle or
    the crop window (see module docstring for the exact chain).
    """
    crop_x, crop_y, crop_w, crop_h = placement.transform.crop
    pos_x, pos_y = placement.transform.position
    scale_x, scale_y = placement.transform.scale
    zoom = placement.viewport.zoom
    pan_x, pan_y = placement.viewport.pan
    cos_t, sin_t = rotation_cos_sin(placement.transform.rotation)
    cx = crop_w * scale_x / 2.0
    cy = crop_h * scale_y / 2.0

    rx = (dest_xy[0] + 0.5) - pos_x
    ry = (dest_xy[1] + 0.5) - pos_y
    dx = rx - cx
    dy = ry - cy
    ux = cos_t * dx + sin_t * dy + cx
    uy = -sin_t * dx + cos_t * dy + cy
    vx = ux / scale_x
    vy = uy / scale_y
    if not (0.0 <= vx < crop_w and 0.0 <= vy < crop_h):
        return None
    sx = pan_x + vx / zoom
    sy = pan_y + vy / zoom
    px = math.floor(crop_x + sx)
    py = math.floor(crop_y + sy)
    if not (crop_x <= px < crop_x + crop_w and crop_y <= py < crop_y + crop_h):
        return None
    return (px, py)


def alpha_over(fg: RGBA, bg: RGBA) -> RGBA:
    """Straight-alpha "over" on 8-bit pixels, rounded half-up once."""
    a_f = fg[3] / 255.0
    a_b = bg[3] / 255.0
    na = 1.0 - a_f
    t = a_b * na
    a_o = a_f + t
    if a_o == 0.0:
        return (0, 0, 0, 0)
    out = []
    for ch in range(3):
        c = ((fg[ch] / 255.0) * a_f + (bg[ch] / 255.0) * t) / a_o
        out.append(min(int(math.floor(c * 255.0 + 0.5)), 255))
    out.append(min(int(math.floor(a_o * 255.0 + 0.5)), 255))
    return tuple(out)  # type: ignore[return-value]


@dataclass
class RenderSnapshot:
    """Everything render() needs for one tick, immutable by convention."""

    scene: Scene
    frames: dict[str, FrameBuffer]
    canvas: tuple[int, int]
    background: RGBA = (0, 0, 0, 255)
    annotation: np.ndarray | None = None  # (H, W, 4) uint8 overlay
    # optional (x0, y0, x1, y1) box outside which the overlay is known
    # to be fully transparent; purely an optimization hint
    annotation_bounds: tuple[int, int, int, int] | None = None


@dataclass
class _Geometry:
    x0: int
    x1: int
    y0: int
    y1: int
    src_x: np.ndarray  # int32 (h, w) clamped gather columns
    src_y: np.ndarray
    mask: np.ndarray  # bool (h, w), True where the pixel is covered
    full: bool  # mask is all-True
    # set when the mapping is a pure integer translation: (src_y0, src_x0)
    # of the top-left source pixel, letting callers slice instead of gather
    src_origin: tuple[int, int] | None = None


@lru_cache(maxsize=16)
def _placement_geometry(
    crop: tuple[int, int, int, int],
    position: tuple[float, float],
    scale: tuple[float, float],
    rotation: float,
    zoom: float,
    pan: tuple[float, float],
    canvas: tuple[int, int],
    frame_size: tuple[int, int],
) -> _Geometry | None:
    """Vectorized inverse map for a whole placement, memoized.

    Returns None when the placement lands entirely off-canvas. The
    arrays are shared across frames; callers must not mutate them.
    """
    crop_x, crop_y, crop_w, crop_h = crop
    pos_x, pos_y = position
    scale_x, scale_y = scale
    pan_x, pan_y = pan
    fw, fh = frame_size
    cw, ch = canvas
    cos_t, sin_t = rotation_cos_sin(rotation)
    cx = crop_w * scale_x / 2.0
    cy = crop_h * scale_y / 2.0

    # bounding box of the rotated rectangle, padded one pixel
    corners = []
    for ux, uy in ((0.0, 0.0), (crop_w * scale_x, 0.0), (0.0, crop_h * scale_y), (crop_w * scale_x, crop_h * scale_y)):
        dx = ux - cx
        dy = uy - cy
        # forward rotation (inverse of the mapping matrix)
        fx = cos_t * dx - sin_t * dy + cx + pos_x
        fy = sin_t * dx + cos_t * dy + cy + pos_y
        corners.append((fx, fy))
    x0 = max(int(math.floor(min(c[0] for c in corners))) - 1, 0)
    x1 = min(int(math.ceil(max(c[0] for c in corners))) + 1, cw)
    y0 = max(int(math.floor(min(c[1] for c in corners))) - 1, 0)
    y1 = min(int(math.ceil(max(c[1] for c in corners))) + 1, ch)
    if x0 >= x1 or y0 >= y1:
        return None

    rx = np.arange(x0, x1, dtype=np.float64) + 0.5 - pos_x
    ry = np.arange(y0, y1, dtype=np.float64) + 0.5 - pos_y
    dx = rx - cx
    dy = ry - cy
    ux = cos_t * dx[None, :] + sin_t * dy[:, None] + cx
    uy = -sin_t * dx[None, :] + cos_t * dy[:, None] + cy
    vx = ux / scale_x
    vy = uy / scale_y
    inside = (vx >= 0.0) & (vx < crop_w) & (vy >= 0.0) & (vy < crop_h)
    sx = pan_x + vx / zoom
    sy = pan_y + vy / zoom
    px = np.floor(crop_x + sx).astype(np.int64)
    py = np.floor(crop_y + sy).astype(np.int64)
    inside &= (px >= crop_x) & (px < crop_x + crop_w)
    inside &= (py >= crop_y) & (py < crop_y + crop_h)
    inside &= (px >= 0) & (px < fw) & (py >= 0) & (py < fh)
    if not inside.any():
        return None
    np.clip(px, 0, fw - 1, out=px)
    np.clip(py, 0, fh - 1, out=py)
    full = bool(inside.all())
    src_origin = None
    if full:
        xs0 = px[0]
        ys0 = py[:, 0]
        if (
            np.array_equal(xs0, np.arange(xs0[0], xs0[0] + px.shape[1]))
            and np.array_equal(ys0, np.arange(ys0[0], ys0[0] + py.shape[0]))
            and (px == xs0[None, :]).all()
            and (py == ys0[:, None]).all()
        ):
            src_origin = (int(ys0[0]), int(xs0[0]))
    return _Geometry(
        x0=x0,
        x1=x1,
        y0=y0,
        y1=y1,
        src_x=px.astype(np.int32),
        src_y=py.astype(np.int32),
        mask=inside,
        full=full,
        src_origin=src_origin,
    )


def geometry_for(placement: SourcePlacement, canvas: tuple[int, int], frame_size: tuple[int, int]):
    return _placement_geometry(
        placement.transform.crop,
        placement.transform.position,
        placement.transform.scale,
        placement.transform.rotation,
        placement.viewport.zoom,
        placement.viewport.pan,
        canvas,
        frame_size,
    )


class _Prepared:
    """Gathered pixels for one (geometry, frame) pair, plus lazy f64
    blend inputs. Cached by identity so static layers cost one gather."""

    __slots__ = ("geom", "pixels", "fg", "opaque", "_f64")

    def __init__(self, geom: _Geometry, pixels: np.ndarray):
        self.geom = geom
        self.pixels = pixels
        if geom.src_origin is not None:
            oy, ox = geom.src_origin
            self.fg = pixels[oy : oy + (geom.y1 - geom.y0), ox : ox + (geom.x1 - geom.x0)]
        else:
            self.fg = pixels[geom.src_y, geom.src_x]
        alpha = self.fg[:, :, 3]
        self.opaque = bool(
            (alpha.min() if geom.full else alpha[geom.mask].min()) == 255
        )
        self._f64 = None

    def f64_parts(self):
        """(a_f, na, pf) with a_f zeroed outside the coverage mask."""
        if self._f64 is None:
            a_f = self.fg[:, :, 3].astype(np.float64) / 255.0
            if not self.geom.full:
                a_f[~self.geom.mask] = 0.0
            na = 1.0 - a_f
            pf = (self.fg[:, :, :3].astype(np.float64) / 255.0) * a_f[:, :, None]
            self._f64 = (a_f, na, pf)
        return self._f64


_PREP_CACHE: "OrderedDict[tuple[int, int], _Prepared]" = OrderedDict()
_PREP_CAPACITY = 8


def _prepare(geom: _Geometry, pixels: np.ndarray) -> _Prepared:
    key = (id(geom), id(pixels))
    hit = _PREP_CACHE.get(key)
    if hit is not None and hit.geom is geom and hit.pixels is pixels:
        _PREP_CACHE.move_to_end(key)
        return hit
    prep = _Prepared(geom, pixels)
    _PREP_CACHE[key] = prep
    if len(_PREP_CACHE) > _PREP_CAPACITY:
        _PREP_CACHE.popitem(last=False)
    return prep


def render(snapshot: RenderSnapshot) -> FrameBuffer:
    """Composite one output frame from a scene snapshot.

    Fully opaque layers over an opaque background are painted on a
    uint8 canvas and promoted to the float64 accumulator only when a
    translucent layer or the annotation overlay needs real blending;
    the promotion is value-exact (v -> v / 255.0), so the output bytes
    are identical to running the float64 pipeline throughout.
    """
    cw, ch = snapshot.canvas
    bg = snapshot.background

    layers: list[_Prepared] = []
    for placement in sorted(snapshot.scene.placements, key=lambda p: p.z):
        if not placement.visible:
            continue
        frame = snapshot.frames.get(placement.source)
        if frame is None:
            raise ValueError(f"snapshot is missing a frame for {placement.source!r}")
        geom = geometry_for(placement, snapshot.canvas, (frame.width, frame.height))
        if geom is None:
            continue
        layers.append(_prepare(geom, frame.pixels))

    # opaque prefix painted straight into the RGBA output (every fg
    # pixel written here has alpha 255 by the opacity check)
    start = 0
    if bg[3] == 255:
        out = np.empty((ch, cw, 4), dtype=np.uint8)
        out[:, :] = (bg[0], bg[1], bg[2], 255)
        while start < len(layers) and layers[start].opaque:
            prep = layers[start]
            g = prep.geom
            view = out[g.y0 : g.y1, g.x0 : g.x1]
            if g.full:
                view[:] = prep.fg
            else:
                view[g.mask] = prep.fg[g.mask]
            start += 1
        region = _blend_region(snapshot, layers[start:], (cw, ch))
        if region is None:
            return FrameBuffer(cw, ch, out)
        # real blending touches only this region; elsewhere the float64
        # pipeline would reproduce the u8 canvas exactly (opaque layers
        # hold v / 255.0 with alpha exactly 1.0, which quantizes back
        # to v), so restricting it is byte-neutral
        rx0, ry0, rx1, ry1 = region
        acc_p = out[ry0:ry1, rx0:rx1, :3].astype(np.float64)
        acc_p /= 255.0
        acc_a = np.full((ry1 - ry0, rx1 - rx0), 1.0, dtype=np.float64)
        for prep in layers[start:]:
            _blend_placement(acc_p, acc_a, prep, region)
        if snapshot.annotation is not None:
            _blend_full(acc_p, acc_a, snapshot.annotation[ry0:ry1, rx0:rx1])
        out[ry0:ry1, rx0:rx1] = _quantize(acc_p, acc_a)
        return FrameBuffer(cw, ch, out)

    # translucent background: full-canvas float64 pipeline
    a_bg = bg[3] / 255.0
    acc_p = np.empty((ch, cw, 3), dtype=np.float64)
    for i in range(3):
        acc_p[:, :, i] = (bg[i] / 255.0) * a_bg
    acc_a = np.full((ch, cw), a_bg, dtype=np.float64)
    for prep in layers[start:]:
        _blend_placement(acc_p, acc_a, prep, (0, 0, cw, ch))
    if snapshot.annotation is not None:
        _blend_full(acc_p, acc_a, snapshot.annotation)
    return FrameBuffer(cw, ch, _quantize(acc_p, acc_a))


def _blend_region(snapshot: RenderSnapshot, rest: list, canvas: tuple[int, int]):
    """Union box of everything that still needs float64 blending."""
    cw, ch = canvas
    boxes = [(p.geom.x0, p.geom.y0, p.geom.x1, p.geom.y1) for p in rest]
    if snapshot.annotation is not None:
        ab = snapshot.annotation_bounds or (0, 0, cw, ch)
        ab = (max(ab[0], 0), max(ab[1], 0), min(ab[2], cw), min(ab[3], ch))
        if ab[0] < ab[2] and ab[1] < ab[3]:
            boxes.append(ab)
    if not boxes:
        return None
    return (
        min(b[0] for b in boxes),
        min(b[1] for b in boxes),
        max(b[2] for b in boxes),
        max(b[3] for b in boxes),
    )


def _blend_placement(
    acc_p: np.ndarray, acc_a: np.ndarray, prep: _Prepared, region: tuple[int, int, int, int]
) -> None:
    geom = prep.geom
    rx0, ry0, rx1, ry1 = region
    # the region is a union of the pending layer boxes, so the geometry
    # box is inside it; intersect anyway for safety
    ix0, iy0 = max(geom.x0, rx0), max(geom.y0, ry0)
    ix1, iy1 = min(geom.x1, rx1), min(geom.y1, ry1)
    if ix0 >= ix1 or iy0 >= iy1:
        return
    view_p = acc_p[iy0 - ry0 : iy1 - ry0, ix0 - rx0 : ix1 - rx0]
    view_a = acc_a[iy0 - ry0 : iy1 - ry0, ix0 - rx0 : ix1 - rx0]
    lx = slice(ix0 - geom.x0, ix1 - geom.x0)
    ly = slice(iy0 - geom.y0, iy1 - geom.y0)
    if geom.full and prep.opaque:
        view_p[:] = prep.fg[ly, lx, :3].astype(np.float64)
        view_p /= 255.0
        view_a[:] = 1.0
        return
    a_f, na, pf = prep.f64_parts()
    view_p *= na[ly, lx][:, :, None]
    view_p += pf[ly, lx]
    view_a *= na[ly, lx]
    view_a += a_f[ly, lx]


def _blend_full(acc_p: np.ndarray, acc_a: np.ndarray, overlay: np.ndarray) -> None:
    a_f = overlay[:, :, 3].astype(np.float64) / 255.0
    na = 1.0 - a_f
    pf = (overlay[:, :, :3].astype(np.float64) / 255.0) * a_f[:, :, None]
    acc_p *= na[:, :, None]
    acc_p += pf
    acc_a *= na
    acc_a += a_f


def _quantize(acc_p: np.ndarray, acc_a: np.ndarray) -> np.ndarray:
    """Un-premultiply and round half-up, destroying the accumulators."""
    h, w = acc_a.shape
    out = np.empty((h, w, 4), dtype=np.uint8)
    zero = acc_a == 0.0
    any_zero = bool(zero.any())
    safe_a = np.where(zero, 1.0, acc_a) if any_zero else acc_a
    acc_p /= safe_a[:, :, None]
    acc_p *= 255.0
    acc_p += 0.5
    np.floor(acc_p, out=acc_p)
    np.minimum(acc_p, 255.0, out=acc_p)
    out[:, :, :3] = acc_p
    acc_a *= 255.0
    acc_a += 0.5
    np.floor(acc_a, out=acc_a)
    np.minimum(acc_a, 255.0, out=acc_a)
    out[:, :, 3] = acc_a
    if any_zero:
        out[zero] = 0
    return out
