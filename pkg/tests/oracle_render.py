"""Naive per-pixel reference renderer used as the compositing oracle.

Implements the documented pipeline with plain Python loops and scalar
math, independently of the production renderer: inverse-map each output
pixel through every placement, accumulate premultiplied alpha in
float64, quantize once per pixel with floor(v * 255 + 0.5).
"""

from __future__ import annotations

import math

import numpy as np

_RIGHT = {0.0: (1.0, 0.0), 90.0: (0.0, 1.0), 180.0: (-1.0, 0.0), 270.0: (0.0, -1.0)}


def _cos_sin(degrees):
    norm = degrees % 360.0
    if norm in _RIGHT:
        return _RIGHT[norm]
    rad = math.radians(degrees)
    return (math.cos(rad), math.sin(rad))


def ref_map_pixel(placement, x, y):
    """Scalar inverse map; returns (src_x, src_y) ints or None."""
    crop_x, crop_y, crop_w, crop_h = placement.transform.crop
    pos_x, pos_y = placement.transform.position
    scale_x, scale_y = placement.transform.scale
    zoom = placement.viewport.zoom
    pan_x, pan_y = placement.viewport.pan
    cos_t, sin_t = _cos_sin(placement.transform.rotation)
    cx = crop_w * scale_x / 2.0
    cy = crop_h * scale_y / 2.0
    dx = ((x + 0.5) - pos_x) - cx
    dy = ((y + 0.5) - pos_y) - cy
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


def reference_render(scene, frames, canvas, background=(0, 0, 0, 255), annotation=None):
    """Render a scene snapshot pixel by pixel; returns (H, W, 4) uint8."""
    width, height = canvas
    placements = sorted(
        (p for p in scene.placements if p.visible), key=lambda p: p.z
    )
    out = np.zeros((height, width, 4), dtype=np.uint8)
    bg_a = background[3] / 255.0
    for y in range(height):
        for x in range(width):
            acc_a = bg_a
            acc_p = [
                (background[0] / 255.0) * bg_a,
                (background[1] / 255.0) * bg_a,
                (background[2] / 255.0) * bg_a,
            ]
            for pl in placements:
                frame = frames[pl.source]
                hit = ref_map_pixel(pl, x, y)
                if hit is None:
                    continue
                sx, sy = hit
                if not (0 <= sx < frame.width and 0 <= sy < frame.height):
                    continue
                fg = frame.pixels[sy, sx]
                a_f = fg[3] / 255.0
                na = 1.0 - a_f
                acc_a = a_f + acc_a * na
                for ch in range(3):
                    acc_p[ch] = (fg[ch] / 255.0) * a_f + acc_p[ch] * na
            if annotation is not None:
                fg = annotation[y, x]
                a_f = fg[3] / 255.0
                na = 1.0 - a_f
                acc_a = a_f + acc_a * na
                for ch in range(3):
                    acc_p[ch] = (fg[ch] / 255.0) * a_f + acc_p[ch] * na
            if acc_a == 0.0:
                continue
            for ch in range(3):
                v = math.floor((acc_p[ch] / acc_a) * 255.0 + 0.5)
                out[y, x, ch] = min(v, 255)
            out[y, x, 3] = min(math.floor(acc_a * 255.0 + 0.5), 255)
    return out
