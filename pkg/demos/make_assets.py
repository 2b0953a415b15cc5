#!/usr/bin/env python3
"""Regenerate the small deterministic media files under demos/assets/.

Everything is synthesized from fixed seeds: a short Y4M clip standing in
for downloaded speech footage, PPM infographics, a translucent PAM
"webcam" portrait, and a capture-stub directory emulating a live
visualization window. Run from the repo root:

    python demos/make_assets.py
"""

from __future__ import annotations

import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
ASSETS = os.path.join(HERE, "assets")


def write_ppm(path: str, rgb: np.ndarray) -> None:
    h, w = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(rgb[:, :, :3], dtype=np.uint8).tobytes())


def write_pam_rgba(path: str, rgba: np.ndarray) -> None:
    h, w = rgba.shape[:2]
    header = (
        b"P7\nWIDTH %d\nHEIGHT %d\nDEPTH 4\nMAXVAL 255\nTUPLTYPE RGB_ALPHA\nENDHDR\n"
        % (w, h)
    )
    with open(path, "wb") as fh:
        fh.write(header + np.ascontiguousarray(rgba, dtype=np.uint8).tobytes())


def write_y4m(path: str, frames_yuv, w: int, h: int) -> None:
    with open(path, "wb") as fh:
        fh.write(b"YUV4MPEG2 W%d H%d F30:1 Ip A1:1 C420\n" % (w, h))
        for y, u, v in frames_yuv:
            fh.write(b"FRAME\n")
            fh.write(y.tobytes() + u.tobytes() + v.tobytes())


def speech_clip(path: str, w: int = 96, h: int = 54, count: int = 12) -> None:
    """A little moving-gradient clip; stands in for downloaded footage."""
    frames = []
    for i in range(count):
        yy, xx = np.mgrid[0:h, 0:w]
        y = ((xx * 2 + yy + i * 9) % 220 + 16).astype(np.uint8)
        u = np.full((h // 2, w // 2), 100 + (i * 7) % 56, dtype=np.uint8)
        v = np.full((h // 2, w // 2), 140 - (i * 5) % 56, dtype=np.uint8)
        frames.append((y, u, v))
    write_y4m(path, frames, w, h)


def bar_chart(path: str, values, color, w: int = 220, h: int = 140) -> None:
    rgb = np.full((h, w, 3), 245, dtype=np.uint8)
    rgb[h - 12 :, :] = 210  # baseline strip
    n = len(values)
    for i, val in enumerate(values):
        x0 = 10 + i * (w - 20) // n
        x1 = x0 + max(((w - 20) // n) - 6, 3)
        bar_h = int((h - 24) * val)
        rgb[h - 12 - bar_h : h - 12, x0:x1] = color
    write_ppm(path, rgb)


def line_chart(path: str, seed: int, w: int = 260, h: int = 150) -> None:
    rng = np.random.default_rng(seed)
    rgb = np.full((h, w, 3), 250, dtype=np.uint8)
    rgb[:, 24] = 150
    rgb[h - 16, :] = 150
    level = h - 30.0
    for x in range(25, w - 4):
        level = min(max(level - rng.uniform(-1.6, 2.2), 12), h - 20)
        y = int(level)
        rgb[max(y - 1, 0) : y + 2, x] = (200, 40, 40)
    write_ppm(path, rgb)


def portrait(path: str, w: int = 80, h: int = 60) -> None:
    """Rounded translucent card with a simple face; webcam stand-in."""
    rgba = np.zeros((h, w, 4), dtype=np.uint8)
    rgba[:, :] = (30, 34, 44, 216)
    yy, xx = np.mgrid[0:h, 0:w]
    head = ((xx - w / 2) ** 2) / (14**2) + ((yy - 24) ** 2) / (14**2) <= 1
    body = ((xx - w / 2) ** 2) / (20**2) + ((yy - 58) ** 2) / (18**2) <= 1
    rgba[head | body] = (224, 196, 168, 255)
    for ex in (w // 2 - 5, w // 2 + 5):
        rgba[20:23, ex : ex + 2] = (40, 40, 40, 255)
    return write_pam_rgba(path, rgba)


def browser_stub(directory: str) -> None:
    """Numbered stills emulating an interactive visualization window."""
    os.makedirs(directory, exist_ok=True)
    rng = np.random.default_rng(7)
    w, h = 240, 160
    heights = rng.uniform(0.2, 1.0, size=8)
    for step in range(3):
        rgb = np.full((h, w, 3), 252, dtype=np.uint8)
        rgb[12:22, 8 : 8 + 60 + step * 30] = (90, 90, 220)  # filter widget
        for i, val in enumerate(heights):
            scaled = val * (1.0 - 0.25 * step) if i % 2 else val
            x0 = 10 + i * 28
            bar_h = int(110 * scaled)
            rgb[h - 16 - bar_h : h - 16, x0 : x0 + 20] = (70, 160, 90)
        write_ppm(os.path.join(directory, f"{step:03d}.ppm"), rgb)


def main() -> None:
    os.makedirs(ASSETS, exist_ok=True)
    speech_clip(os.path.join(ASSETS, "speech_clip.y4m"))
    bar_chart(
        os.path.join(ASSETS, "infographic_rates.ppm"),
        [0.25, 0.7, 0.45, 0.9, 0.35],
        (60, 90, 200),
    )
    bar_chart(
        os.path.join(ASSETS, "infographic_deployments.ppm"),
        [0.8, 0.3, 0.65, 0.2, 0.55],
        (200, 120, 40),
    )
    line_chart(os.path.join(ASSETS, "stock_chart.ppm"), seed=11)
    portrait(os.path.join(ASSETS, "portrait.pam"))
    browser_stub(os.path.join(ASSETS, "browser_stub"))
    print(f"assets written to {ASSETS}")


if __name__ == "__main__":
    main()
