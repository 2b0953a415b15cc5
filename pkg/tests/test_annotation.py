import math

import numpy as np
import pytest

from scenecast.annotation import HIGHLIGHTER_ALPHA, AnnotationError, AnnotationLayer
from scenecast.compositor import alpha_over


def ref_coverage(points, width, shape):
    """Brute-force disk stamping over the whole pixel grid."""
    h, w = shape
    r = width / 2.0
    covered = np.zeros((h, w), dtype=bool)
    segments = [(points[0], points[0])] + list(zip(points, points[1:]))
    for (ax, ay), (bx, by) in segments:
        dist = math.hypot(bx - ax, by - ay)
        steps = max(int(math.ceil(dist)), 0)
        for k in range(steps + 1):
            t = k / steps if steps else 0.0
            cx = ax + (bx - ax) * t
            cy = ay + (by - ay) * t
            for y in range(h):
                for x in range(w):
                    if (x - cx) ** 2 + (y - cy) ** 2 <= r * r:
                        covered[y, x] = True
    return covered


class TestStrokeProtocol:
    def test_add_without_begin(self):
        layer = AnnotationLayer(16, 16)
        with pytest.raises(AnnotationError, match="without begin"):
            layer.add_point((1, 1))

    def test_end_without_begin(self):
        layer = AnnotationLayer(16, 16)
        with pytest.raises(AnnotationError):
            layer.end_stroke()

    def test_double_begin(self):
        layer = AnnotationLayer(16, 16)
        layer.begin_stroke("pen", (255, 0, 0, 255), 1, (2, 2))
        with pytest.raises(AnnotationError, match="already open"):
            layer.begin_stroke("pen", (255, 0, 0, 255), 1, (3, 3))

    def test_unknown_tool(self):
        layer = AnnotationLayer(16, 16)
        with pytest.raises(AnnotationError, match="unknown tool"):
            layer.begin_stroke("spray", (0, 0, 0, 255), 1, (0, 0))

    def test_clear_mid_stroke_discards(self):
        layer = AnnotationLayer(16, 16)
        layer.begin_stroke("pen", (255, 0, 0, 255), 1, (2, 2))
        layer.clear()
        assert not layer.raster.any()
        with pytest.raises(AnnotationError):
            layer.add_point((3, 3))


class TestPen:
    def test_width_one_point_covers_one_pixel(self):
        layer = AnnotationLayer(32, 32)
        layer.begin_stroke("pen", (255, 0, 0, 255), 1, (10, 10))
        layer.end_stroke()
        mask = layer.raster[:, :, 3] > 0
        assert mask[10, 10]
        assert mask.sum() == 1
        assert layer.raster[10, 10].tolist() == [255, 0, 0, 255]

    def test_horizontal_segment_matches_stamp_oracle(self):
        layer = AnnotationLayer(16, 16)
        layer.begin_stroke("pen", (0, 255, 0, 255), 1, (0, 5))
        layer.add_point((9, 5))
        layer.end_stroke()
        got = layer.raster[:, :, 3] > 0
        want = ref_coverage([(0, 5), (9, 5)], 1, (16, 16))
        assert np.array_equal(got, want)
        assert got[5, :10].all() and got.sum() == 10

    def test_diagonal_wide_matches_stamp_oracle(self):
        layer = AnnotationLayer(24, 24)
        pts = [(2.5, 3.0), (17.2, 11.8), (20.0, 20.0)]
        layer.begin_stroke("pen", (9, 9, 9, 255), 5, pts[0])
        for p in pts[1:]:
            layer.add_point(p)
        layer.end_stroke()
        got = layer.raster[:, :, 3] > 0
        want = ref_coverage(pts, 5, (24, 24))
        assert np.array_equal(got, want)

    def test_off_canvas_clipped(self):
        layer = AnnotationLayer(8, 8)
        layer.begin_stroke("pen", (1, 2, 3, 255), 9, (-5, -5))
        layer.add_point((20, 20))
        layer.end_stroke()  # must not raise


class TestHighlighter:
    def test_single_pass_alpha(self):
        layer = AnnotationLayer(8, 8)
        layer.begin_stroke("highlighter", (250, 250, 0, 255), 1, (4, 4))
        layer.end_stroke()
        expect = alpha_over((250, 250, 0, HIGHLIGHTER_ALPHA), (0, 0, 0, 0))
        assert layer.raster[4, 4].tolist() == list(expect)

    def test_once_per_stroke_rule(self):
        layer = AnnotationLayer(8, 8)
        layer.begin_stroke("highlighter", (250, 250, 0, 255), 1, (4, 4))
        layer.add_point((4, 4))
        layer.add_point((4, 4))  # dense events, same pixel
        layer.end_stroke()
        once = alpha_over((250, 250, 0, HIGHLIGHTER_ALPHA), (0, 0, 0, 0))
        assert layer.raster[4, 4].tolist() == list(once)

    def test_two_strokes_composite_twice(self):
        layer = AnnotationLayer(8, 8)
        for _ in range(2):
            layer.begin_stroke("highlighter", (250, 250, 0, 255), 1, (4, 4))
            layer.end_stroke()
        once = alpha_over((250, 250, 0, HIGHLIGHTER_ALPHA), (0, 0, 0, 0))
        twice = alpha_over((250, 250, 0, HIGHLIGHTER_ALPHA), once)
        assert layer.raster[4, 4].tolist() == list(twice)


class TestEraser:
    def test_erases_pen_pixels(self):
        layer = AnnotationLayer(16, 16)
        layer.begin_stroke("pen", (255, 0, 0, 255), 3, (8, 8))
        layer.end_stroke()
        layer.begin_stroke("eraser", (0, 0, 0, 0), 3, (8, 8))
        layer.end_stroke()
        assert layer.raster[8, 8].tolist() == [0, 0, 0, 0]

    def test_pen_then_eraser_identical_coverage_restores_transparent(self):
        layer = AnnotationLayer(24, 24)
        pts = [(3, 3), (18, 14)]
        layer.begin_stroke("pen", (255, 0, 0, 255), 4, pts[0])
        layer.add_point(pts[1])
        layer.end_stroke()
        layer.begin_stroke("eraser", (0, 0, 0, 0), 4, pts[0])
        layer.add_point(pts[1])
        layer.end_stroke()
        assert not layer.raster.any()


class TestReplayAndClear:
    def test_replay_identical_bytes(self):
        events = [
            ("begin", "pen", (255, 0, 0, 255), 2, (2.0, 2.0)),
            ("add", (9.5, 4.25)),
            ("end",),
            ("begin", "highlighter", (0, 255, 0, 255), 6, (5.0, 5.0)),
            ("add", (12.0, 12.0)),
            ("add", (3.0, 14.0)),
            ("end",),
            ("begin", "eraser", (0, 0, 0, 0), 3, (8.0, 8.0)),
            ("end",),
        ]

        def run():
            layer = AnnotationLayer(20, 20)
            for ev in events:
                if ev[0] == "begin":
                    layer.begin_stroke(ev[1], ev[2], ev[3], ev[4])
                elif ev[0] == "add":
                    layer.add_point(ev[1])
                else:
                    layer.end_stroke()
            return layer.raster.tobytes()

        assert run() == run()

    def test_clear_resets(self):
        layer = AnnotationLayer(8, 8)
        layer.begin_stroke("pen", (255, 255, 255, 255), 2, (4, 4))
        layer.end_stroke()
        layer.clear()
        assert not layer.raster.any()
        layer.clear()  # no-op on empty
        assert not layer.raster.any()
