import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenecast.raster import FrameBuffer
from scenecast.screenvideo import (
    CodecError,
    sv1_decode,
    sv1_encode_inter,
    sv1_encode_keyframe,
)


def random_frame(rng, w, h):
    return FrameBuffer(w, h, rng.integers(0, 256, size=(h, w, 4), dtype=np.uint8) | np.array([0, 0, 0, 255], dtype=np.uint8))


class TestHeader:
    def test_640x480_block64_header_bits(self):
        fb = FrameBuffer.filled(640, 480, (1, 2, 3, 255))
        data = sv1_encode_keyframe(fb, block=64)
        first, second = struct.unpack_from(">HH", data, 0)
        assert first == (3 << 12) | 640 == 0x3280
        assert second == (3 << 12) | 480

    def test_oversize_rejected(self):
        fb = FrameBuffer.filled(1, 1, (0, 0, 0, 255))
        big = FrameBuffer(1, 4096, np.zeros((4096, 1, 4), dtype=np.uint8))
        with pytest.raises(CodecError, match="exceed"):
            sv1_encode_keyframe(big)
        del fb

    def test_bad_block_size(self):
        fb = FrameBuffer.filled(16, 16, (0, 0, 0, 255))
        for bad in (8, 40, 272):
            with pytest.raises(CodecError, match="block size"):
                sv1_encode_keyframe(fb, block=bad)


class TestInter:
    def test_unchanged_frame_is_all_zero_blocks(self):
        rng = np.random.default_rng(0)
        fb = random_frame(rng, 100, 60)
        data = sv1_encode_inter(fb, fb, block=32)
        pos = 4
        count = 0
        while pos < len(data):
            (length,) = struct.unpack_from(">H", data, pos)
            assert length == 0
            pos += 2 + length
            count += 1
        assert count == 4 * 2  # ceil(100/32) x ceil(60/32)

    def test_single_pixel_change_touches_one_block(self):
        rng = np.random.default_rng(1)
        prev = random_frame(rng, 128, 128)
        cur = prev.copy()
        cur.pixels[5, 5, 0] ^= 0xFF
        data = sv1_encode_inter(prev, cur, block=64)
        lengths = []
        pos = 4
        while pos < len(data):
            (length,) = struct.unpack_from(">H", data, pos)
            lengths.append(length)
            pos += 2 + length
        assert sum(1 for n in lengths if n > 0) == 1
        # bottom-left traversal: pixel (5,5) is in the TOP-left block,
        # which is walked last among the left column
        assert lengths[-2] > 0 or lengths[2] > 0  # top row of blocks
        assert np.array_equal(sv1_decode(data, prev).pixels, cur.pixels)

    def test_zero_block_without_prev_rejected(self):
        rng = np.random.default_rng(2)
        fb = random_frame(rng, 20, 20)
        data = sv1_encode_inter(fb, fb)
        with pytest.raises(CodecError, match="no previous frame"):
            sv1_decode(data)

    def test_dimension_mismatch_rejected(self):
        rng = np.random.default_rng(3)
        a = random_frame(rng, 20, 20)
        b = random_frame(rng, 24, 20)
        with pytest.raises(CodecError, match="size changed"):
            sv1_encode_inter(a, b)
        data = sv1_encode_inter(a, a)
        with pytest.raises(CodecError, match="previous frame is"):
            sv1_decode(data, b)


class TestDecodeErrors:
    def test_truncated_final_block(self):
        rng = np.random.default_rng(4)
        fb = random_frame(rng, 33, 17)
        data = sv1_encode_keyframe(fb, block=16)
        with pytest.raises(CodecError, match="short payload"):
            sv1_decode(data[:-3])

    def test_trailing_garbage(self):
        rng = np.random.default_rng(5)
        fb = random_frame(rng, 16, 16)
        data = sv1_encode_keyframe(fb, block=16)
        with pytest.raises(CodecError, match="trailing"):
            sv1_decode(data + b"\x00")

    def test_inflate_failure(self):
        fb = FrameBuffer.filled(16, 16, (0, 0, 0, 255))
        data = bytearray(sv1_encode_keyframe(fb, block=16))
        data[8] ^= 0xFF
        with pytest.raises(CodecError):
            sv1_decode(bytes(data))


class TestRoundTrip:
    def test_keyframe_roundtrip_80x48(self):
        rng = np.random.default_rng(6)
        fb = random_frame(rng, 80, 48)
        assert np.array_equal(sv1_decode(sv1_encode_keyframe(fb)).pixels, fb.pixels)

    @settings(max_examples=40, deadline=None)
    @given(
        w=st.integers(1, 150),
        h=st.integers(1, 150),
        block=st.sampled_from([16, 32, 64, 128]),
        seed=st.integers(0, 2**31),
    )
    def test_keyframe_and_inter_roundtrip(self, w, h, block, seed):
        rng = np.random.default_rng(seed)
        prev = random_frame(rng, w, h)
        cur = prev.copy()
        # mutate a random rectangle so inter frames have partial changes
        x0 = int(rng.integers(0, w))
        y0 = int(rng.integers(0, h))
        cur.pixels[y0:, x0:, :3] ^= 0x5A
        key = sv1_encode_keyframe(prev, block)
        assert np.array_equal(sv1_decode(key).pixels, prev.pixels)
        inter = sv1_encode_inter(prev, cur, block)
        assert np.array_equal(sv1_decode(inter, prev).pixels, cur.pixels)

    def test_alpha_discarded(self):
        # codec carries 24-bit color; alpha comes back as 255
        px = np.zeros((4, 4, 4), dtype=np.uint8)
        px[:, :, 3] = 77
        fb = FrameBuffer(4, 4, px)
        out = sv1_decode(sv1_encode_keyframe(fb, block=16))
        assert (out.pixels[:, :, 3] == 255).all()
