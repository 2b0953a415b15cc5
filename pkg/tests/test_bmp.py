import struct

import numpy as np

from scenecast.bmp import decode_bmp24, downscale_nearest, encode_bmp24, preview_message


class TestBmp:
    def test_magic_and_roundtrip(self):
        rng = np.random.default_rng(2)
        px = rng.integers(0, 256, size=(7, 5, 4), dtype=np.uint8)
        data = encode_bmp24(px)
        assert data[:2] == b"BM"
        back = decode_bmp24(data)
        assert np.array_equal(back, px[:, :, :3])

    def test_row_padding(self):
        # width 3 -> 9 bytes per row, padded to 12
        px = np.zeros((2, 3, 4), dtype=np.uint8)
        data = encode_bmp24(px)
        body_size = struct.unpack_from("<I", data, 34)[0]
        assert body_size == 2 * 12

    def test_solid_red_roundtrip(self):
        px = np.zeros((4, 4, 4), dtype=np.uint8)
        px[:, :, 0] = 255
        px[:, :, 3] = 255
        back = decode_bmp24(encode_bmp24(px))
        assert (back[:, :, 0] == 255).all() and (back[:, :, 1:] == 0).all()


class TestDownscale:
    def test_small_frames_pass_through(self):
        px = np.zeros((10, 100, 4), dtype=np.uint8)
        assert downscale_nearest(px, 480) is px

    def test_1280_to_480(self):
        px = np.zeros((720, 1280, 4), dtype=np.uint8)
        px[:, 640:, 0] = 255  # right half red
        small = downscale_nearest(px, 480)
        assert small.shape == (270, 480, 4)
        assert small[0, 100, 0] == 0
        assert small[0, 400, 0] == 255

    def test_preview_message_layout(self):
        px = np.zeros((4, 4, 4), dtype=np.uint8)
        msg = preview_message(123, px)
        assert struct.unpack(">Q", msg[:8])[0] == 123
        assert msg[8:10] == b"BM"
