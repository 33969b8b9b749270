import numpy as np
import pytest

from backend.imaging.image import Image
from backend.imaging.pnm import decode_pnm, encode_pnm, read_pnm, write_pnm
from backend.utils.errors import PnmParseError


class TestDecode:
    def test_smallest_p5(self):
        img = decode_pnm(b"P5 4 3 255\n" + bytes(range(12)))
        assert (img.width, img.height, img.channels) == (4, 3, 1)
        assert img.pixels.ravel().tolist() == list(range(12))

    def test_comments_are_skipped(self):
        raw = b"P5\n# written by hand\n4 3\n# maxval next\n255\n" + bytes(12)
        assert decode_pnm(raw).width == 4

    def test_p6_interleaved(self):
        payload = bytes([10, 20, 30] * 9)
        img = decode_pnm(b"P6\n3 3\n255\n" + payload)
        assert img.channels == 3
        assert img.pixels[1, 1].tolist() == [10, 20, 30]

    def test_sixteen_bit_rejected(self):
        with pytest.raises(PnmParseError, match="unsupported maxval") as info:
            decode_pnm(b"P6\n3 3\n65535\n" + bytes(54))
        assert info.value.field == "maxval"

    @pytest.mark.parametrize("raw, field", [
        (b"P2 4 3 255\n" + bytes(12), "magic"),
        (b"P5 x 3 255\n" + bytes(12), "width"),
        (b"P5 4 0 255\n", "height"),
        (b"P5 4 3 255\n" + bytes(5), "payload"),
        (b"P5 4 3", "maxval"),
    ])
    def test_errors_name_the_field(self, raw, field):
        with pytest.raises(PnmParseError) as info:
            decode_pnm(raw, "frame.pgm")
        assert info.value.field == field
        assert "frame.pgm" in str(info.value)


class TestFiles:
    def test_round_trip_gray_and_rgb(self, tmp_path, rng):
        for channels in (1, 3):
            shape = (7, 5) if channels == 1 else (7, 5, 3)
            img = Image(rng.integers(0, 256, size=shape, dtype=np.uint8))
            path = tmp_path / f"img{channels}.pnm"
            write_pnm(img, path)
            assert read_pnm(path) == img
            assert path.read_bytes() == encode_pnm(img)

    def test_header_layout(self):
        img = Image(np.zeros((3, 4), dtype=np.uint8))
        assert encode_pnm(img) == b"P5\n4 3\n255\n" + bytes(12)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_pnm(tmp_path / "nope.pgm")
