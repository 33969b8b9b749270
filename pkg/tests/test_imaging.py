import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from backend.imaging.image import Image, convolve3x3, gradient_magnitude, to_grayscale
from backend.metric.quality import NOISE_KERNEL
from backend.utils.errors import ImageError


class TestImage:
    def test_pixels_are_copied_and_frozen(self):
        raw = np.full((4, 5), 7, dtype=np.uint8)
        img = Image(raw)
        raw[0, 0] = 99
        assert img.pixels[0, 0] == 7
        assert not img.pixels.flags.writeable
        assert (img.width, img.height, img.channels) == (5, 4, 1)

    @pytest.mark.parametrize("shape", [(2, 2), (3, 2), (2, 7)])
    def test_too_small(self, shape):
        with pytest.raises(ImageError):
            Image(np.zeros(shape, dtype=np.uint8))

    def test_rejects_non_uint8_and_two_channels(self):
        with pytest.raises(ImageError):
            Image(np.zeros((4, 4), dtype=np.float64))
        with pytest.raises(ImageError):
            Image(np.zeros((4, 4, 2), dtype=np.uint8))

    def test_from_bytes_checks_length(self):
        img = Image.from_bytes(bytes(range(12)), 4, 3, 1)
        assert img.pixels[2, 3] == 11
        with pytest.raises(ImageError):
            Image.from_bytes(bytes(11), 4, 3, 1)

    def test_from_float_rounds_half_up_and_clips(self):
        img = Image.from_float(np.array([[-3.0, 0.5, 1.49], [254.5, 300.0, 2.5], [0, 0, 0]]))
        assert img.pixels[0].tolist() == [0, 1, 1]
        assert img.pixels[1].tolist() == [255, 255, 3]


class TestToGrayscale:
    def test_equal_channels(self):
        img = Image(np.full((4, 4, 3), 100, dtype=np.uint8))
        gray = to_grayscale(img)
        assert gray.channels == 1
        assert np.all(gray.pixels == 100)

    def test_pure_red(self):
        pixels = np.zeros((3, 3, 3), dtype=np.uint8)
        pixels[:, :, 0] = 255
        assert np.all(to_grayscale(Image(pixels)).pixels == 76)

    def test_grayscale_is_identity(self):
        img = Image(np.arange(16, dtype=np.uint8).reshape(4, 4))
        assert to_grayscale(img) == img


class TestGradientMagnitude:
    def test_constant(self):
        field = gradient_magnitude(Image(np.full((6, 7), 200, dtype=np.uint8)))
        assert np.all(field.magnitudes == 0.0)

    def test_vertical_step_edge(self):
        pixels = np.zeros((5, 8), dtype=np.uint8)
        pixels[:, 4:] = 255
        mag = gradient_magnitude(Image(pixels)).magnitudes
        expected = 127.5 / (255.0 * math.sqrt(2.0))
        assert expected == pytest.approx(0.3536, abs=1e-4)
        assert_allclose(mag[:, 3], expected, rtol=1e-12)
        assert_allclose(mag[:, 4], expected, rtol=1e-12)
        assert np.all(mag[:, :3] == 0.0)
        assert np.all(mag[:, 5:] == 0.0)

    def test_one_pixel_checkerboard_interior_is_flat(self):
        yy, xx = np.mgrid[0:9, 0:9]
        pixels = np.where((xx + yy) % 2 == 0, 0, 255).astype(np.uint8)
        mag = gradient_magnitude(Image(pixels)).magnitudes
        assert np.all(mag[1:-1, 1:-1] == 0.0)

    def test_transpose_swaps_axes(self, rng):
        pixels = rng.integers(0, 256, size=(11, 17), dtype=np.uint8)
        mag = gradient_magnitude(Image(pixels)).magnitudes
        mag_t = gradient_magnitude(Image(pixels.T.copy())).magnitudes
        assert_allclose(mag_t, mag.T, atol=1e-12)

    def test_range_fuzz(self, rng):
        for _ in range(50):
            h, w = rng.integers(3, 40, size=2)
            mag = gradient_magnitude(Image(rng.integers(0, 256, size=(h, w), dtype=np.uint8))).magnitudes
            assert mag.shape == (h, w)
            assert mag.min() >= 0.0 and mag.max() <= 1.0

    def test_rgb_rejected(self):
        with pytest.raises(ImageError):
            gradient_magnitude(Image(np.zeros((4, 4, 3), dtype=np.uint8)))


class TestConvolve3x3:
    def test_constant_is_annihilated(self):
        out = convolve3x3(Image(np.full((6, 9), 77, dtype=np.uint8)), NOISE_KERNEL)
        assert out.shape == (4, 7)
        assert np.all(out == 0.0)

    def test_ramp_is_annihilated(self):
        ramp = np.tile(np.arange(12, dtype=np.uint8), (6, 1))
        assert np.all(convolve3x3(Image(ramp), NOISE_KERNEL) == 0.0)

    def test_single_bright_pixel(self):
        pixels = np.zeros((5, 5), dtype=np.uint8)
        pixels[2, 2] = 255
        out = convolve3x3(Image(pixels), NOISE_KERNEL)
        assert out[1, 1] == 1020.0
        assert out[0, 0] == 255.0
        assert out[0, 1] == -510.0

    def test_is_a_true_convolution(self):
        kernel = np.arange(9, dtype=np.float64).reshape(3, 3)
        pixels = np.zeros((5, 5))
        pixels[2, 2] = 1.0
        out = convolve3x3(pixels, kernel)
        # an impulse reproduces the kernel unflipped
        assert_allclose(out, kernel)

    def test_linearity(self, rng):
        a = rng.normal(size=(8, 10))
        b = rng.normal(size=(8, 10))
        kernel = rng.normal(size=(3, 3))
        assert_allclose(
            convolve3x3(2.0 * a - 3.0 * b, kernel),
            2.0 * convolve3x3(a, kernel) - 3.0 * convolve3x3(b, kernel),
            atol=1e-12,
        )

    def test_shape_errors(self):
        with pytest.raises(ImageError):
            convolve3x3(np.zeros((2, 5)), NOISE_KERNEL)
        with pytest.raises(ImageError):
            convolve3x3(np.zeros((5, 5)), np.ones((2, 2)))
