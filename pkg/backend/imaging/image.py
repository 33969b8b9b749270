"""
Image Module
Raster container and the low-level filters the quality metric is built on
"""
import logging
import math
from dataclasses import dataclass
from typing import Union

import cv2
import numpy as np

from backend.utils.errors import ImageError

logger = logging.getLogger(__name__)

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)

GRADIENT_NORMALIZER = 255.0 * math.sqrt(2.0)

_CENTRAL_DIFF_X = np.array([[-0.5, 0.0, 0.5]], dtype=np.float64)
_CENTRAL_DIFF_Y = _CENTRAL_DIFF_X.T.copy()

MIN_SIDE = 3


@dataclass(frozen=True, eq=False)
class Image:
    """8-bit raster, 1 or 3 interleaved channels, row-major.

    ``pixels`` has shape (height, width) for grayscale and
    (height, width, 3) for RGB. The array is made read-only on construction.
    """

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.dtype != np.uint8:
            raise ImageError(f"pixels must be uint8, got {pixels.dtype}")
        if pixels.ndim == 3 and pixels.shape[2] == 1:
            pixels = pixels[:, :, 0]
        if pixels.ndim == 3 and pixels.shape[2] != 3:
            raise ImageError(f"channels must be 1 or 3, got {pixels.shape[2]}")
        if pixels.ndim not in (2, 3):
            raise ImageError(f"pixels must be 2-D or 3-D, got {pixels.ndim}-D")
        height, width = pixels.shape[:2]
        if width < MIN_SIDE or height < MIN_SIDE:
            raise ImageError(
                f"image must be at least {MIN_SIDE}x{MIN_SIDE}, got {width}x{height}"
            )
        pixels = np.ascontiguousarray(pixels)
        if pixels is self.pixels:
            pixels = pixels.copy()
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @classmethod
    def from_bytes(cls, data: bytes, width: int, height: int, channels: int) -> "Image":
        """Build an image from row-major, channel-interleaved samples"""
        expected = width * height * channels
        if len(data) != expected:
            raise ImageError(f"expected {expected} samples, got {len(data)}")
        shape = (height, width) if channels == 1 else (height, width, channels)
        return cls(np.frombuffer(data, dtype=np.uint8).reshape(shape))

    @classmethod
    def from_float(cls, values: np.ndarray) -> "Image":
        """Round and clip real-valued samples into an 8-bit image"""
        return cls(np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else int(self.pixels.shape[2])

    @property
    def data(self) -> bytes:
        return self.pixels.tobytes()

    def channel(self, index: int) -> np.ndarray:
        """2-D view of one channel"""
        if self.channels == 1:
            if index != 0:
                raise ImageError(f"grayscale image has no channel {index}")
            return self.pixels
        return self.pixels[:, :, index]

    def mean_intensity(self) -> float:
        """Mean of the grayscale image, in [0, 255]"""
        return float(to_grayscale(self).pixels.mean())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class GradientField:
    """Per-pixel gradient magnitudes in [0, 1]"""

    magnitudes: np.ndarray

    @property
    def width(self) -> int:
        return int(self.magnitudes.shape[1])

    @property
    def height(self) -> int:
        return int(self.magnitudes.shape[0])


def _require_gray(img: Image, op: str) -> np.ndarray:
    if img.channels != 1:
        raise ImageError(f"{op} needs a single-channel image, got {img.channels} channels")
    return img.pixels


def to_grayscale(img: Image) -> Image:
    """
    Convert to a single channel with BT.601 weights

    Grayscale input is returned unchanged.
    """
    if img.channels == 1:
        return img
    rgb = img.pixels.astype(np.float64)
    luma = rgb[:, :, 0] * LUMA_WEIGHTS[0] + rgb[:, :, 1] * LUMA_WEIGHTS[1] + rgb[:, :, 2] * LUMA_WEIGHTS[2]
    return Image(np.floor(luma + 0.5).astype(np.uint8))


def gradient_components(plane: np.ndarray) -> "tuple[np.ndarray, np.ndarray]":
    """Central differences with replicated borders"""
    src = np.asarray(plane, dtype=np.float64)
    gx = cv2.filter2D(src, cv2.CV_64F, _CENTRAL_DIFF_X, borderType=cv2.BORDER_REPLICATE)
    gy = cv2.filter2D(src, cv2.CV_64F, _CENTRAL_DIFF_Y, borderType=cv2.BORDER_REPLICATE)
    return gx, gy


def plane_gradient_magnitude(plane: np.ndarray) -> np.ndarray:
    """Normalized gradient magnitude of a single 2-D plane"""
    gx, gy = gradient_components(plane)
    magnitude = np.sqrt(gx * gx + gy * gy) / GRADIENT_NORMALIZER
    return np.clip(magnitude, 0.0, 1.0)


def gradient_magnitude(img: Image) -> GradientField:
    """
    Gradient magnitude field of a grayscale image

    Returns sqrt(gx^2 + gy^2) / (255 * sqrt(2)) per pixel, where gx and gy
    are central differences over replicated borders.
    """
    return GradientField(plane_gradient_magnitude(_require_gray(img, "gradient_magnitude")))


def convolve3x3(img: Union[Image, np.ndarray], kernel: np.ndarray) -> np.ndarray:
    """
    Valid-region 3x3 convolution

    Args:
        img: single-channel Image, or a 2-D real array
        kernel: 3x3 real kernel

    Returns:
        (h - 2, w - 2) float64 array of responses over the interior pixels
    """
    if isinstance(img, Image):
        plane = _require_gray(img, "convolve3x3")
    else:
        plane = np.asarray(img)
        if plane.ndim != 2:
            raise ImageError(f"convolve3x3 needs a 2-D plane, got {plane.ndim}-D")
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.shape != (3, 3):
        raise ImageError(f"kernel must be 3x3, got {kernel.shape}")
    height, width = plane.shape
    if width < MIN_SIDE or height < MIN_SIDE:
        raise ImageError(f"image must be at least 3x3 for convolution, got {width}x{height}")

    # filter2D correlates, so flip for a true convolution
    flipped = cv2.flip(kernel, -1)
    response = cv2.filter2D(
        np.asarray(plane, dtype=np.float64), cv2.CV_64F, flipped, borderType=cv2.BORDER_REPLICATE
    )
    return response[1:-1, 1:-1]
