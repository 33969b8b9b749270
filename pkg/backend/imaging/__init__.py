"""
Imaging Package
Image container, filters and PNM I/O
"""
from backend.imaging.image import (
    Image,
    GradientField,
    to_grayscale,
    gradient_magnitude,
    convolve3x3,
)
from backend.imaging.pnm import read_pnm, write_pnm

__all__ = [
    'Image',
    'GradientField',
    'to_grayscale',
    'gradient_magnitude',
    'convolve3x3',
    'read_pnm',
    'write_pnm'
]
