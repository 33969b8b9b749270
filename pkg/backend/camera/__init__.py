"""
Camera Package
Virtual frame sources for closed-loop testing
"""
from backend.camera.base import Camera, ImageCamera, Measurement
from backend.camera.replay import SweepManifest, ReplayCamera, replay_capture
from backend.camera.synthetic import (
    Scene,
    SyntheticCameraModel,
    SyntheticCamera,
    synthetic_capture,
    make_sweep,
)
from backend.camera.surface import (
    MetricSurface,
    SurfaceCamera,
    build_surface,
    score_manifest,
    surface_score,
)
from backend.camera.noise_eval import noise_eval, flat_field, add_noise

__all__ = [
    'Camera',
    'ImageCamera',
    'Measurement',
    'SweepManifest',
    'ReplayCamera',
    'replay_capture',
    'Scene',
    'SyntheticCameraModel',
    'SyntheticCamera',
    'synthetic_capture',
    'make_sweep',
    'MetricSurface',
    'SurfaceCamera',
    'build_surface',
    'score_manifest',
    'surface_score',
    'noise_eval',
    'flat_field',
    'add_noise'
]
