"""
Synthetic Camera Module
Linear radiometric sensor with gain-scaled Gaussian read noise
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from backend.camera.base import ImageCamera
from backend.camera.replay import MANIFEST_COLUMNS, SweepManifest
from backend.controller.models import ExposureParams, SweepProfile
from backend.imaging.image import Image
from backend.imaging.pnm import write_pnm
from backend.utils.errors import ConfigError

logger = logging.getLogger(__name__)

_UINT64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True, eq=False)
class Scene:
    """Per-pixel non-negative radiance in relative linear units"""

    radiance: np.ndarray

    def __post_init__(self):
        radiance = np.array(self.radiance, dtype=np.float64)
        if radiance.ndim not in (2, 3):
            raise ConfigError(f"radiance must be 2-D or 3-D, got {radiance.ndim}-D")
        if not np.all(np.isfinite(radiance)) or np.any(radiance < 0):
            raise ConfigError("radiance must be finite and non-negative")
        radiance.setflags(write=False)
        object.__setattr__(self, 'radiance', radiance)

    @property
    def width(self) -> int:
        return int(self.radiance.shape[1])

    @property
    def height(self) -> int:
        return int(self.radiance.shape[0])

    @classmethod
    def flat(cls, width: int, height: int, level: float = 0.5) -> "Scene":
        """Uniform radiance"""
        return cls(np.full((height, width), float(level)))

    @classmethod
    def synthetic(cls, width: int = 320, height: int = 240, seed: int = 0, block: int = 8) -> "Scene":
        """
        Textured test scene

        Blocks of random reflectance under a left-to-right illumination ramp,
        so every grid cell carries edges and every block interior is flat.
        """
        rng = np.random.default_rng(seed)
        rows = -(-height // block)
        cols = -(-width // block)
        reflectance = rng.uniform(0.35, 1.0, size=(rows, cols))
        tiles = np.kron(reflectance, np.ones((block, block)))[:height, :width]
        ramp = 0.3 + 0.7 * np.linspace(0.0, 1.0, width)
        return cls(tiles * ramp[None, :])


@dataclass(frozen=True)
class SyntheticCameraModel:
    """Sensor constants; noise is N(0, (read_noise_sigma * A**noise_gain_exponent)^2)"""

    full_well: float = 60.0
    read_noise_sigma: float = 1.0
    noise_gain_exponent: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if not self.full_well > 0:
            raise ConfigError(f"full_well must be positive, got {self.full_well}")
        if self.read_noise_sigma < 0:
            raise ConfigError(f"read_noise_sigma must be >= 0, got {self.read_noise_sigma}")


def _capture_rng(model: SyntheticCameraModel, params: ExposureParams) -> np.random.Generator:
    bits = np.array([params.exposure_ms, params.gain_db], dtype=np.float64).view(np.uint64)
    entropy = [model.rng_seed & _UINT64, int(bits[0]), int(bits[1])]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def expose(scene: Scene, model: SyntheticCameraModel, params: ExposureParams) -> np.ndarray:
    """Noise-free, unclipped pixel values before quantization"""
    return 255.0 * scene.radiance * params.exposure_ms * params.linear_gain / model.full_well


def synthetic_capture(scene: Scene, model: SyntheticCameraModel, params: ExposureParams) -> Image:
    """
    Render one 8-bit frame

    Bit-identical for identical (scene, model, params).
    """
    if not (np.isfinite(params.exposure_ms) and np.isfinite(params.gain_db)) or params.exposure_ms <= 0:
        raise ConfigError(f"invalid capture parameters {params}")
    signal = expose(scene, model, params)
    noise_std = model.read_noise_sigma * params.linear_gain ** model.noise_gain_exponent
    if noise_std > 0:
        signal = signal + _capture_rng(model, params).normal(0.0, noise_std, size=signal.shape)
    return Image.from_float(signal)


class SyntheticCamera(ImageCamera):
    """ImageCamera over a fixed scene and sensor model"""

    def __init__(self, scene: Scene, model: SyntheticCameraModel):
        self.scene = scene
        self.model = model

    def capture(self, params: ExposureParams) -> Image:
        return synthetic_capture(self.scene, self.model, params)


def make_sweep(
    scene: Scene,
    model: SyntheticCameraModel,
    profile: SweepProfile,
    out_dir: Union[str, Path],
    manifest_name: str = 'manifest.csv',
) -> SweepManifest:
    """
    Render a complete exposure/gain sweep to PGM/PPM files plus a manifest

    Returns:
        The loaded manifest
    """
    out_dir = Path(out_dir)
    frames_dir = out_dir / 'frames'
    rows = []
    for exposure in profile.exposures():
        for gain in profile.gains():
            params = ExposureParams(float(exposure), float(gain))
            frame = synthetic_capture(scene, model, params)
            suffix = 'pgm' if frame.channels == 1 else 'ppm'
            name = f"e{exposure:09.4f}_g{gain:06.2f}.{suffix}"
            write_pnm(frame, frames_dir / name)
            rows.append({'exposure_ms': float(exposure), 'gain_db': float(gain), 'path': f"frames/{name}"})
    manifest_path = out_dir / manifest_name
    pd.DataFrame(rows, columns=MANIFEST_COLUMNS).to_csv(manifest_path, index=False, lineterminator='\n')
    logger.info("wrote %d frames and %s", len(rows), manifest_path)
    return SweepManifest.load(manifest_path)
