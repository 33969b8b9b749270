"""
Shared pytest fixtures
Small deterministic images, scenes and sweeps
"""
from pathlib import Path
from typing import Callable, Dict, Tuple

import numpy as np
import pandas as pd
import pytest

from backend.camera.replay import SweepManifest
from backend.camera.synthetic import Scene, SyntheticCameraModel, make_sweep
from backend.controller.models import ParamBounds, SweepProfile
from backend.imaging.image import Image
from backend.imaging.pnm import write_pnm

TINY_PROFILE = SweepProfile('tiny', ParamBounds(10.0, 40.0, 0.0, 4.0), 10.0, 2.0)


def checker(width: int, height: int, block: int = 4, low: int = 60, high: int = 190) -> Image:
    """Two-level checkerboard with square blocks"""
    yy, xx = np.mgrid[0:height, 0:width]
    board = ((xx // block) + (yy // block)) % 2
    return Image(np.where(board == 1, high, low).astype(np.uint8))


def constant(width: int, height: int, value: int, channels: int = 1) -> Image:
    shape = (height, width) if channels == 1 else (height, width, channels)
    return Image(np.full(shape, value, dtype=np.uint8))


def write_manifest(root: Path, frames: Dict[Tuple[float, float], Image]) -> Path:
    """Write frames as PGM/PPM plus manifest.csv; returns the manifest path"""
    rows = []
    for index, ((exposure, gain), img) in enumerate(sorted(frames.items())):
        suffix = 'pgm' if img.channels == 1 else 'ppm'
        name = f"frame_{index:03d}.{suffix}"
        write_pnm(img, root / name)
        rows.append({'exposure_ms': exposure, 'gain_db': gain, 'path': name})
    path = root / 'manifest.csv'
    pd.DataFrame(rows).to_csv(path, index=False, lineterminator='\n')
    return path


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture
def textured() -> Image:
    return checker(64, 64)


@pytest.fixture
def scene() -> Scene:
    return Scene.synthetic(96, 72, seed=3)


@pytest.fixture(scope="session")
def tiny_sweep(tmp_path_factory) -> SweepManifest:
    """4 x 3 synthetic sweep over a small textured scene"""
    root = tmp_path_factory.mktemp("tiny_sweep")
    model = SyntheticCameraModel(full_well=20.0, read_noise_sigma=2.0, rng_seed=1)
    return make_sweep(Scene.synthetic(64, 48, seed=5), model, TINY_PROFILE, root)


@pytest.fixture
def manifest_writer(tmp_path) -> Callable[[Dict[Tuple[float, float], Image]], Path]:
    return lambda frames: write_manifest(tmp_path, frames)
