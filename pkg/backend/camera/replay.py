"""
Replay Camera Module
Sweep manifests and a camera that replays pre-captured frames
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
import pandas as pd

from backend.camera.base import ImageCamera
from backend.controller.models import ExposureParams
from backend.imaging.image import Image
from backend.imaging.pnm import read_pnm
from backend.utils.errors import ManifestError

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ['exposure_ms', 'gain_db', 'path']

STEP_TOLERANCE = 1e-6
# in units of one grid step
TIE_TOLERANCE = 1e-9


def _infer_step(values: np.ndarray, axis: str) -> float:
    """Uniform spacing of sorted axis values; nan for a single value"""
    if len(values) < 2:
        return float('nan')
    steps = np.diff(values)
    step = float(steps.mean())
    if np.any(np.abs(steps - step) > STEP_TOLERANCE * max(1.0, abs(step))):
        raise ManifestError(f"{axis} values are not evenly spaced: {values.tolist()}")
    return step


@dataclass(frozen=True, eq=False)
class SweepManifest:
    """Complete rectangular (exposure, gain) grid of frame files"""

    table: pd.DataFrame
    root: Path
    exposures: np.ndarray
    gains: np.ndarray
    exposure_step: float
    gain_step: float
    _paths: Dict[Tuple[int, int], Path] = field(repr=False)

    @classmethod
    def from_frame(cls, table: pd.DataFrame, root: Union[str, Path]) -> "SweepManifest":
        """
        Validate a manifest table

        Raises:
            ManifestError: bad header, duplicate pairs, uneven steps or
                missing grid combinations (listed)
        """
        root = Path(root)
        if list(table.columns) != MANIFEST_COLUMNS:
            raise ManifestError(f"manifest header must be {','.join(MANIFEST_COLUMNS)}, got {','.join(map(str, table.columns))}")
        if table.empty:
            raise ManifestError("manifest has no rows")
        try:
            table = table.astype({'exposure_ms': float, 'gain_db': float, 'path': str})
        except (TypeError, ValueError) as e:
            raise ManifestError(f"non-numeric exposure or gain: {e}") from e

        duplicated = table.duplicated(subset=['exposure_ms', 'gain_db'])
        if duplicated.any():
            first = table[duplicated].iloc[0]
            raise ManifestError(f"duplicate grid point ({first.exposure_ms:g} ms, {first.gain_db:g} dB)")

        exposures = np.sort(table['exposure_ms'].unique())
        gains = np.sort(table['gain_db'].unique())
        present = set(zip(table['exposure_ms'], table['gain_db']))
        missing: List[Tuple[float, float]] = [
            (float(e), float(g)) for e in exposures for g in gains if (e, g) not in present
        ]
        if missing:
            raise ManifestError("incomplete grid", missing=missing)
        if exposures[0] <= 0:
            raise ManifestError(f"exposure must be positive, got {exposures[0]:g}")

        e_index = {float(e): i for i, e in enumerate(exposures)}
        g_index = {float(g): j for j, g in enumerate(gains)}
        paths = {
            (e_index[float(row.exposure_ms)], g_index[float(row.gain_db)]): root / row.path
            for row in table.itertuples(index=False)
        }
        return cls(
            table=table.sort_values(['exposure_ms', 'gain_db'], kind='mergesort').reset_index(drop=True),
            root=root,
            exposures=exposures,
            gains=gains,
            exposure_step=_infer_step(exposures, 'exposure'),
            gain_step=_infer_step(gains, 'gain'),
            _paths=paths,
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SweepManifest":
        """Read a manifest CSV; paths are relative to its directory"""
        path = Path(path)
        try:
            table = pd.read_csv(path, dtype={'path': str})
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ManifestError(f"{path}: {e}") from e
        return cls.from_frame(table, path.parent)

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.exposures), len(self.gains)

    def image_path(self, exposure_index: int, gain_index: int) -> Path:
        return self._paths[(exposure_index, gain_index)]

    def grid_points(self) -> List[Tuple[int, int, ExposureParams]]:
        """Every (exposure index, gain index, params), exposure-major"""
        return [
            (i, j, ExposureParams(float(e), float(g)))
            for i, e in enumerate(self.exposures)
            for j, g in enumerate(self.gains)
        ]

    def nearest_index(self, params: ExposureParams) -> Tuple[int, int]:
        """Nearest grid point after clamping to the hull; ties go to the lower value"""
        return (
            _nearest(self.exposures, self.exposure_step, params.exposure_ms),
            _nearest(self.gains, self.gain_step, params.gain_db),
        )


def _nearest(values: np.ndarray, step: float, target: float) -> int:
    # the grid is rectangular and evenly spaced, so the nearest point is a
    # rounded step index per axis
    if len(values) == 1:
        return 0
    target = min(max(target, float(values[0])), float(values[-1]))
    position = (target - float(values[0])) / step
    # exact midpoints land just below .5 or just above it depending on float rounding
    index = math.ceil(position - 0.5 - TIE_TOLERANCE)
    return min(max(index, 0), len(values) - 1)


def replay_capture(manifest: SweepManifest, params: ExposureParams) -> Image:
    """
    Load the frame at the grid point nearest to ``params``

    Raises:
        OSError: the frame file is missing (message names the path)
    """
    i, j = manifest.nearest_index(params)
    return read_pnm(manifest.image_path(i, j))


class ReplayCamera(ImageCamera):
    """ImageCamera that snaps requests onto a sweep grid"""

    def __init__(self, manifest: SweepManifest):
        self.manifest = manifest
        self._cache: Dict[Tuple[int, int], Image] = {}

    def capture(self, params: ExposureParams) -> Image:
        key = self.manifest.nearest_index(params)
        if key not in self._cache:
            self._cache[key] = read_pnm(self.manifest.image_path(*key))
        return self._cache[key]
