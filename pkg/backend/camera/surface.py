"""
Metric Surface Module
Quality scores over a sweep grid, densified by Catmull-Rom interpolation
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
import pandas as pd

from backend.camera.base import Camera, Measurement
from backend.camera.replay import SweepManifest
from backend.controller.models import ExposureParams
from backend.imaging.image import Image
from backend.imaging.pnm import read_pnm
from backend.metric.models import MetricConfig, QualityBreakdown
from backend.metric.quality import evaluate
from backend.utils.errors import DomainError, ImageError, ManifestError, MetricError

logger = logging.getLogger(__name__)

TERMS = ('gradient', 'entropy', 'noise', 'fused')
MEAN_INTENSITY = 'mean_intensity'
BORDER_MODES = ('replicate', 'linear')

SCORE_COLUMNS = ['exposure_ms', 'gain_db', 'l_gradient', 'l_entropy', 'sigma_noise', 'fused']

KNOT_SNAP = 1e-9


def _score_point(manifest: SweepManifest, i: int, j: int, cfg: MetricConfig) -> Tuple[QualityBreakdown, float]:
    exposure, gain = manifest.exposures[i], manifest.gains[j]
    path = manifest.image_path(i, j)
    try:
        frame: Image = read_pnm(path)
        return evaluate(frame, cfg), frame.mean_intensity()
    except (OSError, ImageError) as e:
        raise ManifestError(f"grid point ({exposure:g} ms, {gain:g} dB): {e}") from e
    except MetricError as e:
        raise MetricError(f"grid point ({exposure:g} ms, {gain:g} dB): {e}") from e


def score_manifest(manifest: SweepManifest, cfg: MetricConfig, workers: int = 1) -> pd.DataFrame:
    """
    Evaluate every frame of a sweep

    Returns:
        One row per grid point, exposure-major, with the breakdown columns
        and the frame's mean intensity
    """
    points = manifest.grid_points()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda p: _score_point(manifest, p[0], p[1], cfg), points))
    else:
        results = [_score_point(manifest, i, j, cfg) for i, j, _ in points]

    rows = []
    for (_, _, params), (breakdown, mean) in zip(points, results):
        row = {'exposure_ms': params.exposure_ms, 'gain_db': params.gain_db}
        row.update(breakdown.as_row())
        row[MEAN_INTENSITY] = mean
        rows.append(row)
    logger.info("scored %d frames", len(rows))
    return pd.DataFrame(rows, columns=SCORE_COLUMNS + [MEAN_INTENSITY])


def _catmull_rom_weights(s: np.ndarray) -> np.ndarray:
    s2 = s * s
    s3 = s2 * s
    return 0.5 * np.stack([
        -s3 + 2.0 * s2 - s,
        3.0 * s3 - 5.0 * s2 + 2.0,
        -3.0 * s3 + 4.0 * s2 + s,
        s3 - s2,
    ], axis=-1)


def axis_weights(positions: np.ndarray, count: int, border: str = 'replicate') -> np.ndarray:
    """
    Interpolation matrix for one axis

    Args:
        positions: fractional knot indices in [0, count - 1]
        count: number of knots
        border: 'replicate' copies the end knots as outer control points;
            'linear' extrapolates them (reproduces linear data everywhere)

    Returns:
        (len(positions), count) matrix W so that values = W @ knots
    """
    positions = np.asarray(positions, dtype=np.float64)
    weights = np.zeros((positions.size, count))
    if count == 1:
        weights[:, 0] = 1.0
        return weights
    snapped = np.round(positions)
    positions = np.where(np.abs(positions - snapped) < KNOT_SNAP, snapped, positions)
    cell = np.clip(np.floor(positions).astype(np.intp), 0, count - 2)
    local = _catmull_rom_weights(positions - cell)
    rows = np.arange(positions.size)
    for k in range(4):
        index = cell + k - 1
        w = local[:, k]
        if border == 'linear':
            low = index < 0
            high = index > count - 1
            inner = ~(low | high)
            np.add.at(weights, (rows[inner], index[inner]), w[inner])
            # ghost knots: p[-1] = 2 p[0] - p[1], p[n] = 2 p[n-1] - p[n-2]
            np.add.at(weights, (rows[low], np.zeros(low.sum(), dtype=np.intp)), 2.0 * w[low])
            np.add.at(weights, (rows[low], np.ones(low.sum(), dtype=np.intp)), -w[low])
            np.add.at(weights, (rows[high], np.full(high.sum(), count - 1)), 2.0 * w[high])
            np.add.at(weights, (rows[high], np.full(high.sum(), count - 2)), -w[high])
        else:
            np.add.at(weights, (rows, np.clip(index, 0, count - 1)), w)
    return weights


@dataclass(frozen=True, eq=False)
class MetricSurface:
    """
    Raw score grids indexed [exposure, gain], plus interpolation settings

    ``grids`` holds 'fused', optionally the other terms, and the frame mean
    intensity used to seed the controller.
    """

    exposures: np.ndarray
    gains: np.ndarray
    grids: Dict[str, np.ndarray]
    exposure_step_ms: float = 0.001
    gain_step_db: float = 0.1
    border: str = 'replicate'
    metric: Optional[MetricConfig] = field(default=None, repr=False)

    def __post_init__(self):
        shape = (len(self.exposures), len(self.gains))
        for name, grid in self.grids.items():
            if grid.shape != shape:
                raise ManifestError(f"{name} grid has shape {grid.shape}, expected {shape}")
        if 'fused' not in self.grids:
            raise ManifestError("surface needs a fused grid")
        if self.border not in BORDER_MODES:
            raise DomainError(f"border must be one of {BORDER_MODES}, got {self.border!r}")

    @classmethod
    def from_grid(
        cls,
        exposures: Iterable[float],
        gains: Iterable[float],
        scores: np.ndarray,
        mean_intensity: Optional[np.ndarray] = None,
        **settings,
    ) -> "MetricSurface":
        """Surface over explicit scores (e.g. an analytic objective)"""
        exposures = np.asarray(list(exposures), dtype=np.float64)
        gains = np.asarray(list(gains), dtype=np.float64)
        scores = np.asarray(scores, dtype=np.float64)
        if mean_intensity is None:
            mean_intensity = np.full(scores.shape, 127.5)
        grids = {'fused': scores, MEAN_INTENSITY: np.asarray(mean_intensity, dtype=np.float64)}
        return cls(exposures, gains, grids, **settings)

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.exposures), len(self.gains)

    def grid(self, term: str = 'fused') -> np.ndarray:
        if term not in self.grids:
            raise MetricError(f"surface has no {term!r} grid")
        return self.grids[term]

    def contains(self, params: ExposureParams) -> bool:
        e, g = params.exposure_ms, params.gain_db
        return (self.exposures[0] - KNOT_SNAP <= e <= self.exposures[-1] + KNOT_SNAP
                and self.gains[0] - KNOT_SNAP <= g <= self.gains[-1] + KNOT_SNAP)

    def interpolate(self, exposures: np.ndarray, gains: np.ndarray, term: str = 'fused') -> np.ndarray:
        """Dense (len(exposures), len(gains)) grid of interpolated values"""
        exposures = np.atleast_1d(np.asarray(exposures, dtype=np.float64))
        gains = np.atleast_1d(np.asarray(gains, dtype=np.float64))
        u = np.interp(exposures, self.exposures, np.arange(len(self.exposures)))
        v = np.interp(gains, self.gains, np.arange(len(self.gains)))
        return self.interpolate_index(u, v, term)

    def interpolate_index(self, u: np.ndarray, v: np.ndarray, term: str = 'fused') -> np.ndarray:
        """Interpolate at fractional knot indices"""
        w_e = axis_weights(u, len(self.exposures), self.border)
        w_g = axis_weights(v, len(self.gains), self.border)
        return w_e @ self.grid(term) @ w_g.T

    def score(self, params: ExposureParams, term: str = 'fused') -> float:
        return surface_score(self, params, term)

    def raw_frame(self, term: str = 'fused') -> pd.DataFrame:
        """Raw knots as (exposure_ms, gain_db, value), exposure-major"""
        e, g = np.meshgrid(self.exposures, self.gains, indexing='ij')
        return pd.DataFrame({
            'exposure_ms': e.ravel(),
            'gain_db': g.ravel(),
            'value': self.grid(term).ravel(),
        })

    def dense_frame(
        self,
        term: str = 'fused',
        exposure_step_ms: Optional[float] = None,
        gain_step_db: Optional[float] = None,
    ) -> pd.DataFrame:
        """
        Interpolated grid as (exposure_ms, gain_db, value)

        Each raw cell is split into round(raw_step / step) parts, so every
        raw knot is also a dense knot.
        """
        exposure_step_ms = exposure_step_ms or self.exposure_step_ms
        gain_step_db = gain_step_db or self.gain_step_db
        u = _subdivide(self.exposures, exposure_step_ms)
        v = _subdivide(self.gains, gain_step_db)
        values = self.interpolate_index(u, v, term)
        e = np.interp(u, np.arange(len(self.exposures)), self.exposures)
        g = np.interp(v, np.arange(len(self.gains)), self.gains)
        ee, gg = np.meshgrid(e, g, indexing='ij')
        return pd.DataFrame({'exposure_ms': ee.ravel(), 'gain_db': gg.ravel(), 'value': values.ravel()})

    def dense_shape(
        self, exposure_step_ms: Optional[float] = None, gain_step_db: Optional[float] = None
    ) -> Tuple[int, int]:
        """(exposure samples, gain samples) of dense_frame for the same steps"""
        u = _subdivide(self.exposures, exposure_step_ms or self.exposure_step_ms)
        v = _subdivide(self.gains, gain_step_db or self.gain_step_db)
        return len(u), len(v)

    def argmax(self, term: str = 'fused') -> Tuple[ExposureParams, float]:
        """Best raw knot; ties go to lower exposure, then lower gain"""
        grid = self.grid(term)
        i, j = np.unravel_index(int(np.argmax(grid)), grid.shape)
        return ExposureParams(float(self.exposures[i]), float(self.gains[j])), float(grid[i, j])


def _subdivide(knots: np.ndarray, step: float) -> np.ndarray:
    if len(knots) == 1:
        return np.zeros(1)
    parts = max(1, int(round((knots[1] - knots[0]) / step)))
    return np.arange((len(knots) - 1) * parts + 1) / parts


def build_surface(
    manifest: SweepManifest,
    cfg: MetricConfig,
    workers: int = 1,
    **settings,
) -> MetricSurface:
    """
    Evaluate the metric on every frame of a complete sweep

    Raises:
        ManifestError / MetricError: with the failing grid coordinates
    """
    scores = score_manifest(manifest, cfg, workers)
    shape = manifest.shape
    columns = {
        'gradient': 'l_gradient',
        'entropy': 'l_entropy',
        'noise': 'sigma_noise',
        'fused': 'fused',
        MEAN_INTENSITY: MEAN_INTENSITY,
    }
    grids = {name: scores[column].to_numpy(dtype=np.float64).reshape(shape) for name, column in columns.items()}
    return MetricSurface(manifest.exposures.copy(), manifest.gains.copy(), grids, metric=cfg, **settings)


def surface_score(surface: MetricSurface, params: ExposureParams, term: str = 'fused') -> float:
    """
    Bicubic (Catmull-Rom) score at ``params``; exact at raw knots

    Raises:
        DomainError: params outside the raw grid hull
    """
    if not surface.contains(params):
        raise DomainError(
            f"{params} outside surface hull "
            f"[{surface.exposures[0]:g}, {surface.exposures[-1]:g}] ms x "
            f"[{surface.gains[0]:g}, {surface.gains[-1]:g}] dB"
        )
    e = min(max(params.exposure_ms, surface.exposures[0]), surface.exposures[-1])
    g = min(max(params.gain_db, surface.gains[0]), surface.gains[-1])
    return float(surface.interpolate(np.array([e]), np.array([g]), term)[0, 0])


class SurfaceCamera(Camera):
    """Controller frame source that reads scores off a metric surface"""

    def __init__(self, surface: MetricSurface, term: str = 'fused'):
        self.surface = surface
        self.term = term

    def measure(self, params: ExposureParams, cfg: MetricConfig) -> Measurement:
        score = surface_score(self.surface, params, self.term)
        if MEAN_INTENSITY in self.surface.grids:
            mean = surface_score(self.surface, params, MEAN_INTENSITY)
        else:
            mean = 127.5
        return Measurement(params=params, score=score, mean_intensity=float(np.clip(mean, 0.0, 255.0)))
