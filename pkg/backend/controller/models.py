"""
Controller Models Module
Exposure parameters, search bounds and Nelder-Mead state
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from backend.utils.errors import ConfigError


@dataclass(frozen=True, order=True)
class ExposureParams:
    """Camera decision variable: exposure time and analog gain"""

    exposure_ms: float
    gain_db: float

    def as_array(self) -> np.ndarray:
        return np.array([self.exposure_ms, self.gain_db], dtype=np.float64)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "ExposureParams":
        return cls(float(values[0]), float(values[1]))

    @property
    def linear_gain(self) -> float:
        return 10.0 ** (self.gain_db / 20.0)


@dataclass(frozen=True)
class ParamBounds:
    """Box constraints on exposure (ms) and gain (dB)"""

    min_ms: float
    max_ms: float
    min_db: float
    max_db: float
    # smallest step a camera can resolve, used to separate coincident vertices
    exposure_quantum_ms: float = 0.001
    gain_quantum_db: float = 0.1

    def __post_init__(self):
        if not self.min_ms > 0:
            raise ConfigError(f"min_ms must be positive, got {self.min_ms}")
        if not self.min_ms < self.max_ms:
            raise ConfigError(f"need min_ms < max_ms, got {self.min_ms}, {self.max_ms}")
        if not self.min_db < self.max_db:
            raise ConfigError(f"need min_db < max_db, got {self.min_db}, {self.max_db}")

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.min_ms, self.min_db])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.max_ms, self.max_db])

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def quantum(self) -> np.ndarray:
        return np.array([self.exposure_quantum_ms, self.gain_quantum_db])

    def clamp(self, params: ExposureParams) -> ExposureParams:
        return ExposureParams.from_array(np.clip(params.as_array(), self.lower, self.upper))

    def contains(self, params: ExposureParams) -> bool:
        values = params.as_array()
        return bool(np.all(values >= self.lower) and np.all(values <= self.upper))

    def center(self) -> ExposureParams:
        return ExposureParams.from_array((self.lower + self.upper) / 2.0)


@dataclass(frozen=True)
class SweepProfile:
    """Bounds plus the capture grid used for sweeps"""

    name: str
    bounds: ParamBounds
    exposure_step_ms: float
    gain_step_db: float

    def exposures(self) -> np.ndarray:
        count = int(round((self.bounds.max_ms - self.bounds.min_ms) / self.exposure_step_ms)) + 1
        return np.round(self.bounds.min_ms + self.exposure_step_ms * np.arange(count), 6)

    def gains(self) -> np.ndarray:
        count = int(round((self.bounds.max_db - self.bounds.min_db) / self.gain_step_db)) + 1
        return np.round(self.bounds.min_db + self.gain_step_db * np.arange(count), 6)


# Capture ranges of the reference outdoor / indoor sweeps (550 frames each)
PROFILES: Dict[str, SweepProfile] = {
    'outdoor': SweepProfile('outdoor', ParamBounds(0.1, 7.45, 0.0, 20.0), 0.15, 2.0),
    'indoor': SweepProfile('indoor', ParamBounds(4.0, 67.0, 0.0, 24.0), 3.0, 1.0),
}


def get_profile(name: str) -> SweepProfile:
    if name not in PROFILES:
        raise ConfigError(f"unknown bounds profile {name!r}; choose from {sorted(PROFILES)}")
    return PROFILES[name]


@dataclass(frozen=True)
class NMCoefficients:
    """Reflection, expansion, contraction and shrink coefficients"""

    rho: float = 1.0
    chi: float = 2.0
    psi: float = 0.5
    sigma: float = 0.5

    def __post_init__(self):
        if not (self.rho > 0 and self.chi > max(1.0, self.rho) and 0 < self.psi < 1 and 0 < self.sigma < 1):
            raise ConfigError(
                "need rho > 0, chi > max(1, rho), 0 < psi < 1, 0 < sigma < 1; "
                f"got {self.rho}, {self.chi}, {self.psi}, {self.sigma}"
            )


@dataclass(frozen=True)
class StoppingRule:
    """Convergence tests; the search stops when any of them fires"""

    diameter_tol: float = 0.01
    min_improvement: float = 1e-3
    patience: int = 5
    max_iterations: int = 50

    def __post_init__(self):
        if self.diameter_tol < 0 or self.min_improvement < 0:
            raise ConfigError("tolerances must be non-negative")
        if self.patience < 1 or self.max_iterations < 1:
            raise ConfigError("patience and max_iterations must be >= 1")


@dataclass
class Vertex:
    params: ExposureParams
    score: float = -math.inf


@dataclass
class Simplex:
    """Three vertices in (exposure, gain) space, ordered best first"""

    vertices: List[Vertex]

    def __post_init__(self):
        if len(self.vertices) != 3:
            raise ValueError(f"a 2-D simplex has 3 vertices, got {len(self.vertices)}")

    def order(self) -> None:
        """Sort best, second-worst, worst; ties keep insertion order"""
        self.vertices.sort(key=lambda v: -v.score)

    @property
    def best(self) -> Vertex:
        return self.vertices[0]

    @property
    def second(self) -> Vertex:
        return self.vertices[1]

    @property
    def worst(self) -> Vertex:
        return self.vertices[2]

    def points(self) -> np.ndarray:
        return np.array([v.params.as_array() for v in self.vertices])

    def diameter(self, bounds: Optional[ParamBounds] = None) -> float:
        """Largest pairwise vertex distance, per-axis normalized by the bounds span"""
        points = self.points()
        if bounds is not None:
            points = points / bounds.span
        diffs = points[:, None, :] - points[None, :, :]
        return float(np.sqrt((diffs ** 2).sum(axis=-1)).max())


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    op: str
    vertices: Tuple[Tuple[float, float, float], ...]
    frames: int


@dataclass(frozen=True)
class Capture:
    iteration: int
    params: ExposureParams
    score: float


@dataclass
class ControlTrace:
    """Append-only log of the search: one record per iteration plus every capture"""

    records: List[TraceRecord] = field(default_factory=list)
    captures: List[Capture] = field(default_factory=list)

    def append(self, iteration: int, op: str, simplex: Simplex, frames: int) -> None:
        if self.records and iteration <= self.records[-1].iteration:
            raise ValueError(f"iteration {iteration} does not follow {self.records[-1].iteration}")
        vertices = tuple((v.params.exposure_ms, v.params.gain_db, v.score) for v in simplex.vertices)
        self.records.append(TraceRecord(iteration, op, vertices, frames))

    def add_capture(self, iteration: int, params: ExposureParams, score: float) -> None:
        self.captures.append(Capture(iteration, params, score))

    @property
    def iterations(self) -> int:
        return self.records[-1].iteration if self.records else 0

    def best_scores(self) -> List[float]:
        return [r.vertices[0][2] for r in self.records]

    def to_frame(self) -> pd.DataFrame:
        """Tabular form: iteration, op, then exposure/gain/score per vertex"""
        rows = []
        for record in self.records:
            row: Dict[str, object] = {'iteration': record.iteration, 'op': record.op}
            for i, (exposure, gain, score) in enumerate(record.vertices):
                row[f'exposure_ms_{i}'] = exposure
                row[f'gain_db_{i}'] = gain
                row[f'score_{i}'] = score
            rows.append(row)
        columns = ['iteration', 'op'] + [
            f'{name}_{i}' for i in range(3) for name in ('exposure_ms', 'gain_db', 'score')
        ]
        return pd.DataFrame(rows, columns=columns)
