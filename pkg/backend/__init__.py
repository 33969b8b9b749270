"""
Backend Package
Noise-aware auto-exposure components
"""

__version__ = "1.0.0"

from backend.metric import MetricConfig, QualityBreakdown, evaluate
from backend.controller import ExposureParams, ParamBounds, run
from backend.camera import SyntheticCamera, ReplayCamera, SurfaceCamera, MetricSurface
from backend.db.database import Database

__all__ = [
    'MetricConfig',
    'QualityBreakdown',
    'evaluate',
    'ExposureParams',
    'ParamBounds',
    'run',
    'SyntheticCamera',
    'ReplayCamera',
    'SurfaceCamera',
    'MetricSurface',
    'Database'
]
