"""
Camera Base Module
Frame-source interface shared by the controller and the virtual cameras
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

from backend.controller.models import ExposureParams
from backend.imaging.image import Image
from backend.metric.models import MetricConfig, QualityBreakdown
from backend.metric.quality import evaluate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Measurement:
    """What the controller learns from one capture"""

    params: ExposureParams
    score: float
    mean_intensity: float
    breakdown: Optional[QualityBreakdown] = None


class Camera(ABC):
    """Anything the controller can point at a parameter setting"""

    @abstractmethod
    def measure(self, params: ExposureParams, cfg: MetricConfig) -> Measurement:
        """Capture at ``params`` and score the result"""


class ImageCamera(Camera):
    """Camera that produces real frames, scored with the fused metric"""

    @abstractmethod
    def capture(self, params: ExposureParams) -> Image:
        """Return one 8-bit frame taken at ``params``"""

    def measure(self, params: ExposureParams, cfg: MetricConfig) -> Measurement:
        frame = self.capture(params)
        breakdown = evaluate(frame, cfg)
        return Measurement(
            params=params,
            score=breakdown.fused,
            mean_intensity=frame.mean_intensity(),
            breakdown=breakdown,
        )
