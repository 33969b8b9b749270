"""
Error Types
Exception hierarchy shared by every backend module
"""
from typing import Any, List, Optional, Tuple


class ExposureControlError(Exception):
    """Base class for all backend errors"""


class ImageError(ExposureControlError):
    """Invalid image or image too small for an operation"""


class PnmParseError(ImageError):
    """Malformed PGM/PPM file"""

    def __init__(self, field: str, message: str, path: Optional[str] = None):
        self.field = field
        self.path = path
        where = f"{path}: " if path else ""
        super().__init__(f"{where}{field}: {message}")


class MetricError(ExposureControlError):
    """Invalid metric configuration or input"""


class ConfigError(ExposureControlError):
    """Invalid run configuration"""


class ManifestError(ExposureControlError):
    """Invalid or incomplete sweep manifest"""

    def __init__(self, message: str, missing: Optional[List[Tuple[float, float]]] = None):
        self.missing = missing or []
        if self.missing:
            listed = ", ".join(f"({e:g} ms, {g:g} dB)" for e, g in self.missing)
            message = f"{message}: missing {listed}"
        super().__init__(message)


class DomainError(ExposureControlError):
    """Query outside the domain of a metric surface"""


class CameraError(ExposureControlError):
    """Frame capture failed"""

    def __init__(self, message: str, trace: Any = None):
        self.trace = trace
        super().__init__(message)
