"""
Metric Package
Noise-aware image quality metric
"""
from backend.metric.models import MetricConfig, QualityBreakdown, validate_metric_config
from backend.metric.quality import (
    map_gradient,
    gradient_score,
    entropy_score,
    noise_sigma,
    evaluate,
    time_terms,
)

__all__ = [
    'MetricConfig',
    'QualityBreakdown',
    'validate_metric_config',
    'map_gradient',
    'gradient_score',
    'entropy_score',
    'noise_sigma',
    'evaluate',
    'time_terms'
]
