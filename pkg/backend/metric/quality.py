"""
Quality Metric Module
Gradient, entropy and noise sub-metrics and their fusion into f(I)
"""
import logging
import math
import time
from typing import Dict, Optional, Union

import numpy as np

from backend.imaging.image import (
    GradientField,
    Image,
    convolve3x3,
    plane_gradient_magnitude,
    to_grayscale,
)
from backend.metric.models import MetricConfig, QualityBreakdown
from backend.utils.errors import MetricError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = MetricConfig()

# Laplacian-difference noise kernel; annihilates constants and planes
NOISE_KERNEL = np.array([
    [1.0, -2.0, 1.0],
    [-2.0, 4.0, -2.0],
    [1.0, -2.0, 1.0],
])

# sqrt(pi/2) turns mean |N(0, s^2)| into s; 1/6 is the kernel's response std
NOISE_SCALE = math.sqrt(math.pi / 2.0) / 6.0


def map_gradient(g: Union[float, np.ndarray], cfg: MetricConfig = DEFAULT_CONFIG) -> Union[float, np.ndarray]:
    """
    Gradient information mapping

    log(lambda * (g - gamma) + 1) / N_g for g >= gamma, else 0, with
    N_g = log(lambda * (1 - gamma) + 1) so that map(1) == 1.
    Works on scalars and arrays.
    """
    norm = math.log1p(cfg.lambda_ * (1.0 - cfg.gamma))
    values = np.asarray(g, dtype=np.float64)
    shifted = np.maximum(values - cfg.gamma, 0.0)
    mapped = np.where(values >= cfg.gamma, np.log1p(cfg.lambda_ * shifted) / norm, 0.0)
    if np.ndim(g) == 0:
        return float(mapped)
    return mapped


def cell_edges(length: int, cells: int) -> np.ndarray:
    """Start index of each cell; boundaries at round(k * length / cells)"""
    return np.floor(np.arange(cells) * length / cells + 0.5).astype(np.intp)


def cell_sums(values: np.ndarray, side: int) -> np.ndarray:
    """Sum of a 2-D array over a side x side grid of cells"""
    height, width = values.shape
    rows = np.add.reduceat(values, cell_edges(height, side), axis=0)
    return np.add.reduceat(rows, cell_edges(width, side), axis=1)


def gradient_score(field: GradientField, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """
    Grid-level gradient metric L_gradient

    Sums mapped gradient per cell (G_j) and rewards both the amount and the
    uniformity of information: K_g * E(G) / (s(G) + s_floor).
    """
    side = cfg.grid_side
    if field.width < side or field.height < side:
        raise MetricError(
            f"gradient field {field.width}x{field.height} is smaller than the {side}x{side} grid"
        )
    mapped = map_gradient(field.magnitudes, cfg)
    sums = cell_sums(mapped, side)
    mean = float(sums.mean())
    spread = float(sums.std())
    return cfg.k_g * mean / (spread + cfg.s_floor)


def entropy_score(img: Image, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """K_e times the Shannon entropy (bits) of the 256-bin histogram"""
    if img.channels != 1:
        raise MetricError(f"entropy_score needs a single-channel image, got {img.channels}")
    counts = np.bincount(img.pixels.ravel(), minlength=256)
    probs = counts[counts > 0] / img.pixels.size
    entropy = float(-(probs * np.log2(probs)).sum())
    return cfg.k_e * max(entropy, 0.0)


def _plane_noise(plane: np.ndarray, cfg: MetricConfig) -> Optional[float]:
    """Noise estimate on one channel; None when no pixel qualifies"""
    magnitudes = plane_gradient_magnitude(plane)
    delta = np.quantile(magnitudes, cfg.p)
    homogeneous = magnitudes <= delta
    unsaturated = (plane >= cfg.tau_l) & (plane <= cfg.tau_h)
    valid = (homogeneous & unsaturated)[1:-1, 1:-1]
    n_valid = int(np.count_nonzero(valid))
    if n_valid == 0:
        return None
    response = np.abs(convolve3x3(plane, NOISE_KERNEL))
    return NOISE_SCALE * float(response[valid].sum()) / n_valid


def noise_sigma(img: Image, cfg: MetricConfig = DEFAULT_CONFIG) -> Optional[float]:
    """
    Noise standard deviation in 8-bit intensity units

    Estimated on unsaturated homogeneous pixels of each channel and averaged
    across channels (see MetricConfig.noise_channels for the single-channel
    variants).

    Returns:
        sigma, or None when no channel has a usable pixel ("unestimable")
    """
    if img.channels == 1 or cfg.noise_channels == 'gray':
        planes = [to_grayscale(img).pixels]
    elif cfg.noise_channels == 'green':
        planes = [img.channel(1)]
    else:
        planes = [img.channel(c) for c in range(img.channels)]

    estimates = [s for s in (_plane_noise(p, cfg) for p in planes) if s is not None]
    if not estimates:
        return None
    return float(sum(estimates) / len(estimates))


def fuse(l_gradient: float, l_entropy: float, sigma: float, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """alpha * L_gradient + (1 - alpha) * L_entropy - beta * sigma"""
    return cfg.alpha * l_gradient + (1.0 - cfg.alpha) * l_entropy - cfg.beta * sigma


def evaluate(img: Image, cfg: MetricConfig = DEFAULT_CONFIG) -> QualityBreakdown:
    """
    Full noise-aware quality assessment of one image

    Unestimable noise is replaced by cfg.sigma_max and flagged on the
    breakdown.
    """
    gray = to_grayscale(img)
    l_gradient = gradient_score(GradientField(plane_gradient_magnitude(gray.pixels)), cfg)
    l_entropy = entropy_score(gray, cfg)
    sigma = noise_sigma(img, cfg)
    estimable = sigma is not None
    if sigma is None:
        logger.debug("noise unestimable; substituting sigma_max=%g", cfg.sigma_max)
        sigma = cfg.sigma_max
    return QualityBreakdown(
        l_gradient=l_gradient,
        l_entropy=l_entropy,
        sigma_noise=sigma,
        fused=fuse(l_gradient, l_entropy, sigma, cfg),
        noise_estimable=estimable,
    )


def time_terms(img: Image, cfg: MetricConfig = DEFAULT_CONFIG, repeats: int = 100) -> Dict[str, float]:
    """
    Mean wall-clock milliseconds per metric term

    Returns:
        {'gradient', 'entropy', 'noise', 'total'} in milliseconds
    """
    if repeats < 1:
        raise MetricError(f"repeats must be >= 1, got {repeats}")
    totals = {'gradient': 0.0, 'entropy': 0.0, 'noise': 0.0, 'total': 0.0}
    for _ in range(repeats):
        start = time.perf_counter()
        gray = to_grayscale(img)
        gradient_score(GradientField(plane_gradient_magnitude(gray.pixels)), cfg)
        t_gradient = time.perf_counter()
        entropy_score(gray, cfg)
        t_entropy = time.perf_counter()
        noise_sigma(img, cfg)
        t_noise = time.perf_counter()
        totals['gradient'] += t_gradient - start
        totals['entropy'] += t_entropy - t_gradient
        totals['noise'] += t_noise - t_entropy
        totals['total'] += t_noise - start
    return {name: 1000.0 * value / repeats for name, value in totals.items()}
