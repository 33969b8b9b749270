"""
Noise Evaluation Module
Bias / spread / MSE of the noise estimator against injected Gaussian noise
"""
import logging
from typing import List, Sequence

import numpy as np
import pandas as pd

from backend.imaging.image import Image
from backend.metric.models import MetricConfig
from backend.metric.quality import DEFAULT_CONFIG, noise_sigma
from backend.utils.errors import ConfigError

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ['sigma', 's', 'b', 'mse', 'excluded']


def flat_field(width: int = 512, height: int = 512, level: int = 128, channels: int = 1) -> Image:
    """Constant image"""
    shape = (height, width) if channels == 1 else (height, width, channels)
    return Image(np.full(shape, level, dtype=np.uint8))


def add_noise(img: Image, sigma: float, rng: np.random.Generator) -> Image:
    """Zero-mean Gaussian noise, rounded and clipped to 8 bits"""
    noisy = img.pixels.astype(np.float64)
    if sigma > 0:
        noisy = noisy + rng.normal(0.0, sigma, size=noisy.shape)
    return Image.from_float(noisy)


def noise_eval(
    images: Sequence[Image],
    sigmas: Sequence[float],
    trials: int,
    seed: int,
    cfg: MetricConfig = DEFAULT_CONFIG,
) -> pd.DataFrame:
    """
    Estimator error decomposition per injected sigma

    For each sigma, every image gets ``trials`` independent noise draws.
    b is the mean error, s the (population) standard deviation of the
    estimates, and mse = b^2 + s^2. Unestimable draws are skipped and
    counted in ``excluded``.

    Returns:
        DataFrame with columns sigma, s, b, mse, excluded
    """
    if len(images) < 1:
        raise ConfigError("noise evaluation needs at least one image")
    if trials < 2:
        raise ConfigError(f"trials must be >= 2, got {trials}")
    if any(s < 0 for s in sigmas):
        raise ConfigError("sigmas must be non-negative")

    rng = np.random.default_rng(seed)
    rows = []
    for sigma in sigmas:
        estimates: List[float] = []
        excluded = 0
        for img in images:
            for _ in range(trials):
                estimate = noise_sigma(add_noise(img, sigma, rng), cfg)
                if estimate is None:
                    excluded += 1
                else:
                    estimates.append(estimate)
        if estimates:
            values = np.asarray(estimates)
            bias = float(values.mean() - sigma)
            spread = float(values.std())
        else:
            bias = spread = float('nan')
        rows.append({
            'sigma': float(sigma),
            's': spread,
            'b': bias,
            'mse': bias * bias + spread * spread,
            'excluded': excluded,
        })
        logger.info("sigma %g: b=%.4g s=%.4g excluded=%d", sigma, bias, spread, excluded)
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)
