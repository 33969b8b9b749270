"""
Metric Models Module
Configuration and result types for the noise-aware quality metric
"""
import math
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Tuple

from backend.utils.errors import MetricError

NOISE_CHANNEL_MODES = ('all', 'green', 'gray')


@dataclass(frozen=True)
class MetricConfig:
    """Parameters of the fused metric f(I)"""

    gamma: float = 0.06
    lambda_: float = 1e3
    n_cells: int = 100
    p: float = 0.1
    tau_l: float = 15.0
    tau_h: float = 235.0
    k_g: float = 2.0
    k_e: float = 0.125
    alpha: float = 0.4
    beta: float = 0.4
    s_floor: float = 1e-4
    sigma_max: float = 25.0
    noise_channels: str = 'all'

    # `lambda` is a keyword; the text format uses the plain name
    TEXT_KEYS = {'lambda': 'lambda_'}

    def __post_init__(self):
        is_valid, error = validate_metric_config(self)
        if not is_valid:
            raise MetricError(error)

    @property
    def grid_side(self) -> int:
        return math.isqrt(self.n_cells)

    def with_overrides(self, **overrides: Any) -> "MetricConfig":
        """Copy with some fields replaced (keys may use 'lambda')"""
        renamed = {self.TEXT_KEYS.get(k, k): v for k, v in overrides.items() if v is not None}
        return replace(self, **renamed)

    def to_dict(self) -> Dict[str, Any]:
        inverse = {v: k for k, v in self.TEXT_KEYS.items()}
        return {inverse.get(f.name, f.name): getattr(self, f.name) for f in fields(self)}

    def to_text(self) -> str:
        """Serialize as flat key=value lines"""
        lines = [f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}"
                 for key, value in self.to_dict().items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MetricConfig":
        """Parse flat key=value lines; '#' starts a comment"""
        values: Dict[str, Any] = {}
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise MetricError(f"line {number}: expected key=value")
            key, raw = (part.strip() for part in line.split('=', 1))
            values[key] = raw
        return cls.from_dict(values)

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> "MetricConfig":
        """Build from string or typed values, rejecting unknown keys"""
        types = {f.name: f.type for f in fields(cls)}
        kwargs: Dict[str, Any] = {}
        for key, raw in values.items():
            name = cls.TEXT_KEYS.get(key, key)
            if name not in types:
                raise MetricError(f"unknown metric key: {key}")
            kwargs[name] = _coerce(name, raw, types[name])
        return cls(**kwargs)


def _coerce(name: str, raw: Any, type_: Any) -> Any:
    type_name = getattr(type_, '__name__', str(type_))
    try:
        if type_name == 'int':
            as_float = float(raw)
            if not as_float.is_integer():
                raise ValueError(raw)
            return int(as_float)
        if type_name == 'float':
            return float(raw)
        return str(raw)
    except (TypeError, ValueError):
        raise MetricError(f"{name}: invalid value {raw!r}") from None


def validate_metric_config(cfg: MetricConfig) -> Tuple[bool, str]:
    """
    Check the MetricConfig invariants

    Returns:
        (is_valid, error_message)
    """
    if not 0.0 <= cfg.gamma < 1.0:
        return False, f"gamma must be in [0, 1), got {cfg.gamma}"
    if not cfg.lambda_ > 0:
        return False, f"lambda must be positive, got {cfg.lambda_}"
    side = math.isqrt(cfg.n_cells) if cfg.n_cells >= 0 else 0
    if cfg.n_cells < 4 or side * side != cfg.n_cells:
        return False, f"n_cells must be a perfect square >= 4, got {cfg.n_cells}"
    if not 0.0 < cfg.p < 1.0:
        return False, f"p must be in (0, 1), got {cfg.p}"
    if not 0.0 <= cfg.tau_l < cfg.tau_h <= 255.0:
        return False, f"need 0 <= tau_l < tau_h <= 255, got {cfg.tau_l}, {cfg.tau_h}"
    if not 0.0 <= cfg.alpha <= 1.0:
        return False, f"alpha must be in [0, 1], got {cfg.alpha}"
    if not cfg.beta >= 0.0:
        return False, f"beta must be >= 0, got {cfg.beta}"
    if not cfg.s_floor > 0.0:
        return False, f"s_floor must be positive, got {cfg.s_floor}"
    if not cfg.sigma_max >= 0.0:
        return False, f"sigma_max must be >= 0, got {cfg.sigma_max}"
    if cfg.noise_channels not in NOISE_CHANNEL_MODES:
        return False, f"noise_channels must be one of {NOISE_CHANNEL_MODES}, got {cfg.noise_channels!r}"
    return True, ""


@dataclass(frozen=True)
class QualityBreakdown:
    """Per-term values of the fused metric for one image"""

    l_gradient: float
    l_entropy: float
    sigma_noise: float
    fused: float
    noise_estimable: bool = True

    def as_row(self) -> Dict[str, Any]:
        return {
            'l_gradient': self.l_gradient,
            'l_entropy': self.l_entropy,
            'sigma_noise': self.sigma_noise,
            'fused': self.fused,
        }

    def term(self, name: str) -> float:
        """Value of one term by name: gradient, entropy, noise or fused"""
        lookup = {
            'gradient': self.l_gradient,
            'entropy': self.l_entropy,
            'noise': self.sigma_noise,
            'fused': self.fused,
        }
        if name not in lookup:
            raise MetricError(f"unknown term: {name}")
        return lookup[name]
