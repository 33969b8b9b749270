"""
Configuration Module
Flat key=value run configuration with section prefixes
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Union

from backend.camera.surface import BORDER_MODES
from backend.controller.models import (
    ExposureParams,
    NMCoefficients,
    ParamBounds,
    StoppingRule,
    get_profile,
)
from backend.metric.models import MetricConfig
from backend.utils.errors import ConfigError, ExposureControlError

logger = logging.getLogger(__name__)

CAMERA_KINDS = ('synthetic', 'replay', 'surface')


@dataclass(frozen=True)
class ControllerSettings:
    epsilon: float = 1.7
    kappa: float = 0.5
    nm: NMCoefficients = field(default_factory=NMCoefficients)
    stop: StoppingRule = field(default_factory=StoppingRule)
    profile: str = 'indoor'
    bounds: ParamBounds = field(default_factory=lambda: get_profile('indoor').bounds)
    start: Optional[ExposureParams] = None


@dataclass(frozen=True)
class CameraSettings:
    kind: str = 'synthetic'
    manifest: Optional[Path] = None
    full_well: float = 60.0
    read_noise_sigma: float = 1.0
    noise_gain_exponent: float = 1.0
    width: int = 320
    height: int = 240
    scene_seed: int = 0


@dataclass(frozen=True)
class SurfaceSettings:
    exposure_step_ms: float = 0.001
    gain_step_db: float = 0.1
    border: str = 'replicate'


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI command needs besides its positional inputs"""

    metric: MetricConfig = field(default_factory=MetricConfig)
    controller: ControllerSettings = field(default_factory=ControllerSettings)
    camera: CameraSettings = field(default_factory=CameraSettings)
    surface: SurfaceSettings = field(default_factory=SurfaceSettings)
    out_dir: Path = Path('out')
    db_path: Optional[Path] = None
    seed: int = 0
    workers: int = 1


# key -> parser; metric.* keys are delegated to MetricConfig
_CONTROLLER_KEYS: Dict[str, Callable[[str], Any]] = {
    'epsilon': float, 'kappa': float,
    'rho': float, 'chi': float, 'psi': float, 'sigma': float,
    'diameter_tol': float, 'min_improvement': float, 'patience': int, 'max_iterations': int,
    'profile': str, 'min_ms': float, 'max_ms': float, 'min_db': float, 'max_db': float,
    'start_exposure_ms': float, 'start_gain_db': float,
}
_CAMERA_KEYS: Dict[str, Callable[[str], Any]] = {
    'kind': str, 'manifest': str, 'full_well': float, 'read_noise_sigma': float,
    'noise_gain_exponent': float, 'width': int, 'height': int, 'scene_seed': int,
}
_SURFACE_KEYS: Dict[str, Callable[[str], Any]] = {
    'exposure_step_ms': float, 'gain_step_db': float, 'border': str,
}
_OUTPUT_KEYS: Dict[str, Callable[[str], Any]] = {'dir': str, 'db': str}
_TOP_KEYS: Dict[str, Callable[[str], Any]] = {'seed': int, 'workers': int}


def parse_config_text(text: str) -> Dict[str, str]:
    """
    Parse key=value lines; '#' starts a comment, blank lines are skipped

    Raises:
        ConfigError: malformed line or repeated key
    """
    values: Dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"line {number}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigError(f"line {number}: empty key")
        if key in values:
            raise ConfigError(f"line {number}: duplicate key {key}")
        values[key] = value
    return values


def _typed(section: Dict[str, str], schema: Dict[str, Callable[[str], Any]], prefix: str) -> Dict[str, Any]:
    typed: Dict[str, Any] = {}
    for key, raw in section.items():
        if key not in schema:
            raise ConfigError(f"unknown config key: {prefix}.{key}" if prefix else f"unknown config key: {key}")
        try:
            typed[key] = schema[key](raw)
        except ValueError:
            raise ConfigError(f"{prefix}.{key}: invalid value {raw!r}") from None
    return typed


def _split_sections(values: Dict[str, Any]) -> Dict[str, Dict[str, Any]]:
    sections: Dict[str, Dict[str, Any]] = {
        'metric': {}, 'controller': {}, 'camera': {}, 'surface': {}, 'output': {}, '': {},
    }
    for key, value in values.items():
        prefix, _, name = key.rpartition('.')
        if prefix not in sections:
            raise ConfigError(f"unknown config key: {key}")
        sections[prefix][name] = value
    return sections


def build_run_config(values: Dict[str, Any], base_dir: Union[str, Path] = '.') -> RunConfig:
    """
    Build a RunConfig from flat keys

    Args:
        values: e.g. {'metric.alpha': '0.4', 'camera.kind': 'replay'}
        base_dir: directory that relative paths are resolved against

    Raises:
        ConfigError: unknown key, bad value, or missing referenced file
    """
    base_dir = Path(base_dir)
    sections = _split_sections({k: str(v) for k, v in values.items() if v is not None})

    try:
        metric = MetricConfig.from_dict(sections['metric'])
    except ExposureControlError as e:
        raise ConfigError(f"metric: {e}") from e

    ctrl = _typed(sections['controller'], _CONTROLLER_KEYS, 'controller')
    profile_name = ctrl.get('profile', 'indoor')
    profile = get_profile(profile_name)
    bounds = ParamBounds(
        min_ms=ctrl.get('min_ms', profile.bounds.min_ms),
        max_ms=ctrl.get('max_ms', profile.bounds.max_ms),
        min_db=ctrl.get('min_db', profile.bounds.min_db),
        max_db=ctrl.get('max_db', profile.bounds.max_db),
    )
    start = None
    if 'start_exposure_ms' in ctrl or 'start_gain_db' in ctrl:
        center = bounds.center()
        start = ExposureParams(
            ctrl.get('start_exposure_ms', center.exposure_ms),
            ctrl.get('start_gain_db', center.gain_db),
        )
    defaults = StoppingRule()
    controller = ControllerSettings(
        epsilon=ctrl.get('epsilon', 1.7),
        kappa=ctrl.get('kappa', 0.5),
        nm=NMCoefficients(**{k: ctrl[k] for k in ('rho', 'chi', 'psi', 'sigma') if k in ctrl}),
        stop=StoppingRule(
            diameter_tol=ctrl.get('diameter_tol', defaults.diameter_tol),
            min_improvement=ctrl.get('min_improvement', defaults.min_improvement),
            patience=ctrl.get('patience', defaults.patience),
            max_iterations=ctrl.get('max_iterations', defaults.max_iterations),
        ),
        profile=profile_name,
        bounds=bounds,
        start=start,
    )
    if controller.epsilon <= 0:
        raise ConfigError(f"controller.epsilon must be positive, got {controller.epsilon}")

    cam = _typed(sections['camera'], _CAMERA_KEYS, 'camera')
    kind = cam.pop('kind', 'synthetic')
    if kind not in CAMERA_KINDS:
        raise ConfigError(f"camera.kind must be one of {CAMERA_KINDS}, got {kind!r}")
    manifest = None
    if 'manifest' in cam:
        manifest = Path(cam.pop('manifest'))
        if not manifest.is_absolute():
            manifest = base_dir / manifest
        if not manifest.exists():
            raise ConfigError(f"camera.manifest: file not found: {manifest}")
    if kind in ('replay', 'surface') and manifest is None:
        raise ConfigError(f"camera.kind={kind} needs camera.manifest")
    camera = CameraSettings(kind=kind, manifest=manifest, **cam)

    surface = SurfaceSettings(**_typed(sections['surface'], _SURFACE_KEYS, 'surface'))
    if surface.border not in BORDER_MODES:
        raise ConfigError(f"surface.border must be one of {BORDER_MODES}, got {surface.border!r}")
    if not (surface.exposure_step_ms > 0 and surface.gain_step_db > 0):
        raise ConfigError("surface steps must be positive")
    output = _typed(sections['output'], _OUTPUT_KEYS, 'output')
    top = _typed(sections[''], _TOP_KEYS, '')

    return RunConfig(
        metric=metric,
        controller=controller,
        camera=camera,
        surface=surface,
        out_dir=Path(output.get('dir', 'out')),
        db_path=Path(output['db']) if 'db' in output else None,
        seed=top.get('seed', 0),
        workers=max(1, top.get('workers', 1)),
    )


def load_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Read a config file (optional) and apply overrides on top

    Raises:
        ConfigError: unreadable file, unknown key or invalid value
    """
    values: Dict[str, Any] = {}
    base_dir = Path('.')
    if path is not None:
        path = Path(path)
        try:
            values = parse_config_text(path.read_text(encoding='utf-8'))
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        base_dir = path.parent
        logger.debug("loaded %d keys from %s", len(values), path)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return build_run_config(values, base_dir)
