"""
Main Command-Line Application
Noise-aware auto-exposure: score, sweep, control, surface and noise-eval
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import pandas as pd

# Add backend to path
sys.path.append(str(Path(__file__).parent))

from backend.camera.base import Camera
from backend.camera.noise_eval import noise_eval
from backend.camera.replay import ReplayCamera, SweepManifest
from backend.camera.surface import (
    SCORE_COLUMNS,
    MetricSurface,
    SurfaceCamera,
    build_surface,
    score_manifest,
)
from backend.camera.synthetic import Scene, SyntheticCamera, SyntheticCameraModel, make_sweep
from backend.controller.models import ParamBounds, get_profile
from backend.controller.nelder_mead import run
from backend.db.database import Database
from backend.imaging.pnm import read_pnm
from backend.metric.quality import evaluate, time_terms
from backend.utils.config import RunConfig, load_config
from backend.utils.errors import (
    CameraError,
    ConfigError,
    DomainError,
    ExposureControlError,
    ImageError,
    ManifestError,
    MetricError,
)
from backend.utils.helpers import (
    SURFACE_TERMS,
    format_timestamp,
    format_value,
    parse_float_list,
    to_csv_text,
    validate_sigmas,
    validate_terms,
    validate_trials,
)
from backend.utils.storage import FileStorage, validate_report_name

logger = logging.getLogger("app")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUNTIME = 3

PNM_SUFFIXES = ('.pgm', '.ppm', '.pnm')

# dense surface CSVs above this many rows per term get a warning
LARGE_DENSE_ROWS = 1_000_000

# CLI flag dest -> config key
OVERRIDE_KEYS = {
    'alpha': 'metric.alpha',
    'beta': 'metric.beta',
    'gamma': 'metric.gamma',
    'lambda_': 'metric.lambda',
    'n_cells': 'metric.n_cells',
    'p': 'metric.p',
    'tau_l': 'metric.tau_l',
    'tau_h': 'metric.tau_h',
    'k_g': 'metric.k_g',
    'k_e': 'metric.k_e',
    's_floor': 'metric.s_floor',
    'sigma_max': 'metric.sigma_max',
    'noise_channels': 'metric.noise_channels',
    'epsilon': 'controller.epsilon',
    'profile': 'controller.profile',
    'max_iterations': 'controller.max_iterations',
    'start_exposure_ms': 'controller.start_exposure_ms',
    'start_gain_db': 'controller.start_gain_db',
    'camera': 'camera.kind',
    'manifest_path': 'camera.manifest',
    'read_noise_sigma': 'camera.read_noise_sigma',
    'exposure_step': 'surface.exposure_step_ms',
    'gain_step': 'surface.gain_step_db',
    'border': 'surface.border',
    'out': 'output.dir',
    'db': 'output.db',
    'seed': 'seed',
    'workers': 'workers',
}


class InputError(Exception):
    """Bad command-line input (exit code 2)"""


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides: Dict[str, Any] = {}
    for dest, key in OVERRIDE_KEYS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        if key in ('camera.manifest', 'output.db'):
            value = str(Path(value).resolve())
        overrides[key] = value
    return load_config(args.config, overrides)


def _database(cfg: RunConfig) -> Optional[Database]:
    return Database(str(cfg.db_path)) if cfg.db_path is not None else None


def _print_breakdown(breakdown) -> None:
    print(f"l_gradient {format_value(breakdown.l_gradient)}")
    print(f"l_entropy {format_value(breakdown.l_entropy)}")
    print(f"sigma_noise {format_value(breakdown.sigma_noise)}")
    print(f"fused {format_value(breakdown.fused)}")


def cmd_score(args: argparse.Namespace) -> int:
    """Score one image with the fused metric"""
    cfg = _config_from_args(args)
    if args.csv:
        is_valid, error = validate_report_name(args.csv)
        if not is_valid:
            raise InputError(error)
    img = read_pnm(args.image)
    breakdown = evaluate(img, cfg.metric)
    if not breakdown.noise_estimable:
        logger.warning("noise unestimable for %s; using sigma_max=%g", args.image, cfg.metric.sigma_max)
    _print_breakdown(breakdown)

    if args.csv:
        row = {'image': str(args.image)}
        row.update(breakdown.as_row())
        FileStorage(cfg.out_dir).save_table(args.csv, pd.DataFrame([row]))

    db = _database(cfg)
    if db is not None:
        db.save_run('score', str(args.image), breakdown.fused, cfg.metric.to_dict())
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Rank every frame of a sweep by fused score"""
    cfg = _config_from_args(args)
    manifest = SweepManifest.load(args.manifest)
    scores = score_manifest(manifest, cfg.metric, cfg.workers)
    ranking = scores[SCORE_COLUMNS].sort_values('fused', ascending=False, kind='mergesort')
    path = FileStorage(cfg.out_dir).save_table('sweep_ranking.csv', ranking)

    best = ranking.iloc[0]
    print(
        f"best exposure_ms {format_value(best.exposure_ms)} gain_db {format_value(best.gain_db)} "
        f"fused {format_value(best.fused)}"
    )
    print(f"ranking {path}")
    return EXIT_OK


def _surface(manifest: SweepManifest, cfg: RunConfig) -> MetricSurface:
    return build_surface(
        manifest,
        cfg.metric,
        workers=cfg.workers,
        exposure_step_ms=cfg.surface.exposure_step_ms,
        gain_step_db=cfg.surface.gain_step_db,
        border=cfg.surface.border,
    )


def _hull_bounds(manifest: SweepManifest, bounds: ParamBounds) -> ParamBounds:
    """Search bounds of a recorded sweep: its grid hull"""
    return ParamBounds(
        min_ms=float(manifest.exposures[0]),
        max_ms=float(manifest.exposures[-1]),
        min_db=float(manifest.gains[0]),
        max_db=float(manifest.gains[-1]),
        exposure_quantum_ms=bounds.exposure_quantum_ms,
        gain_quantum_db=bounds.gain_quantum_db,
    )


def _build_camera(cfg: RunConfig) -> "tuple[Camera, ParamBounds]":
    settings = cfg.camera
    bounds = cfg.controller.bounds
    if settings.kind == 'synthetic':
        scene = Scene.synthetic(settings.width, settings.height, settings.scene_seed)
        model = SyntheticCameraModel(
            full_well=settings.full_well,
            read_noise_sigma=settings.read_noise_sigma,
            noise_gain_exponent=settings.noise_gain_exponent,
            rng_seed=cfg.seed,
        )
        return SyntheticCamera(scene, model), bounds
    manifest = SweepManifest.load(settings.manifest)
    bounds = _hull_bounds(manifest, bounds)
    if settings.kind == 'replay':
        return ReplayCamera(manifest), bounds
    return SurfaceCamera(_surface(manifest, cfg)), bounds


def cmd_control(args: argparse.Namespace) -> int:
    """Run the Nelder-Mead exposure search against the configured camera"""
    cfg = _config_from_args(args)
    try:
        camera, bounds = _build_camera(cfg)
    except (ExposureControlError, OSError) as e:
        print(f"error: camera init failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    settings = cfg.controller
    storage = FileStorage(cfg.out_dir)
    try:
        best, trace = run(
            camera,
            cfg.metric,
            settings.nm,
            bounds,
            settings.stop,
            start=settings.start,
            epsilon=settings.epsilon,
            kappa=settings.kappa,
        )
    except CameraError as e:
        if e.trace is not None:
            storage.save_table('control_trace.csv', e.trace.to_frame())
        raise

    storage.save_table('control_trace.csv', trace.to_frame())
    score = trace.records[-1].vertices[0][2]
    print(f"exposure_ms {format_value(best.exposure_ms)}")
    print(f"gain_db {format_value(best.gain_db)}")
    print(f"fused {format_value(score)}")
    print(f"iterations {trace.iterations}")

    db = _database(cfg)
    if db is not None:
        db.save_run(
            'control', cfg.camera.kind, score, cfg.metric.to_dict(),
            exposure_ms=best.exposure_ms, gain_db=best.gain_db, iterations=trace.iterations,
        )
    return EXIT_OK


def cmd_surface(args: argparse.Namespace) -> int:
    """Raw and interpolated metric surfaces for the requested terms"""
    cfg = _config_from_args(args)
    terms = [t.strip() for t in args.terms.split(',') if t.strip()]
    is_valid, error = validate_terms(terms)
    if not is_valid:
        raise InputError(error)

    surface = _surface(SweepManifest.load(args.manifest), cfg)
    n_exposures, n_gains = surface.dense_shape()
    rows = n_exposures * n_gains
    if rows > LARGE_DENSE_ROWS:
        logger.warning(
            "dense surfaces will have %d rows per term (%d x %d); "
            "use --exposure-step / --gain-step for a coarser grid", rows, n_exposures, n_gains
        )
    else:
        logger.info("dense surfaces: %d rows per term (%d x %d)", rows, n_exposures, n_gains)
    storage = FileStorage(cfg.out_dir)
    for term in terms:
        storage.save_table(f'surface_raw_{term}.csv', surface.raw_frame(term))
        storage.save_table(f'surface_dense_{term}.csv', surface.dense_frame(term))
        params, value = surface.argmax(term)
        print(
            f"{term} argmax exposure_ms {format_value(params.exposure_ms)} "
            f"gain_db {format_value(params.gain_db)} value {format_value(value)}"
        )
    return EXIT_OK


def _list_images(image_dir: Path) -> List[Path]:
    if not image_dir.is_dir():
        raise InputError(f"not a directory: {image_dir}")
    paths = sorted(p for p in image_dir.iterdir() if p.suffix.lower() in PNM_SUFFIXES)
    if not paths:
        raise InputError(f"no PGM/PPM images in {image_dir}")
    return paths


def cmd_noise_eval(args: argparse.Namespace) -> int:
    """Bias / spread / MSE of the noise estimator"""
    cfg = _config_from_args(args)
    try:
        sigmas = parse_float_list(args.sigmas)
    except ValueError as e:
        raise InputError(f"--sigmas: {e}") from e
    for is_valid, error in (validate_sigmas(sigmas), validate_trials(args.trials)):
        if not is_valid:
            raise InputError(error)

    images = [read_pnm(p) for p in _list_images(Path(args.image_dir))]
    report = noise_eval(images, sigmas, args.trials, cfg.seed, cfg.metric)
    FileStorage(cfg.out_dir).save_table('noise_eval.csv', report)
    sys.stdout.write(to_csv_text(report))
    return EXIT_OK


def cmd_make_sweep(args: argparse.Namespace) -> int:
    """Render a synthetic exposure/gain sweep with its manifest"""
    cfg = _config_from_args(args)
    settings = cfg.camera
    scene = Scene.synthetic(settings.width, settings.height, settings.scene_seed)
    model = SyntheticCameraModel(
        full_well=settings.full_well,
        read_noise_sigma=settings.read_noise_sigma,
        noise_gain_exponent=settings.noise_gain_exponent,
        rng_seed=cfg.seed,
    )
    manifest = make_sweep(scene, model, get_profile(cfg.controller.profile), args.out_dir)
    rows, cols = manifest.shape
    print(f"manifest {Path(args.out_dir) / 'manifest.csv'} ({rows}x{cols} grid)")
    return EXIT_OK


def cmd_timing(args: argparse.Namespace) -> int:
    """Per-term processing time of the metric"""
    cfg = _config_from_args(args)
    img = read_pnm(args.image)
    timings = time_terms(img, cfg.metric, args.repeats)
    for name, ms in timings.items():
        print(f"{name} {ms:.3f} ms")
    return EXIT_OK


def cmd_history(args: argparse.Namespace) -> int:
    """Recent score/control runs from the run database"""
    cfg = _config_from_args(args)
    db = _database(cfg)
    if db is None:
        raise InputError("history needs --db or output.db")
    for run_record in db.get_recent_runs(args.limit):
        fused = run_record['fused']
        print(
            f"{run_record['id']} {run_record['command']} {run_record['source']} "
            f"fused {format_value(fused) if fused is not None else '-'} "
            f"{format_timestamp(run_record['created_at'])}"
        )
    return EXIT_OK


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="key=value config file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", type=str, default=None, help="output directory")
    common.add_argument("--db", type=str, default=None, help="SQLite run history")
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--verbose", "-v", action="store_true")

    metric = common.add_argument_group("metric overrides")
    metric.add_argument("--alpha", type=float, default=None)
    metric.add_argument("--beta", type=float, default=None)
    metric.add_argument("--gamma", type=float, default=None)
    metric.add_argument("--lambda", dest="lambda_", type=float, default=None)
    metric.add_argument("--n-cells", type=int, default=None)
    metric.add_argument("--p", type=float, default=None)
    metric.add_argument("--tau-l", type=float, default=None)
    metric.add_argument("--tau-h", type=float, default=None)
    metric.add_argument("--k-g", type=float, default=None)
    metric.add_argument("--k-e", type=float, default=None)
    metric.add_argument("--s-floor", type=float, default=None)
    metric.add_argument("--sigma-max", type=float, default=None)
    metric.add_argument("--noise-channels", type=str, default=None, choices=["all", "green", "gray"])

    control = common.add_argument_group("controller / camera overrides")
    control.add_argument("--epsilon", type=float, default=None)
    control.add_argument("--profile", type=str, default=None, choices=["indoor", "outdoor"])
    control.add_argument("--max-iterations", type=int, default=None)
    control.add_argument("--start-exposure-ms", type=float, default=None)
    control.add_argument("--start-gain-db", type=float, default=None)
    control.add_argument("--camera", type=str, default=None, choices=["synthetic", "replay", "surface"])
    control.add_argument("--manifest", dest="manifest_path", type=str, default=None)
    control.add_argument("--read-noise-sigma", type=float, default=None)

    surface = common.add_argument_group("surface overrides")
    surface.add_argument("--exposure-step", type=float, default=None)
    surface.add_argument("--gain-step", type=float, default=None)
    surface.add_argument("--border", type=str, default=None, choices=["replicate", "linear"])
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    p = argparse.ArgumentParser(prog="aecontrol", description="Noise-aware auto-exposure tools")
    sub = p.add_subparsers(dest="cmd")

    score = sub.add_parser("score", parents=[common], help="score one image")
    score.add_argument("image")
    score.add_argument("--csv", type=str, default=None, help="also write the breakdown to this CSV")

    sweep = sub.add_parser("sweep", parents=[common], help="rank a sweep manifest")
    sweep.add_argument("manifest")

    sub.add_parser("control", parents=[common], help="run the exposure controller")

    surface = sub.add_parser("surface", parents=[common], help="metric surfaces of a sweep")
    surface.add_argument("manifest")
    surface.add_argument("--terms", type=str, default="fused", help=f"comma list of {','.join(SURFACE_TERMS)}")

    noise = sub.add_parser("noise-eval", parents=[common], help="noise estimator MSE report")
    noise.add_argument("image_dir")
    noise.add_argument("--sigmas", type=str, default="1,5,10")
    noise.add_argument("--trials", type=int, default=20)

    make = sub.add_parser("make-sweep", parents=[common], help="render a synthetic sweep")
    make.add_argument("out_dir")

    timing = sub.add_parser("timing", parents=[common], help="per-term metric timing")
    timing.add_argument("image")
    timing.add_argument("--repeats", type=_positive_int, default=100)

    history = sub.add_parser("history", parents=[common], help="recent runs")
    history.add_argument("--limit", type=_positive_int, default=10)

    return p


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "score": cmd_score,
    "sweep": cmd_sweep,
    "control": cmd_control,
    "surface": cmd_surface,
    "noise-eval": cmd_noise_eval,
    "make-sweep": cmd_make_sweep,
    "timing": cmd_timing,
    "history": cmd_history,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.cmd is None:
        parser.print_help()
        return EXIT_INPUT

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        return COMMANDS[args.cmd](args)
    except (InputError, ConfigError, ManifestError, ImageError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (CameraError, DomainError, MetricError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
