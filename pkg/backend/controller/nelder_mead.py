"""
Nelder-Mead Exposure Controller
Searches exposure time and gain for the frame with the highest quality score
"""
import logging
import math
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np

from backend.controller.models import (
    ControlTrace,
    ExposureParams,
    NMCoefficients,
    ParamBounds,
    Simplex,
    StoppingRule,
    Vertex,
)
from backend.metric.models import MetricConfig
from backend.utils.errors import CameraError, ExposureControlError

if TYPE_CHECKING:
    from backend.camera.base import Camera, Measurement

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1.7
DEFAULT_KAPPA = 0.5


def initial_step(mean_intensity: float, epsilon: float = DEFAULT_EPSILON) -> float:
    """
    Step size of the initial simplex from the mean frame intensity

    Bright frames (128 <= J <= 255) step down by J / (255 * epsilon); dark
    frames step up by epsilon * (1 - J / 255).
    """
    if not 0.0 <= mean_intensity <= 255.0:
        raise ValueError(f"mean intensity must be in [0, 255], got {mean_intensity}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    ratio = mean_intensity / 255.0
    if mean_intensity >= 128.0:
        return -ratio / epsilon
    return epsilon * (1.0 - ratio)


def initial_simplex(
    x0: ExposureParams,
    mean_intensity: float,
    epsilon: float,
    bounds: ParamBounds,
    kappa: float = DEFAULT_KAPPA,
) -> Simplex:
    """
    Unscored starting simplex around x0

    Each axis i gets the vertex x0 * (1 + h * e_i). Components smaller than
    kappa move additively by h * kappa instead. Vertices are clamped to the
    bounds, and a vertex that collapses onto x0 is pushed one camera quantum
    back inside.
    """
    h = initial_step(mean_intensity, epsilon)
    origin = np.clip(x0.as_array(), bounds.lower, bounds.upper)
    vertices = [Vertex(ExposureParams.from_array(origin))]
    for axis in range(2):
        point = origin.copy()
        if abs(point[axis]) < kappa:
            point[axis] = point[axis] + h * kappa
        else:
            point[axis] = point[axis] * (1.0 + h)
        point = np.clip(point, bounds.lower, bounds.upper)
        if point[axis] == origin[axis]:
            quantum = bounds.quantum[axis]
            direction = 1.0 if h >= 0 else -1.0
            nudged = origin[axis] + direction * quantum
            if not bounds.lower[axis] <= nudged <= bounds.upper[axis]:
                nudged = origin[axis] - direction * quantum
            point[axis] = nudged
        vertices.append(Vertex(ExposureParams.from_array(point)))
    return Simplex(vertices)


def should_stop(
    simplex: Simplex,
    trace: ControlTrace,
    stop: StoppingRule,
    bounds: Optional[ParamBounds] = None,
) -> bool:
    """
    True when the simplex has collapsed, the best score has stalled for
    ``stop.patience`` iterations, or the iteration budget is spent
    """
    if trace.iterations >= stop.max_iterations:
        return True
    if simplex.diameter(bounds) < stop.diameter_tol:
        return True
    best = trace.best_scores()
    if len(best) > stop.patience:
        recent = np.diff(best[-(stop.patience + 1):])
        if np.all(recent < stop.min_improvement):
            return True
    return False


class _Objective:
    """Clamps, captures, scores and logs every evaluation"""

    def __init__(self, camera: "Camera", cfg: MetricConfig, bounds: ParamBounds, trace: ControlTrace):
        self.camera = camera
        self.cfg = cfg
        self.bounds = bounds
        self.trace = trace
        self.iteration = 0
        self.frames = 0

    def measure(self, point: np.ndarray) -> Tuple[ExposureParams, "Measurement"]:
        params = ExposureParams.from_array(np.clip(point, self.bounds.lower, self.bounds.upper))
        try:
            measurement = self.camera.measure(params, self.cfg)
        except CameraError as e:
            e.trace = self.trace
            raise
        except (ExposureControlError, OSError) as e:
            raise CameraError(f"capture at {params} failed: {e}", trace=self.trace) from e
        self.frames += 1
        self.trace.add_capture(self.iteration, params, self._finite(measurement.score))
        return params, measurement

    def vertex(self, point: np.ndarray) -> Vertex:
        params, measurement = self.measure(point)
        return Vertex(params, self._finite(measurement.score))

    @staticmethod
    def _finite(score: float) -> float:
        return score if math.isfinite(score) else -math.inf


def run(
    camera: "Camera",
    cfg: MetricConfig,
    nm: NMCoefficients,
    bounds: ParamBounds,
    stop: StoppingRule,
    start: Optional[ExposureParams] = None,
    epsilon: float = DEFAULT_EPSILON,
    kappa: float = DEFAULT_KAPPA,
) -> Tuple[ExposureParams, ControlTrace]:
    """
    Maximize the fused quality score over (exposure, gain)

    Args:
        camera: frame source; owned by the controller for the whole run
        cfg: metric configuration used to score every frame
        nm: simplex coefficients
        bounds: box constraints; every candidate is clamped before capture
        stop: convergence tests
        start: initial parameters (defaults to the center of the bounds)
        epsilon: initial step scale
        kappa: magnitude below which the initial step is additive

    Returns:
        (best parameters, trace of the search)

    Raises:
        CameraError: capture failed; ``error.trace`` holds the partial trace
    """
    trace = ControlTrace()
    objective = _Objective(camera, cfg, bounds, trace)

    x0 = bounds.clamp(start if start is not None else bounds.center())
    params0, first = objective.measure(x0.as_array())
    simplex = initial_simplex(params0, first.mean_intensity, epsilon, bounds, kappa)
    simplex.vertices[0].score = _Objective._finite(first.score)
    for i in (1, 2):
        simplex.vertices[i] = objective.vertex(simplex.vertices[i].params.as_array())
    simplex.order()
    trace.append(0, 'init', simplex, objective.frames)
    logger.debug("initial simplex around %s (J=%.1f)", params0, first.mean_intensity)

    iteration = 0
    while not should_stop(simplex, trace, stop, bounds):
        iteration += 1
        objective.iteration = iteration
        objective.frames = 0

        best, second, worst = simplex.best, simplex.second, simplex.worst
        centroid = (best.params.as_array() + second.params.as_array()) / 2.0
        away = centroid - worst.params.as_array()

        reflected_point = centroid + nm.rho * away
        reflected = objective.vertex(reflected_point)
        replacement: Optional[Vertex] = None

        if reflected.score > best.score:
            expanded = objective.vertex(centroid + nm.chi * nm.rho * away)
            if expanded.score > reflected.score:
                replacement, op = expanded, 'expand'
            else:
                replacement, op = reflected, 'reflect'
        elif reflected.score > second.score:
            replacement, op = reflected, 'reflect'
        elif reflected.score > worst.score:
            contracted = objective.vertex(centroid + nm.psi * nm.rho * away)
            if contracted.score >= reflected.score:
                replacement, op = contracted, 'contract_outside'
        else:
            contracted = objective.vertex(centroid - nm.psi * away)
            if contracted.score > worst.score:
                replacement, op = contracted, 'contract_inside'

        if replacement is not None:
            simplex.vertices[2] = replacement
        else:
            op = 'shrink'
            anchor = best.params.as_array()
            for i in (1, 2):
                point = anchor + nm.sigma * (simplex.vertices[i].params.as_array() - anchor)
                simplex.vertices[i] = objective.vertex(point)

        simplex.order()
        trace.append(iteration, op, simplex, objective.frames)
        logger.debug(
            "iteration %d %s: best %s score %.6g",
            iteration, op, simplex.best.params, simplex.best.score,
        )

    logger.info(
        "converged to %s (score %.6g) after %d iterations, %d captures",
        simplex.best.params, simplex.best.score, trace.iterations, len(trace.captures),
    )
    return simplex.best.params, trace
