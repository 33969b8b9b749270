import math

import numpy as np
import pandas as pd
import pytest

from backend.camera.base import Camera, Measurement
from backend.camera.surface import MetricSurface, SurfaceCamera, build_surface
from backend.camera.synthetic import Scene, SyntheticCameraModel, make_sweep
from backend.controller.models import (
    ControlTrace,
    ExposureParams,
    NMCoefficients,
    ParamBounds,
    Simplex,
    StoppingRule,
    SweepProfile,
    Vertex,
    get_profile,
)
from backend.controller.nelder_mead import initial_simplex, initial_step, run, should_stop
from backend.metric.models import MetricConfig
from backend.utils.errors import CameraError, ConfigError

CFG = MetricConfig()
INDOOR = get_profile('indoor')


class QuadraticCamera(Camera):
    """Noiseless concave objective with a known maximizer"""

    def __init__(self, peak=(6.0, 6.0), mean_intensity=60.0):
        self.peak = peak
        self.mean_intensity = mean_intensity
        self.calls = 0

    def measure(self, params, cfg):
        self.calls += 1
        score = -((params.exposure_ms - self.peak[0]) ** 2 + (params.gain_db - self.peak[1]) ** 2)
        return Measurement(params, score, self.mean_intensity)


class FailingCamera(QuadraticCamera):
    def __init__(self, fail_after):
        super().__init__()
        self.fail_after = fail_after

    def measure(self, params, cfg):
        if self.calls >= self.fail_after:
            raise OSError("sensor unplugged")
        return super().measure(params, cfg)


class HoleCamera(QuadraticCamera):
    """Returns nan on one half of the domain"""

    def measure(self, params, cfg):
        m = super().measure(params, cfg)
        if params.gain_db > 12.0:
            return Measurement(params, float('nan'), m.mean_intensity)
        return m


def analytic_surface(peak=(40.3, 9.4), scale=10.0):
    """Smooth single-peak surface on the indoor sweep grid (22 exposures x 25 gains)"""
    exposures = INDOOR.exposures()
    gains = INDOOR.gains()
    e, g = np.meshgrid(exposures, gains, indexing='ij')
    scores = -scale * (((e - peak[0]) / 10.0) ** 2 + ((g - peak[1]) / 4.0) ** 2)
    return MetricSurface.from_grid(exposures, gains, scores)


def simplex_at(*points, scores=(0.0, 0.0, 0.0)):
    return Simplex([Vertex(ExposureParams(*p), s) for p, s in zip(points, scores)])


class TestInitialStep:
    def test_dark_frame(self):
        assert initial_step(0.0) == pytest.approx(1.7, abs=1e-12)

    def test_saturated_frame(self):
        assert initial_step(255.0) == pytest.approx(-1.0 / 1.7, abs=1e-12)
        assert f"{initial_step(255.0):.6f}" == "-0.588235"

    def test_bright_branch_includes_128(self):
        assert initial_step(128.0) == pytest.approx(-(1.0 / 1.7) * (128.0 / 255.0), abs=1e-12)
        assert initial_step(127.9) > 0

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            initial_step(256.0)


class TestInitialSimplex:
    bounds = ParamBounds(0.1, 67.0, 0.0, 24.0)

    def points(self, x0, mean_intensity=0.0, epsilon=0.5):
        simplex = initial_simplex(ExposureParams(*x0), mean_intensity, epsilon, self.bounds)
        return [(v.params.exposure_ms, v.params.gain_db) for v in simplex.vertices]

    def test_multiplicative(self):
        np.testing.assert_allclose(self.points((10.0, 10.0)), [(10, 10), (15, 10), (10, 15)], atol=1e-9)

    def test_additive_at_zero_gain(self):
        np.testing.assert_allclose(self.points((10.0, 0.0)), [(10, 0), (15, 0), (10, 0.25)], atol=1e-9)

    def test_upper_bound_is_nudged_inside(self):
        points = self.points((67.0, 10.0))
        assert points[1][0] == pytest.approx(67.0 - self.bounds.exposure_quantum_ms, abs=1e-9)
        assert points[2] == pytest.approx((67.0, 15.0))

    def test_bright_frame_steps_down(self):
        points = self.points((20.0, 8.0), mean_intensity=255.0, epsilon=1.7)
        assert points[1][0] < 20.0 and points[2][1] < 8.0

    def test_vertices_distinct_and_in_bounds(self, rng):
        for _ in range(200):
            x0 = ExposureParams(rng.uniform(0.1, 67.0), rng.uniform(0.0, 24.0))
            simplex = initial_simplex(x0, float(rng.uniform(0, 255)), 1.7, self.bounds)
            pts = simplex.points()
            assert all(self.bounds.contains(v.params) for v in simplex.vertices)
            assert len({tuple(p) for p in pts}) == 3


class TestShouldStop:
    def test_coincident_vertices(self):
        simplex = simplex_at((5, 5), (5, 5), (5, 5))
        assert should_stop(simplex, ControlTrace(), StoppingRule())

    def test_iteration_cap(self):
        simplex = simplex_at((5, 5), (30, 5), (5, 20))
        trace = ControlTrace()
        trace.append(0, 'init', simplex, 3)
        trace.append(50, 'reflect', simplex, 1)
        assert should_stop(simplex, trace, StoppingRule(max_iterations=50))

    def test_progressing_search_continues(self):
        simplex = simplex_at((5.0, 5.0), (5.4, 5.0), (5.0, 5.2))
        trace = ControlTrace()
        for i in range(4):
            trace.append(i, 'reflect', simplex_at((5, 5), (5.4, 5), (5, 5.2), scores=(float(i), -1, -2)), 1)
        assert simplex.diameter() == pytest.approx(math.hypot(0.4, 0.2))
        assert not should_stop(simplex, trace, StoppingRule())

    def test_stalled_best_score(self):
        simplex = simplex_at((5, 5), (30, 5), (5, 20))
        trace = ControlTrace()
        for i in range(6):
            trace.append(i, 'contract_inside', simplex_at((5, 5), (30, 5), (5, 20), scores=(1.0, 0, -1)), 1)
        assert should_stop(simplex, trace, StoppingRule(patience=5))

    def test_trace_iterations_strictly_increase(self):
        trace = ControlTrace()
        trace.append(2, 'init', simplex_at((1, 1), (2, 1), (1, 2)), 3)
        with pytest.raises(ValueError):
            trace.append(2, 'reflect', simplex_at((1, 1), (2, 1), (1, 2)), 1)


class TestRun:
    bounds = ParamBounds(0.1, 20.0, 0.0, 24.0)

    def test_quadratic_peak(self):
        stop = StoppingRule(diameter_tol=1e-7, min_improvement=0.0, max_iterations=60)
        best, trace = run(QuadraticCamera(), CFG, NMCoefficients(), self.bounds, stop, start=ExposureParams(2.0, 1.0))
        assert best.exposure_ms == pytest.approx(6.0, rel=0.01)
        assert best.gain_db == pytest.approx(6.0, rel=0.01)
        assert trace.iterations <= 60
        assert trace.records[0].op == 'init'
        assert {r.op for r in trace.records[1:]} <= {
            'reflect', 'expand', 'contract_outside', 'contract_inside', 'shrink'
        }

    def test_best_score_never_drops(self):
        _, trace = run(QuadraticCamera(), CFG, NMCoefficients(), self.bounds, StoppingRule())
        best = trace.best_scores()
        assert all(b >= a for a, b in zip(best, best[1:]))

    def test_captures_stay_in_bounds(self, rng):
        for _ in range(20):
            lo_ms, lo_db = rng.uniform(0.1, 5.0), rng.uniform(0.0, 5.0)
            bounds = ParamBounds(lo_ms, lo_ms + rng.uniform(0.5, 10.0), lo_db, lo_db + rng.uniform(0.5, 10.0))
            start = ExposureParams(rng.uniform(-5.0, 30.0), rng.uniform(-5.0, 30.0))
            camera = QuadraticCamera(peak=(rng.uniform(-10, 40), rng.uniform(-10, 40)))
            _, trace = run(camera, CFG, NMCoefficients(), bounds, StoppingRule(), start=start)
            assert all(bounds.contains(c.params) for c in trace.captures)
            assert len(trace.captures) == camera.calls

    def test_deterministic(self):
        runs = [run(QuadraticCamera(), CFG, NMCoefficients(), self.bounds, StoppingRule()) for _ in range(2)]
        assert runs[0][0] == runs[1][0]
        pd.testing.assert_frame_equal(runs[0][1].to_frame(), runs[1][1].to_frame())

    def test_capture_failure_keeps_partial_trace(self):
        with pytest.raises(CameraError) as info:
            run(FailingCamera(fail_after=5), CFG, NMCoefficients(), self.bounds, StoppingRule())
        assert info.value.trace is not None
        assert len(info.value.trace.captures) == 5

    def test_non_finite_scores_rank_last(self):
        camera = HoleCamera(peak=(6.0, 6.0))
        best, trace = run(camera, CFG, NMCoefficients(), self.bounds, StoppingRule(), start=ExposureParams(10.0, 10.0))
        assert math.isfinite(trace.best_scores()[-1])
        assert best.gain_db <= 12.0

    def test_default_start_is_bounds_center(self):
        _, trace = run(QuadraticCamera(), CFG, NMCoefficients(), self.bounds, StoppingRule(max_iterations=1))
        assert trace.captures[0].params == self.bounds.center()


class TestSurfaceConvergence:
    def test_start_at_optimum_is_a_fixed_point(self):
        surface = analytic_surface(peak=(40.0, 9.0))
        stop = StoppingRule()
        best, trace = run(SurfaceCamera(surface), CFG, NMCoefficients(), INDOOR.bounds, stop,
                          start=ExposureParams(40.0, 9.0))
        assert trace.iterations <= stop.patience
        assert abs(best.exposure_ms - 40.0) <= 3.0 and abs(best.gain_db - 9.0) <= 1.0

    @pytest.mark.slow
    def test_random_starts_reach_sweep_argmax(self, tmp_path):
        # raster-order ramp: gradients stay below gamma, so the surface is entropy
        # (peaking where the brightest pixel just reaches 255) minus a noise
        # penalty growing with the cube of the linear gain
        width, height = 320, 240
        radiance = np.linspace(0.02, 1.0, width * height).reshape(height, width)
        profile = SweepProfile('convergence', ParamBounds(4.0, 67.0, 0.0, 6.0), 3.0, 0.25)
        model = SyntheticCameraModel(full_well=34.0, read_noise_sigma=0.5, noise_gain_exponent=3.0, rng_seed=11)
        manifest = make_sweep(Scene(radiance), model, profile, tmp_path)
        assert manifest.shape == (22, 25)
        surface = build_surface(manifest, CFG, workers=4)
        assert np.all(surface.grid('gradient') == 0.0)

        target, _ = surface.argmax()
        assert target.gain_db == 0.0
        assert abs(target.exposure_ms - 34.0) <= 3.0

        camera = SurfaceCamera(surface)
        stop = StoppingRule(diameter_tol=0.01, min_improvement=1e-5, patience=10, max_iterations=60)
        rng = np.random.default_rng(7)
        hits, iterations = 0, []
        for _ in range(100):
            start = ExposureParams(rng.uniform(4.0, 67.0), rng.uniform(0.0, 6.0))
            best, trace = run(camera, CFG, NMCoefficients(), profile.bounds, stop, start=start)
            iterations.append(trace.iterations)
            if abs(best.exposure_ms - target.exposure_ms) <= 3.0 and abs(best.gain_db - target.gain_db) <= 0.25:
                hits += 1
        assert hits >= 90
        assert np.median(iterations) <= 40


class TestModels:
    def test_bounds_validation(self):
        with pytest.raises(ConfigError):
            ParamBounds(0.0, 10.0, 0.0, 10.0)
        with pytest.raises(ConfigError):
            ParamBounds(5.0, 5.0, 0.0, 10.0)

    def test_clamp(self):
        bounds = ParamBounds(1.0, 10.0, 0.0, 20.0)
        assert bounds.clamp(ExposureParams(50.0, -3.0)) == ExposureParams(10.0, 0.0)

    def test_profiles_match_the_reference_sweeps(self):
        outdoor = get_profile('outdoor')
        assert len(outdoor.exposures()) * len(outdoor.gains()) == 550
        assert len(INDOOR.exposures()) == 22 and len(INDOOR.gains()) == 25
        with pytest.raises(ConfigError):
            get_profile('cave')

    def test_coefficient_validation(self):
        with pytest.raises(ConfigError):
            NMCoefficients(chi=0.5)

    def test_trace_frame_columns(self):
        trace = ControlTrace()
        trace.append(0, 'init', simplex_at((1, 1), (2, 1), (1, 2), scores=(3, 2, 1)), 3)
        frame = trace.to_frame()
        assert list(frame.columns[:5]) == ['iteration', 'op', 'exposure_ms_0', 'gain_db_0', 'score_0']
        assert frame.loc[0, 'score_2'] == 1
