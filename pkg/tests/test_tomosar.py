import math
from dataclasses import replace

import numpy as np
import pytest

from frozen import FREQ_AT_70_9_M, RAYLEIGH_N8, UNAMBIGUOUS_SPAN
from oracles import atom
from tomoanm.bench import score_scene
from tomoanm.errors import ConfigError, DomainError, ShapeError
from tomoanm.estimators import GridConfig
from tomoanm.tomosar import (
    ArrayGeometry,
    PointCloud,
    Scatterer,
    SceneConfig,
    SLCStack,
    elevation_from_freq,
    freq_from_elevation,
    pixel_echo,
    rayleigh_resolution,
    reconstruct_volume,
    simulate_building_scene,
    worker_count,
)

TABLE1 = ArrayGeometry(8, 0.11, 0.03122, 1000.0)


class TestGeometry:
    def test_baselines_and_aperture(self):
        g = ArrayGeometry()
        np.testing.assert_allclose(g.baselines, 0.11 * np.arange(8))
        assert g.aperture == pytest.approx(0.77)
        assert TABLE1.unambiguous_span == pytest.approx(UNAMBIGUOUS_SPAN, rel=1e-12)

    @pytest.mark.parametrize("kwargs", [dict(n_elements=1), dict(element_spacing=0),
                                        dict(wavelength=-1), dict(reference_range=0),
                                        dict(view_angle=90)])
    def test_invariants(self, kwargs):
        with pytest.raises(ConfigError):
            ArrayGeometry(**kwargs)


class TestFrequencyMapping:
    def test_zero(self):
        assert freq_from_elevation(0.0, TABLE1) == 0.0

    def test_table1_value(self):
        f = freq_from_elevation(70.9, TABLE1)
        assert f == pytest.approx(FREQ_AT_70_9_M, abs=1e-12)
        assert f == pytest.approx(0.4997, abs=1e-3)

    def test_round_trip(self):
        for s in np.linspace(0, TABLE1.unambiguous_span, 50, endpoint=False):
            back = elevation_from_freq(freq_from_elevation(s, TABLE1), TABLE1)
            assert back == pytest.approx(s, rel=1e-12, abs=1e-12)

    def test_strictly_increasing_on_span(self):
        s = np.linspace(0, TABLE1.unambiguous_span, 10001)[:-1]
        assert np.all(np.diff(freq_from_elevation(s, TABLE1)) > 0)


class TestRayleigh:
    def test_table1_value(self):
        assert rayleigh_resolution(TABLE1) == pytest.approx(RAYLEIGH_N8, rel=1e-12)
        assert rayleigh_resolution(TABLE1) == pytest.approx(20.27, abs=5e-3)

    def test_doubling_range(self):
        far = replace(TABLE1, reference_range=2000.0)
        assert rayleigh_resolution(far) == pytest.approx(2 * rayleigh_resolution(TABLE1))

    def test_doubling_aperture(self):
        wide = replace(TABLE1, element_spacing=0.22)
        assert rayleigh_resolution(wide) == pytest.approx(rayleigh_resolution(TABLE1) / 2)


class TestPixelEcho:
    def half_cycle_elevation(self, geom):
        return elevation_from_freq(0.5, geom)

    def test_single_noiseless(self):
        geom = ArrayGeometry()
        echo = pixel_echo([Scatterer(self.half_cycle_elevation(geom), 1.0)], geom)
        np.testing.assert_allclose(echo.g, atom(0.5, 8), atol=1e-12)
        assert echo.noise_sigma == 0.0

    def test_superposition(self):
        geom = ArrayGeometry()
        a, b = Scatterer(10.0, 1 + 1j), Scatterer(77.0, -0.3)
        both = pixel_echo([a, b], geom).g
        np.testing.assert_allclose(both, pixel_echo([a], geom).g + pixel_echo([b], geom).g, atol=1e-12)

    def test_empty_noiseless_is_zero(self):
        np.testing.assert_array_equal(pixel_echo([], ArrayGeometry()).g, np.zeros(8))

    def test_monte_carlo_snr(self):
        geom = ArrayGeometry()
        sc = [Scatterer(33.0, np.exp(0.4j))]
        clean = pixel_echo(sc, geom).g
        noise_power = np.mean([np.mean(np.abs(pixel_echo(sc, geom, 30.0, seed=s).g - clean) ** 2)
                               for s in range(10_000)])
        assert abs(10 * math.log10(1.0 / noise_power) - 30.0) <= 0.2

    def test_deterministic_per_seed(self):
        geom = ArrayGeometry()
        sc = [Scatterer(5.0, 1.0)]
        np.testing.assert_array_equal(pixel_echo(sc, geom, 10, 7).g, pixel_echo(sc, geom, 10, 7).g)
        assert not np.array_equal(pixel_echo(sc, geom, 10, 7).g, pixel_echo(sc, geom, 10, 8).g)

    def test_outside_span(self):
        with pytest.raises(DomainError):
            pixel_echo([Scatterer(500.0, 1.0)], ArrayGeometry())
        with pytest.raises(DomainError):
            Scatterer(1.0, complex("nan"))


class TestScene:
    def test_default_shape(self):
        scene = simulate_building_scene(SceneConfig(), seed=0)
        assert scene.stack.shape == (8, 21, 64)
        counts = {len(c) for row in scene.truth for c in row}
        assert counts <= {0, 1, 2, 3} and 3 in counts and 2 in counts

    def test_flat_ground(self):
        scene = simulate_building_scene(SceneConfig(building_height=0.0, snr_db=None), seed=0)
        for row in scene.truth:
            for cell in row:
                assert len(cell) == 1 and cell[0].elevation == 0.0

    def test_determinism(self):
        a = simulate_building_scene(SceneConfig(), seed=4).stack.data
        b = simulate_building_scene(SceneConfig(), seed=4).stack.data
        assert a.tobytes() == b.tobytes()

    def test_channel_truncation_covariance(self):
        wide = SceneConfig(geometry=ArrayGeometry(16))
        full = simulate_building_scene(wide, seed=2).stack.truncate(8)
        direct = simulate_building_scene(SceneConfig(), seed=2).stack
        np.testing.assert_array_equal(full.data, direct.data)

    def test_building_above_span(self):
        with pytest.raises(ConfigError):
            SceneConfig(building_height=120.0)

    def test_stack_validation(self):
        with pytest.raises(ShapeError):
            SLCStack(np.zeros((4, 2, 2)), ArrayGeometry(8))


def single_scatterer_stack(seed=0, size=(4, 6)):
    geom = ArrayGeometry()
    rng = np.random.default_rng(seed)
    truth, data = [], np.zeros((8, *size), complex)
    for a in range(size[0]):
        row = []
        for r in range(size[1]):
            sc = [Scatterer(rng.uniform(0, geom.unambiguous_span), np.exp(2j * np.pi * rng.random()))]
            data[:, a, r] = pixel_echo(sc, geom).g
            row.append(sc)
        truth.append(row)
    return SLCStack(data, geom), truth


class TestReconstruct:
    def test_single_scatterer_scene_ivdst(self):
        stack, truth = single_scatterer_stack()
        rec = reconstruct_volume(stack, "ivdst", k_max=1)
        score = score_scene(rec.cloud, truth, stack.geometry)
        assert score.missed == 0 and rec.diagnostics.failed == 0
        assert score.rmse_m <= 1e-2 * rayleigh_resolution(stack.geometry)

    def test_zero_stack(self):
        stack = SLCStack(np.zeros((8, 3, 3), complex), ArrayGeometry())
        assert len(reconstruct_volume(stack, "ivdst", k_max=2).cloud) == 0

    def test_infinite_floor(self):
        stack, _ = single_scatterer_stack(size=(2, 2))
        assert len(reconstruct_volume(stack, "omp", k_max=1, amplitude_floor=math.inf).cloud) == 0

    def test_bounds(self):
        scene = simulate_building_scene(SceneConfig(azimuth_size=3, range_size=40, building_azimuth=(1, 2)), 1)
        rec = reconstruct_volume(scene.stack, "ivdst", k_max=3)
        assert len(rec.cloud) <= 3 * 3 * 40
        assert np.all(rec.cloud.height >= 0)
        assert np.all(rec.cloud.height < scene.stack.geometry.unambiguous_span)

    def test_failed_pixels_are_counted(self):
        stack, _ = single_scatterer_stack(size=(2, 2))
        # a grid coarser than the array is rejected in every pixel
        rec = reconstruct_volume(stack, "omp", GridConfig(grid_size=4), k_max=1)
        assert rec.diagnostics.failed == 4 and len(rec.cloud) == 0

    def test_worker_pool_matches_serial(self, monkeypatch):
        scene = simulate_building_scene(SceneConfig(azimuth_size=2, range_size=30, building_azimuth=(0, 2)), 3)
        serial = reconstruct_volume(scene.stack, "ivdst", k_max=2).cloud
        monkeypatch.setenv("TOMO_ANM_THREADS", "3")
        assert worker_count() == 3
        pooled = reconstruct_volume(scene.stack, "ivdst", k_max=2).cloud
        np.testing.assert_array_equal(serial.height, pooled.height)
        np.testing.assert_array_equal(serial.azimuth, pooled.azimuth)

    def test_bad_thread_env(self, monkeypatch):
        monkeypatch.setenv("TOMO_ANM_THREADS", "zero")
        with pytest.raises(ConfigError):
            worker_count()

    def test_k_max_bounds(self):
        stack, _ = single_scatterer_stack(size=(1, 1))
        with pytest.raises(DomainError):
            reconstruct_volume(stack, "ivdst", k_max=8)

    def test_point_cloud_validation(self):
        with pytest.raises(DomainError):
            PointCloud([0], [0], [1.0], [-1.0])
        with pytest.raises(ShapeError):
            PointCloud([0, 1], [0], [1.0], [1.0])
