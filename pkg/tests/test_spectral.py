import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import specarray as sa
from specarray.errors import DimensionError, DomainError


def planck_oracle(wavelength_nm, temperature):
    """Scalar Planck radiance evaluated straight from the formula."""
    h, c, kb = 6.62607015e-34, 2.99792458e8, 1.380649e-23
    lam = wavelength_nm * 1e-9
    return (2.0 * h * c * c / lam**5) / (math.exp(h * c / (lam * kb * temperature)) - 1.0)


class TestBandPlan:
    def test_default_centers(self):
        plan = sa.BandPlan()
        assert plan.count == 37
        assert plan.centers_nm[0] == 400.0
        assert plan.centers_nm[-1] == 760.0
        assert plan.center_nm(18) == 580.0

    def test_invalid(self):
        with pytest.raises(DomainError):
            sa.BandPlan(count=0)
        with pytest.raises(DomainError):
            sa.BandPlan(step_nm=-1.0)
        with pytest.raises(DomainError):
            sa.BandPlan(bandwidth_nm=0.0)


class TestHyperCube:
    def test_validation(self):
        plan = sa.BandPlan(count=3)
        with pytest.raises(DomainError):
            sa.HyperCube(np.full((3, 2, 2), 1.5, np.float32), plan)
        with pytest.raises(DomainError):
            sa.HyperCube(np.full((3, 2, 2), np.nan, np.float32), plan)
        with pytest.raises(DimensionError):
            sa.HyperCube(np.zeros((4, 2, 2), np.float32), plan)
        with pytest.raises(DimensionError):
            sa.HyperCube(np.zeros((3, 2), np.float32), plan)

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_file_roundtrip_bit_exact(self, seed, tmp_path_factory):
        rng = np.random.default_rng(seed)
        plan = sa.BandPlan(count=5, start_nm=412.5, step_nm=7.25)
        cube = sa.HyperCube(rng.random((5, 6, 9)).astype(np.float32), plan)
        path = tmp_path_factory.mktemp("cubes") / f"c{seed}.hsc"
        sa.save_cube(cube, path)
        back = sa.load_cube(path)
        assert np.array_equal(back.values, cube.values)
        assert back.plan.count == plan.count
        assert back.plan.start_nm == plan.start_nm
        assert back.plan.step_nm == plan.step_nm

    def test_take_bands(self):
        plan = sa.BandPlan(count=4)
        cube = sa.HyperCube(np.random.default_rng(0).random((4, 3, 3)).astype(np.float32), plan)
        sub = cube.take_bands(2)
        assert sub.bands == 2
        assert np.array_equal(sub.values, cube.values[:2])


class TestPlanckIlluminant:
    def test_matches_formula_oracle(self):
        plan = sa.BandPlan()
        il = sa.planck_illuminant(6400.0, plan)
        raw = np.array([planck_oracle(wl, 6400.0) for wl in plan.centers_nm])
        expected = raw / raw.max()
        assert np.allclose(il.values, expected, rtol=1e-12)

    def test_outdoor_vs_indoor_blue_red_ratio(self):
        # Hotter illuminant carries relatively more short-wavelength power.
        plan = sa.BandPlan()
        hot = sa.planck_illuminant(6400.0, plan)
        cold = sa.planck_illuminant(3200.0, plan)
        ratio = lambda il: il.values[0] / il.values[-1]
        assert ratio(cold) < ratio(hot)

    def test_single_band_plan(self):
        il = sa.planck_illuminant(5000.0, sa.BandPlan(count=1))
        assert il.values.shape == (1,)
        assert il.values[0] == 1.0

    def test_nonpositive_temperature(self):
        with pytest.raises(DomainError):
            sa.planck_illuminant(0.0, sa.BandPlan())
        with pytest.raises(DomainError):
            sa.planck_illuminant(-100.0, sa.BandPlan())

    @given(st.floats(500.0, 20000.0), st.floats(500.0, 20000.0))
    @settings(max_examples=50, deadline=None)
    def test_wien_peak_ordering(self, t1, t2):
        t1, t2 = sorted((t1, t2))
        plan = sa.BandPlan()
        peak1 = int(sa.planck_illuminant(t1, plan).values.argmax())
        peak2 = int(sa.planck_illuminant(t2, plan).values.argmax())
        assert peak1 >= peak2


class TestRgbPreview:
    def test_zero_cube_black(self):
        plan = sa.BandPlan()
        cube = sa.HyperCube(np.zeros((37, 4, 5), np.float32), plan)
        assert np.array_equal(sa.render_rgb_preview(cube), np.zeros((4, 5, 3)))

    def test_flat_cube_gray(self):
        plan = sa.BandPlan()
        for level in (0.25, 0.7, 1.0):
            cube = sa.HyperCube(np.full((37, 3, 3), level, np.float32), plan)
            rgb = sa.render_rgb_preview(cube)
            assert np.all(np.abs(rgb - level) < 0.02)
            assert float(np.ptp(rgb)) < 0.02

    def test_blue_bands_dominate(self):
        plan = sa.BandPlan()
        v = np.zeros((37, 2, 2), np.float32)
        v[:6] = 0.9  # 400-450 nm only
        rgb = sa.render_rgb_preview(sa.HyperCube(v, plan))
        assert np.all(rgb[..., 2] > rgb[..., 0])
        assert np.all(rgb[..., 2] > rgb[..., 1])

    def test_linearity_before_clipping(self):
        plan = sa.BandPlan()
        rng = np.random.default_rng(3)
        base = (0.1 + 0.1 * rng.random((37, 5, 5))).astype(np.float32)
        full = sa.render_rgb_preview(sa.HyperCube(base, plan))
        assert full.min() > 0 and full.max() < 1  # no clipping engaged
        for a in (0.25, 0.5, 0.75):
            scaled = sa.render_rgb_preview(sa.HyperCube(a * base, plan))
            assert np.allclose(scaled, a * full, atol=1e-12)

    def test_plan_mismatch(self):
        plan = sa.BandPlan()
        cube = sa.HyperCube(np.zeros((37, 2, 2), np.float32), plan)
        with pytest.raises(DimensionError):
            sa.render_rgb_preview(cube, sa.BandPlan(step_nm=5.0))

    def test_out_of_range_centers(self):
        plan = sa.BandPlan(count=3, start_nm=300.0)
        cube = sa.HyperCube(np.zeros((3, 2, 2), np.float32), plan)
        with pytest.raises(DomainError):
            sa.render_rgb_preview(cube)


class TestSrgbEncode:
    def test_endpoints_and_monotonicity(self):
        x = np.linspace(0.0, 1.0, 101)
        y = sa.srgb_encode(x)
        assert y[0] == 0.0
        assert abs(y[-1] - 1.0) < 1e-12
        assert np.all(np.diff(y) > 0)
