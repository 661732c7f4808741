import math

import numpy as np
import pytest

import specarray as sa
from specarray.errors import DimensionError


def mse_triple_loop(h, g):
    """Brute-force oracle: explicit sums over bands, rows, columns."""
    bands, rows, cols = h.shape
    total = 0.0
    for c in range(bands):
        for y in range(rows):
            for x in range(cols):
                d = float(h[c, y, x]) - float(g[c, y, x])
                total += d * d
    return total / (bands * rows * cols)


def ssim_global_oracle(h, g, c1=1e-4, c2=9e-4):
    """Hand-evaluated single-window structural similarity."""
    mu_h = float(np.mean(h))
    mu_g = float(np.mean(g))
    var_h = float(np.mean((h - mu_h) ** 2))
    var_g = float(np.mean((g - mu_g) ** 2))
    cov = float(np.mean((h - mu_h) * (g - mu_g)))
    return ((2 * mu_h * mu_g + c1) * (2 * cov + c2)
            / ((mu_h**2 + mu_g**2 + c1) * (var_h + var_g + c2)))


class TestMse:
    def test_identical(self):
        x = np.random.default_rng(0).random((3, 4, 4))
        assert sa.mse(x, x) == 0.0

    def test_constant_offset(self):
        g = np.random.default_rng(1).random((3, 4, 4)) * 0.8
        assert sa.mse(g + 0.1, g) == pytest.approx(0.01, abs=1e-12)

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(2)
        h = rng.random((3, 4, 4))
        g = rng.random((3, 4, 4))
        assert sa.mse(h, g) == pytest.approx(mse_triple_loop(h, g), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            sa.mse(np.zeros((2, 3, 3)), np.zeros((2, 3, 4)))


class TestPsnr:
    def test_20db(self):
        g = np.full((2, 5, 5), 0.4)
        assert sa.psnr(g + 0.1, g) == pytest.approx(20.0, abs=1e-9)

    def test_identical_infinite(self):
        x = np.random.default_rng(3).random((2, 4, 4))
        assert sa.psnr(x, x) == math.inf

    def test_peak_scale_invariance(self):
        rng = np.random.default_rng(4)
        h = rng.random((2, 6, 6))
        g = rng.random((2, 6, 6))
        assert sa.psnr(255.0 * h, 255.0 * g, h_max=255.0) == pytest.approx(
            sa.psnr(h, g, h_max=1.0), abs=1e-9)

    def test_decreases_with_noise_level(self):
        rng = np.random.default_rng(5)
        g = rng.random((3, 16, 16))
        values = []
        for sigma in (0.01, 0.02, 0.05, 0.1):
            noise = np.random.default_rng(99).standard_normal(g.shape)
            values.append(sa.psnr(g + sigma * noise, g))
        assert all(values[i + 1] < values[i] for i in range(len(values) - 1))


class TestSsim:
    def test_identity_is_one(self):
        x = np.random.default_rng(6).random((2, 16, 16))
        assert sa.ssim(x, x) == 1.0

    def test_monotone_degradation(self):
        g = np.full((1, 24, 24), 0.5)
        noise = np.random.default_rng(7).standard_normal(g.shape)
        scores = [sa.ssim(np.clip(g + eps * noise, 0, 1), g)
                  for eps in (0.01, 0.03, 0.1)]
        assert scores[0] < 1.0
        assert all(scores[i + 1] < scores[i] for i in range(len(scores) - 1))

    def test_symmetric(self):
        rng = np.random.default_rng(8)
        h = rng.random((2, 20, 20))
        g = rng.random((2, 20, 20))
        assert sa.ssim(h, g) == pytest.approx(sa.ssim(g, h), abs=1e-12)

    def test_global_variant_matches_hand_formula(self):
        rng = np.random.default_rng(9)
        h = rng.random((4, 4))
        g = rng.random((4, 4))
        assert sa.ssim_global(h, g) == pytest.approx(ssim_global_oracle(h, g),
                                                     abs=1e-10)

    def test_too_small_for_window(self):
        with pytest.raises(DimensionError):
            sa.ssim(np.zeros((1, 4, 4)), np.zeros((1, 4, 4)))


class TestCropIntersection:
    def test_full_scale_dimensions(self):
        plan = sa.BandPlan(count=1)
        cube = sa.HyperCube(np.zeros((1, 2048, 2448), np.float32), plan)
        cropped = sa.crop_intersection(cube, 200)
        assert (cropped.width, cropped.height) == (2048, 1648)

    def test_zero_border_identity(self):
        plan = sa.BandPlan(count=2)
        cube = sa.HyperCube(np.random.default_rng(0).random((2, 8, 8)).astype(np.float32), plan)
        assert np.array_equal(sa.crop_intersection(cube, 0).values, cube.values)

    def test_proportional_border(self):
        b = sa.proportional_border(300)
        assert b == 25
        plan = sa.BandPlan(count=1)
        cube = sa.HyperCube(np.zeros((1, 300, 300), np.float32), plan)
        cropped = sa.crop_intersection(cube, b)
        assert (cropped.width, cropped.height) == (250, 250)

    def test_border_too_large(self):
        plan = sa.BandPlan(count=1)
        cube = sa.HyperCube(np.zeros((1, 10, 10), np.float32), plan)
        with pytest.raises(DimensionError):
            sa.crop_intersection(cube, 5)

    def test_commutes_with_metric_evaluation(self):
        rng = np.random.default_rng(10)
        plan = sa.BandPlan(count=3)
        h = sa.HyperCube(rng.random((3, 20, 30)).astype(np.float32), plan)
        g = sa.HyperCube(rng.random((3, 20, 30)).astype(np.float32), plan)
        direct = sa.mse(sa.crop_intersection(h, 4), sa.crop_intersection(g, 4))
        manual = np.mean((h.values[:, 4:-4, 4:-4].astype(np.float64)
                          - g.values[:, 4:-4, 4:-4].astype(np.float64)) ** 2)
        assert direct == pytest.approx(manual, abs=1e-15)
