"""Reconstruction quality metrics and the intersected-area crop."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import DimensionError, DomainError
from .spectral import BandPlan, HyperCube

FULL_SCALE_WIDTH = 2448
FULL_SCALE_BORDER = 200


@dataclass(frozen=True)
class QualityScore:
    scene: str
    method: str
    region: str          # "full" | "intersected"
    psnr_db: float
    ssim: float


def _values(x) -> np.ndarray:
    v = x.values if isinstance(x, HyperCube) else np.asarray(x)
    return np.asarray(v, dtype=np.float64)


def _check_pair(h, g):
    hv, gv = _values(h), _values(g)
    if hv.shape != gv.shape:
        raise DimensionError(f"shape mismatch: {hv.shape} vs {gv.shape}")
    return hv, gv


def mse(h, g) -> float:
    """Mean squared error over all samples."""
    hv, gv = _check_pair(h, g)
    return float(np.mean((hv - gv) ** 2))


def psnr(h, g, h_max: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give +inf."""
    err = mse(h, g)
    if err == 0.0:
        return math.inf
    return 20.0 * math.log10(h_max) - 10.0 * math.log10(err)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    ax = np.arange(size) - size // 2
    k = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma ** 2))
    return k / k.sum()


def ssim(h, g, window: int = 11, sigma: float = 1.5,
         k1: float = 0.01, k2: float = 0.03, data_range: float = 1.0) -> float:
    """Structural similarity averaged over local Gaussian windows and bands.

    Stabilizers are g1 = (k1*L)^2 and g2 = (k2*L)^2 for dynamic range L.
    Windows are evaluated where they fit entirely inside the image.
    """
    hv, gv = _check_pair(h, g)
    if hv.ndim == 2:
        hv, gv = hv[None], gv[None]
    if min(hv.shape[1:]) < window:
        raise DimensionError(f"images smaller than the {window}px SSIM window")
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    kernel = _gaussian_window(window, sigma)
    total = 0.0
    count = 0
    for hb, gb in zip(hv, gv):
        mu_h = fftconvolve(hb, kernel, mode="valid")
        mu_g = fftconvolve(gb, kernel, mode="valid")
        e_hh = fftconvolve(hb * hb, kernel, mode="valid")
        e_gg = fftconvolve(gb * gb, kernel, mode="valid")
        e_hg = fftconvolve(hb * gb, kernel, mode="valid")
        var_h = e_hh - mu_h * mu_h
        var_g = e_gg - mu_g * mu_g
        cov = e_hg - mu_h * mu_g
        s = ((2.0 * mu_h * mu_g + c1) * (2.0 * cov + c2)
             / ((mu_h * mu_h + mu_g * mu_g + c1) * (var_h + var_g + c2)))
        total += float(s.sum())
        count += s.size
    return total / count


def ssim_global(h, g, k1: float = 0.01, k2: float = 0.03,
                data_range: float = 1.0) -> float:
    """Single-window variant: the plain formula over the whole image."""
    hv, gv = _check_pair(h, g)
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    mu_h, mu_g = hv.mean(), gv.mean()
    var_h, var_g = hv.var(), gv.var()
    cov = np.mean(hv * gv) - mu_h * mu_g
    return float((2 * mu_h * mu_g + c1) * (2 * cov + c2)
                 / ((mu_h ** 2 + mu_g ** 2 + c1) * (var_h + var_g + c2)))


def crop_intersection(cube: HyperCube, border_px: int) -> HyperCube:
    """Remove ``border_px`` pixels on every side of the cube."""
    if border_px < 0:
        raise DomainError("border must be nonnegative")
    if border_px == 0:
        return cube
    if 2 * border_px >= min(cube.width, cube.height):
        raise DimensionError(
            f"border {border_px} leaves no pixels of a {cube.width}x{cube.height} cube")
    b = border_px
    return HyperCube(cube.values[:, b:-b, b:-b].copy(), cube.plan)


def proportional_border(width_px: int, full_border: int = FULL_SCALE_BORDER,
                        full_width: int = FULL_SCALE_WIDTH) -> int:
    """Desk-scale intersected border: the full-scale border scaled by width."""
    return int(round(full_border * width_px / full_width))
