"""Snapshot competitors: MSFA mosaic + demosaicing, and CASSI with GAP-TV.

The filter-array simulation periodically samples a 36-band cube with a 6x6
pattern; four demosaicers reconstruct it (weighted bilinear, spectral
differences, iterated spectral differences, wavelet subband substitution).
The coded-aperture simulation multiplies the cube by a binary blue-noise
mask, shears one pixel per band and sums onto a single sensor; a generalized
alternating projection loop with anisotropic TV denoising inverts it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve, gaussian_filter

from .errors import DimensionError, DomainError
from .spectral import BandPlan, HyperCube

MSFA_TILE = 6


@dataclass(frozen=True)
class MosaicPattern:
    """Band index per cell of the periodic tile; a bijection onto 0..35."""

    cells: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cells, dtype=np.int64)
        if c.ndim != 2:
            raise DimensionError("pattern cells must be a 2-D tile")
        if sorted(c.ravel().tolist()) != list(range(c.size)):
            raise DomainError("pattern must use each band of 0..n-1 exactly once")
        c.setflags(write=False)
        object.__setattr__(self, "cells", c)

    @property
    def bands(self) -> int:
        return self.cells.size


def default_pattern() -> MosaicPattern:
    """Row-major band layout on the 6x6 tile."""
    return MosaicPattern(np.arange(MSFA_TILE * MSFA_TILE).reshape(MSFA_TILE, MSFA_TILE))


def _band_map(pattern: MosaicPattern, height: int, width: int) -> np.ndarray:
    th, tw = pattern.cells.shape
    reps = (-(-height // th), -(-width // tw))
    return np.tile(pattern.cells, reps)[:height, :width]


def mosaic(cube: HyperCube, pattern: MosaicPattern = None) -> np.ndarray:
    """Single-channel mosaic: each pixel keeps the band its filter cell selects."""
    pattern = pattern or default_pattern()
    if cube.bands != pattern.bands:
        raise DimensionError(
            f"cube has {cube.bands} bands but the pattern needs {pattern.bands}")
    bmap = _band_map(pattern, cube.height, cube.width)
    return np.take_along_axis(cube.values, bmap[None], axis=0)[0]


def _check_mosaic(mosaic_img: np.ndarray, pattern: MosaicPattern) -> np.ndarray:
    img = np.asarray(mosaic_img, dtype=np.float64)
    th, tw = pattern.cells.shape
    if img.ndim != 2 or img.shape[0] % th or img.shape[1] % tw:
        raise DimensionError(
            f"mosaic shape {img.shape} must be divisible by the {th}x{tw} tile")
    return img


# Triangle kernel of the bilinear interpolator for a 6-periodic lattice.
_TRI = (MSFA_TILE - np.abs(np.arange(-MSFA_TILE + 1, MSFA_TILE))) / MSFA_TILE
_WBI_KERNEL = np.outer(_TRI, _TRI)


def _interp_sparse(values: np.ndarray, sites: np.ndarray) -> np.ndarray:
    """Distance-weighted interpolation of values known at ``sites`` only.

    Normalized convolution: exact at the sample sites and exact on constants,
    including image borders.
    """
    num = convolve(values * sites, _WBI_KERNEL, mode="constant", cval=0.0)
    den = convolve(sites.astype(np.float64), _WBI_KERNEL, mode="constant", cval=0.0)
    return num / den


def _site_masks(pattern: MosaicPattern, height: int, width: int) -> np.ndarray:
    bmap = _band_map(pattern, height, width)
    return np.stack([(bmap == c) for c in range(pattern.bands)])


def _default_plan(bands: int, plan: BandPlan | None) -> BandPlan:
    if plan is not None:
        if plan.count != bands:
            raise DimensionError("plan band count does not match the pattern")
        return plan
    return BandPlan(count=bands)


def _wbi_raw(img: np.ndarray, masks: np.ndarray) -> np.ndarray:
    return np.stack([_interp_sparse(img, m) for m in masks])


def demosaic_wbi(mosaic_img: np.ndarray, pattern: MosaicPattern = None,
                 plan: BandPlan | None = None) -> HyperCube:
    """Weighted bilinear interpolation from each band's own sample sites."""
    pattern = pattern or default_pattern()
    img = _check_mosaic(mosaic_img, pattern)
    masks = _site_masks(pattern, *img.shape)
    cube = np.clip(_wbi_raw(img, masks), 0.0, 1.0)
    return HyperCube(cube.astype(np.float32), _default_plan(pattern.bands, plan))


def _sd_raw(img: np.ndarray, masks: np.ndarray, ref_band: int) -> np.ndarray:
    reference = _interp_sparse(img, masks[ref_band])
    return np.stack([reference + _interp_sparse(img - reference, m) for m in masks])


SD_REFERENCE_BAND = 17  # closest band to the spectral center of the 36-band cube


def demosaic_sd(mosaic_img: np.ndarray, pattern: MosaicPattern = None,
                ref_band: int = SD_REFERENCE_BAND,
                plan: BandPlan | None = None) -> HyperCube:
    """Spectral differences: interpolate sparse offsets against a dense reference."""
    pattern = pattern or default_pattern()
    img = _check_mosaic(mosaic_img, pattern)
    masks = _site_masks(pattern, *img.shape)
    cube = np.clip(_sd_raw(img, masks, ref_band), 0.0, 1.0)
    return HyperCube(cube.astype(np.float32), _default_plan(pattern.bands, plan))


def demosaic_isd(mosaic_img: np.ndarray, pattern: MosaicPattern = None,
                 iterations: int = 3, ref_band: int = SD_REFERENCE_BAND,
                 plan: BandPlan | None = None) -> HyperCube:
    """Iterated spectral differences.

    Starts from the SD estimate; each pass rebuilds the reference from the
    previous cube (per-pixel band mean) and re-runs the spectral-difference
    interpolation against it.  Zero iterations reproduce SD exactly.
    """
    pattern = pattern or default_pattern()
    img = _check_mosaic(mosaic_img, pattern)
    masks = _site_masks(pattern, *img.shape)
    cube = _sd_raw(img, masks, ref_band)
    for _ in range(iterations):
        reference = cube.mean(axis=0)
        cube = np.stack([reference + _interp_sparse(img - reference, m)
                         for m in masks])
    cube = np.clip(cube, 0.0, 1.0)
    return HyperCube(cube.astype(np.float32), _default_plan(pattern.bands, plan))


def _haar_forward(band: np.ndarray):
    a = band[0::2, 0::2]
    b = band[0::2, 1::2]
    c = band[1::2, 0::2]
    d = band[1::2, 1::2]
    return ((a + b + c + d) / 2.0, (a - b + c - d) / 2.0,
            (a + b - c - d) / 2.0, (a - b - c + d) / 2.0)


def _haar_inverse(ll, lh, hl, hh) -> np.ndarray:
    h2, w2 = ll.shape
    out = np.empty((2 * h2, 2 * w2))
    out[0::2, 0::2] = (ll + lh + hl + hh) / 2.0
    out[0::2, 1::2] = (ll - lh + hl - hh) / 2.0
    out[1::2, 0::2] = (ll + lh - hl - hh) / 2.0
    out[1::2, 1::2] = (ll - lh - hl + hh) / 2.0
    return out


# Tent kernel spanning one pattern period: every band contributes weight 1/36.
_PPI_TAPS = np.array([0.5, 1, 1, 1, 1, 1, 0.5]) / MSFA_TILE
_PPI_KERNEL = np.outer(_PPI_TAPS, _PPI_TAPS)


def pseudo_panchromatic(mosaic_img: np.ndarray) -> np.ndarray:
    """Low-passed mosaic mixing all bands uniformly over one period."""
    img = np.asarray(mosaic_img, dtype=np.float64)
    num = convolve(img, _PPI_KERNEL, mode="constant", cval=0.0)
    den = convolve(np.ones_like(img), _PPI_KERNEL, mode="constant", cval=0.0)
    return num / den


def demosaic_dwt(mosaic_img: np.ndarray, pattern: MosaicPattern = None,
                 plan: BandPlan | None = None) -> HyperCube:
    """Wavelet subband substitution: per-band Haar details come from the PPI."""
    pattern = pattern or default_pattern()
    img = _check_mosaic(mosaic_img, pattern)
    masks = _site_masks(pattern, *img.shape)
    base = _wbi_raw(img, masks)
    _, lh_p, hl_p, hh_p = _haar_forward(pseudo_panchromatic(img))
    cube = np.empty_like(base)
    for c in range(base.shape[0]):
        ll, _, _, _ = _haar_forward(base[c])
        cube[c] = _haar_inverse(ll, lh_p, hl_p, hh_p)
    cube = np.clip(cube, 0.0, 1.0)
    return HyperCube(cube.astype(np.float32), _default_plan(pattern.bands, plan))


@dataclass(frozen=True)
class CodedMask:
    """Binary transmission mask for the coded aperture."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.uint8)
        if v.ndim != 2:
            raise DimensionError("mask must be 2-D")
        if not np.isin(v, (0, 1)).all():
            raise DomainError("mask entries must be 0 or 1")
        frac = float(v.mean())
        slack = 0.5 / v.size
        if not (0.45 - slack) <= frac <= (0.55 + slack):
            raise DomainError(f"mask open fraction {frac:.3f} outside [0.45, 0.55]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def open_fraction(self) -> float:
        return float(self.values.mean())


def blue_noise_mask(width: int, height: int, seed: int = 0) -> CodedMask:
    """Half-open binary mask optimized to blue noise by batched void-and-cluster.

    Starting from a random half-density pattern, each sweep relocates the
    tightest clusters of open cells into the deepest voids, judged by a
    toroidal Gaussian energy field (sigma 1.5).  Converges when a sweep only
    moves cells back where they came from.
    """
    if width < 1 or height < 1:
        raise DomainError("mask dimensions must be positive")
    total = width * height
    n_open = int(np.rint(total / 2.0))
    rng = np.random.default_rng(seed)
    pattern = np.zeros(total, dtype=bool)
    pattern[rng.permutation(total)[:n_open]] = True
    if 0 < n_open < total:
        batch = max(1, min(total // 256, n_open, total - n_open))
        for _ in range(96):
            energy = gaussian_filter(pattern.reshape(height, width).astype(np.float64),
                                     1.5, mode="wrap").ravel()
            ones = np.flatnonzero(pattern)
            removed = ones[np.argsort(-energy[ones], kind="stable")[:batch]]
            pattern[removed] = False

            energy = gaussian_filter(pattern.reshape(height, width).astype(np.float64),
                                     1.5, mode="wrap").ravel()
            zeros = np.flatnonzero(~pattern)
            added = zeros[np.argsort(energy[zeros], kind="stable")[:batch]]
            pattern[added] = True
            if set(removed.tolist()) == set(added.tolist()):
                break
    return CodedMask(pattern.reshape(height, width).astype(np.uint8))


@dataclass(frozen=True)
class CassiMeasurement:
    """Single sheared sensor image of width S_w + (bands - 1)."""

    values: np.ndarray
    bands: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise DimensionError("measurement must be 2-D")
        if self.bands < 1 or v.shape[1] < self.bands:
            raise DimensionError("measurement narrower than the band shear")
        if v.min() < 0:
            raise DomainError("measurement values must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def _forward_raw(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    bands, h, w = values.shape
    out = np.zeros((h, w + bands - 1))
    coded = values * mask[None]
    for c in range(bands):
        out[:, c:c + w] += coded[c]
    return out


def _adjoint_raw(meas: np.ndarray, mask: np.ndarray, bands: int) -> np.ndarray:
    h, wm = meas.shape
    w = wm - bands + 1
    return np.stack([mask * meas[:, c:c + w] for c in range(bands)])


def _mask_values(mask) -> np.ndarray:
    """Transmission pattern of a CodedMask or any binary 2-D array."""
    values = mask.values if isinstance(mask, CodedMask) else np.asarray(mask)
    if values.ndim != 2:
        raise DimensionError("mask must be 2-D")
    return values.astype(np.float64)


def cassi_forward(cube, mask) -> CassiMeasurement:
    """Mask, shear one pixel per band along +x, and sum onto the sensor."""
    values = cube.values if isinstance(cube, HyperCube) else np.asarray(cube)
    values = values.astype(np.float64)
    t_mask = _mask_values(mask)
    if values.shape[1:] != t_mask.shape:
        raise DimensionError(
            f"mask {t_mask.shape} does not match cube spatial size {values.shape[1:]}")
    return CassiMeasurement(_forward_raw(values, t_mask), values.shape[0])


def cassi_adjoint(measurement: CassiMeasurement, mask, bands: int) -> np.ndarray:
    """Transpose of the forward model; returns an unconstrained band stack."""
    meas = measurement.values if isinstance(measurement, CassiMeasurement) \
        else np.asarray(measurement, dtype=np.float64)
    t_mask = _mask_values(mask)
    w = meas.shape[1] - bands + 1
    if w < 1 or meas.shape[0] != t_mask.shape[0] or w != t_mask.shape[1]:
        raise DimensionError("measurement width must equal mask width + bands - 1")
    return _adjoint_raw(meas, t_mask, bands)


def _grad(u: np.ndarray):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:, :-1] = u[:, 1:] - u[:, :-1]
    gy[:-1, :] = u[1:, :] - u[:-1, :]
    return gx, gy


def _div(px: np.ndarray, py: np.ndarray) -> np.ndarray:
    d = np.zeros_like(px)
    d[:, 0] += px[:, 0]
    d[:, 1:-1] += px[:, 1:-1] - px[:, :-2]
    d[:, -1] -= px[:, -2]
    d[0, :] += py[0, :]
    d[1:-1, :] += py[1:-1, :] - py[:-2, :]
    d[-1, :] -= py[-2, :]
    return d


def tv_denoise(band: np.ndarray, weight: float, steps: int,
               tau: float = 0.249) -> np.ndarray:
    """Anisotropic TV denoising via Chambolle's dual projection."""
    if weight <= 0 or steps < 1:
        return band
    px = np.zeros_like(band)
    py = np.zeros_like(band)
    for _ in range(steps):
        u = band - weight * _div(px, py)
        gx, gy = _grad(u)
        px = np.clip(px - (tau / weight) * gx, -1.0, 1.0)
        py = np.clip(py - (tau / weight) * gy, -1.0, 1.0)
    return band - weight * _div(px, py)


def gap_tv_reconstruct(measurement: CassiMeasurement, mask: CodedMask, bands: int,
                       iterations: int = 30, tv_weight: float = 0.05,
                       tv_steps: int = 5, plan: BandPlan | None = None,
                       residual_log: list | None = None) -> HyperCube:
    """Generalized alternating projection with per-band TV denoising.

    Iterates x <- TV(x + A^T((y - A x) / diag(AA^T))) from x = A^T(y / diag),
    the diagonal being clamped below by 1.  The final cube is clipped to
    [0, 1].  ``residual_log`` (if given) collects ||y - A x|| per iteration.
    """
    if iterations < 1:
        raise DomainError("at least one GAP iteration is required")
    y = measurement.values
    t_mask = _mask_values(mask)
    scale = np.maximum(_forward_raw(np.repeat(t_mask[None], bands, axis=0), t_mask), 1.0)
    x = _adjoint_raw(y / scale, t_mask, bands)
    for _ in range(iterations):
        residual = y - _forward_raw(x, t_mask)
        x = x + _adjoint_raw(residual / scale, t_mask, bands)
        x = np.stack([tv_denoise(band, tv_weight, tv_steps) for band in x])
        if residual_log is not None:
            residual_log.append(float(np.linalg.norm(y - _forward_raw(x, t_mask))))
    cube = np.clip(x, 0.0, 1.0).astype(np.float32)
    return HyperCube(cube, _default_plan(bands, plan))
