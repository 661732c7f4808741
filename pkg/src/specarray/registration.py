"""Cross-spectral registration: disparity, warping, occlusions, reconstruction.

The pipeline maps every peripheral camera onto the center view.  Matching
works on census-transformed images (Hamming cost), which survives the change
of spectral band between cameras.  Costs from all neighbor views are summed
into one volume, the winner is refined to sub-pixel accuracy by a parabola
fit, and low-confidence pixels inherit the lowest disparity of their reliable
neighborhood (favoring the background).  Warped channels are masked by a
forward-mapping z-buffer occlusion test and the masked pixels are filled by
Gaussian-weighted affine regression against the fully observed center image.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import binary_erosion
from scipy.signal import fftconvolve

from .arrays import ArrayLayout, CameraPose
from .errors import ConfigurationError, DimensionError, ReconstructionError
from .sampling import bilinear_clamped
from .spectral import BandPlan, HyperCube

try:
    _popcount = np.bitwise_count
except AttributeError:  # numpy < 2.0
    _POP_LUT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)

    def _popcount(a):
        b = _POP_LUT[a.view(np.uint8)]
        return b.reshape(a.shape + (8,)).sum(axis=-1)


@dataclass(frozen=True)
class RegistrationParams:
    max_disparity: float = 24.0       # px at the reference baseline
    disparity_step: float = 0.5
    census_width: int = 9
    census_height: int = 7
    confidence_threshold: float = 0.1
    neighbor_count: int = 6           # views fused for disparity estimation
    regression_window: int = 21
    regression_min_valid: int = 16
    dilation_radius: int = 1
    occlusion_margin: float = 0.5     # px; disparity slack in the z-buffer test


@dataclass(frozen=True)
class DisparityMap:
    values: np.ndarray       # (h, w) float32, px at the reference baseline
    confidence: np.ndarray   # (h, w) float32 in [0, 1]; 0 where unreliable

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float32))
        object.__setattr__(self, "confidence",
                           np.asarray(self.confidence, dtype=np.float32))
        if self.values.shape != self.confidence.shape:
            raise DimensionError("disparity and confidence shapes differ")


@dataclass(frozen=True)
class WarpedChannel:
    values: np.ndarray   # (h, w) float32, 0 where invalid
    valid: np.ndarray    # (h, w) bool; False where the warp left the source


@dataclass(frozen=True)
class OcclusionMap:
    visible: np.ndarray  # (h, w) uint8, 1 = visible to the peripheral camera


def census_transform(image: np.ndarray, width: int = 9, height: int = 7) -> np.ndarray:
    """Per-pixel binary descriptor: sign of each window neighbor vs. the center.

    Window sizes up to 65 comparisons fit the uint64 code.  Borders replicate.
    """
    if width * height - 1 > 64:
        raise ConfigurationError("census window exceeds 64 comparisons")
    img = np.asarray(image, dtype=np.float64)
    hh, hw = height // 2, width // 2
    padded = np.pad(img, ((hh, hh), (hw, hw)), mode="edge")
    h, w = img.shape
    code = np.zeros((h, w), dtype=np.uint64)
    one = np.uint64(1)
    for dy in range(-hh, hh + 1):
        for dx in range(-hw, hw + 1):
            if dy == 0 and dx == 0:
                continue
            nb = padded[hh + dy:hh + dy + h, hw + dx:hw + dx + w]
            code = (code << one) | (nb > img).astype(np.uint64)
    return code


def _shift_clamped(arr: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """arr sampled at (y+dy, x+dx) with edge clamping."""
    h, w = arr.shape
    rows = np.clip(np.arange(h) + dy, 0, h - 1)
    cols = np.clip(np.arange(w) + dx, 0, w - 1)
    return arr[rows][:, cols]


def _cost_plane(center_code, periph_code, offset_x, offset_y, cache):
    """Hamming cost against the peripheral code displaced by a float offset.

    The four integer-shift planes around the offset are blended bilinearly,
    which keeps the cost volume smooth over half-pixel candidates.
    """
    x0, y0 = int(np.floor(offset_x)), int(np.floor(offset_y))
    fx, fy = offset_x - x0, offset_y - y0
    plane = None
    for cy, cx, wgt in ((y0, x0, (1 - fy) * (1 - fx)), (y0, x0 + 1, (1 - fy) * fx),
                        (y0 + 1, x0, fy * (1 - fx)), (y0 + 1, x0 + 1, fy * fx)):
        if wgt == 0.0:
            continue
        key = (cy, cx)
        ham = cache.get(key)
        if ham is None:
            shifted = _shift_clamped(periph_code, cy, cx)
            ham = _popcount(center_code ^ shifted).astype(np.float32)
            cache[key] = ham
        plane = wgt * ham if plane is None else plane + wgt * ham
    return plane


def estimate_disparity(center: np.ndarray, views, ref_baseline_mm: float,
                       params: RegistrationParams = RegistrationParams()) -> DisparityMap:
    """Fused disparity of the center view from peripheral (image, pose) pairs."""
    center = np.asarray(center, dtype=np.float64)
    h, w = center.shape
    if len(views) < 2:
        raise ConfigurationError("disparity estimation needs at least 2 peripheral views")
    if params.max_disparity > w / 4:
        raise ConfigurationError(
            f"max disparity {params.max_disparity} exceeds width/4 = {w / 4}")
    for img, pose in views:
        if np.asarray(img).shape != (h, w):
            raise DimensionError("all views must match the center image size")
        if pose.baseline_mm <= 0:
            raise ConfigurationError("peripheral views need a positive baseline")

    step = params.disparity_step
    n_cand = int(round(params.max_disparity / step)) + 1
    candidates = step * np.arange(n_cand)
    code_c = census_transform(center, params.census_width, params.census_height)
    volume = np.zeros((n_cand, h, w), dtype=np.float32)
    for img, pose in views:
        code_p = census_transform(np.asarray(img, dtype=np.float64),
                                  params.census_width, params.census_height)
        rho = pose.baseline_mm / ref_baseline_mm
        ux, uy = pose.direction
        cache: dict = {}
        for k, d in enumerate(candidates):
            volume[k] += _cost_plane(code_c, code_p, -d * rho * ux, -d * rho * uy,
                                     cache)

    idx = np.argmin(volume, axis=0)          # ties -> smallest disparity
    grid = np.indices((h, w))
    c1 = volume[idx, grid[0], grid[1]]
    cl = volume[np.maximum(idx - 1, 0), grid[0], grid[1]]
    cr = volume[np.minimum(idx + 1, n_cand - 1), grid[0], grid[1]]

    denom = cl - 2.0 * c1 + cr
    interior = (idx > 0) & (idx < n_cand - 1) & (denom > 1e-9)
    offset = np.where(interior, 0.5 * (cl - cr) / np.where(denom > 1e-9, denom, 1.0), 0.0)
    disparity = np.clip((idx + np.clip(offset, -0.5, 0.5)) * step,
                        0.0, params.max_disparity)

    # Margin between the winner and the best candidate outside its +-1 slot.
    k_axis = np.arange(n_cand)[:, None, None]
    c2 = np.where(np.abs(k_axis - idx[None]) <= 1, np.inf, volume).min(axis=0)
    conf = np.where(np.isfinite(c2) & (c2 > 0), (c2 - c1) / np.maximum(c2, 1e-12), 0.0)
    conf = np.clip(conf, 0.0, 1.0)

    reliable = conf >= params.confidence_threshold
    filled = _fill_from_reliable(disparity, reliable)
    return DisparityMap(filled.astype(np.float32),
                        np.where(reliable, conf, 0.0).astype(np.float32))


def _fill_from_reliable(disparity: np.ndarray, reliable: np.ndarray) -> np.ndarray:
    """Propagate the lowest reliable disparity into unreliable regions."""
    if not reliable.any():
        return np.zeros_like(disparity)
    values = np.where(reliable, disparity, np.inf)
    while np.isinf(values).any():
        padded = np.pad(values, 1, constant_values=np.inf)
        neighbor_min = np.minimum.reduce([
            padded[:-2, 1:-1], padded[2:, 1:-1], padded[1:-1, :-2], padded[1:-1, 2:],
        ])
        update = np.isinf(values) & np.isfinite(neighbor_min)
        if not update.any():
            break
        values[update] = neighbor_min[update]
    return values


def warp_to_center(source: np.ndarray, disparity, pose: CameraPose,
                   ref_baseline_mm: float) -> WarpedChannel:
    """Inverse warp: sample the source at (x, y) - D * (b/b_ref) * u."""
    src = np.asarray(source, dtype=np.float64)
    d = disparity.values if isinstance(disparity, DisparityMap) else np.asarray(disparity)
    if d.shape != src.shape:
        raise DimensionError("disparity map must match the source image size")
    h, w = src.shape
    ys, xs = np.mgrid[0:h, 0:w]
    rho = pose.baseline_mm / ref_baseline_mm
    qx = xs - d * rho * pose.direction[0]
    qy = ys - d * rho * pose.direction[1]
    vals, valid = bilinear_clamped(src, qx, qy)
    vals[~valid] = 0.0
    return WarpedChannel(vals.astype(np.float32), valid)


def detect_occlusions(disparity, pose: CameraPose, ref_baseline_mm: float,
                      dilation_radius: int = 1,
                      margin: float = 0.5) -> OcclusionMap:
    """Forward-map z-buffer test: keep only the nearest pixel per target cell.

    Two center pixels conflict when their forward-mapped positions round to
    the same pixel cell (within a pixel of each other); the smaller disparity
    loses.  Center pixels mapping outside the peripheral frame are occluded
    too, and the occluded region is finally dilated to absorb interpolation
    bleed.
    """
    d = disparity.values if isinstance(disparity, DisparityMap) else np.asarray(disparity)
    d = d.astype(np.float64)
    h, w = d.shape
    ys, xs = np.mgrid[0:h, 0:w]
    rho = pose.baseline_mm / ref_baseline_mm
    tx = xs - d * rho * pose.direction[0]
    ty = ys - d * rho * pose.direction[1]
    in_view = (tx >= 0) & (tx <= w - 1) & (ty >= 0) & (ty <= h - 1)

    cell = (np.rint(ty).astype(np.int64) * w + np.rint(tx).astype(np.int64))
    best = np.full(h * w, -np.inf)
    np.maximum.at(best, cell[in_view], d[in_view])
    visible = in_view.copy()
    visible[in_view] = d[in_view] >= best[cell[in_view]] - margin
    if dilation_radius > 0:
        size = 2 * dilation_radius + 1
        visible = binary_erosion(visible, structure=np.ones((size, size)),
                                 border_value=1)
    return OcclusionMap(visible.astype(np.uint8))


def _gaussian_kernel(size: int) -> np.ndarray:
    sigma = size / 4.0
    ax = np.arange(size) - size // 2
    k = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma ** 2))
    return k / k.sum()


def reconstruct_occluded(warped: WarpedChannel, occlusion: OcclusionMap,
                         guide: np.ndarray,
                         params: RegistrationParams = RegistrationParams()) -> np.ndarray:
    """Fill invalid/occluded pixels by local affine regression on the guide.

    For each masked pixel an affine model v ~ a*g + b is fitted over the valid
    pixels of a Gaussian-weighted window; windows with too few valid pixels
    double in size until satisfied (whole-image fit as last resort).  Valid
    pixels pass through unchanged.
    """
    v = np.asarray(warped.values, dtype=np.float64)
    valid = warped.valid & occlusion.visible.astype(bool)
    if v.shape != np.asarray(guide).shape:
        raise DimensionError("guide must match the warped channel size")
    if not valid.any():
        raise ReconstructionError("channel has no valid pixels to fit against")
    pending = ~valid
    out = v.copy()
    if not pending.any():
        return out.astype(np.float32)

    g = np.asarray(guide, dtype=np.float64)
    h, w = v.shape
    vmask = valid.astype(np.float64)
    win = params.regression_window
    while True:
        kernel = _gaussian_kernel(win)
        box = np.ones((win, win))
        count = np.rint(fftconvolve(vmask, box, mode="same"))
        s_w = fftconvolve(vmask, kernel, mode="same")
        s_g = fftconvolve(vmask * g, kernel, mode="same")
        s_v = fftconvolve(vmask * v, kernel, mode="same")
        s_gg = fftconvolve(vmask * g * g, kernel, mode="same")
        s_gv = fftconvolve(vmask * g * v, kernel, mode="same")

        s_w = np.maximum(s_w, 1e-12)
        mean_g = s_g / s_w
        mean_v = s_v / s_w
        var_g = np.maximum(s_gg / s_w - mean_g ** 2, 0.0)
        cov_gv = s_gv / s_w - mean_g * mean_v
        a = cov_gv / (var_g + 1e-10)
        b = mean_v - a * mean_g
        pred = np.clip(a * g + b, 0.0, 1.0)

        ok = pending & (count >= params.regression_min_valid)
        out[ok] = pred[ok]
        pending = pending & ~ok
        if not pending.any():
            break
        if win >= 2 * max(h, w) + 1:
            # Whole-image unweighted fit for whatever is left.
            gv, vv = g[valid], v[valid]
            vg = gv.var()
            a0 = (np.mean(gv * vv) - gv.mean() * vv.mean()) / (vg + 1e-10)
            b0 = vv.mean() - a0 * gv.mean()
            out[pending] = np.clip(a0 * g[pending] + b0, 0.0, 1.0)
            break
        win = 2 * win + 1
    return out.astype(np.float32)


def register_all(images, layout: ArrayLayout,
                 params: RegistrationParams = RegistrationParams(),
                 plan: BandPlan | None = None, disparity=None,
                 details: dict | None = None) -> HyperCube:
    """Map all peripheral captures to the center view and assemble the cube.

    ``disparity`` may inject a precomputed (e.g. ground-truth) map; otherwise
    it is estimated from the center camera's nearest neighbors.  The center
    channel is copied into the cube verbatim.  Passing a dict as ``details``
    collects the disparity map and per-camera visibility masks for inspection.
    """
    images = np.asarray(images, dtype=np.float32)
    if images.ndim != 3 or images.shape[0] != len(layout.poses):
        raise DimensionError(
            f"expected {len(layout.poses)} captures, got shape {images.shape}")
    plan = plan or BandPlan(count=len(layout.poses))
    if plan.count != len(layout.poses):
        raise DimensionError("band plan size must match the camera count")

    center = layout.center
    center_img = images[center.id]
    ref_b = layout.spacing_mm
    if disparity is None:
        neighbors = layout.nearest_peripherals(params.neighbor_count)
        disparity = estimate_disparity(
            center_img, [(images[p.id], p) for p in neighbors], ref_b, params)
    elif not isinstance(disparity, DisparityMap):
        d = np.asarray(disparity, dtype=np.float32)
        disparity = DisparityMap(d, np.ones_like(d))

    visibility = np.ones_like(images, dtype=np.uint8)
    out = np.empty_like(images)
    out[center.band] = center_img
    for pose in layout.peripherals:
        warped = warp_to_center(images[pose.id], disparity, pose, ref_b)
        occl = detect_occlusions(disparity, pose, ref_b,
                                 params.dilation_radius, params.occlusion_margin)
        visibility[pose.id] = occl.visible
        out[pose.band] = reconstruct_occluded(warped, occl, center_img, params)
    if details is not None:
        details["disparity"] = disparity
        details["visibility"] = visibility
    return HyperCube(out, plan)
