"""Spectral band bookkeeping, Planck illuminants, RGB previews and the cube container.

The hyperspectral cube is stored band-major as a float32 array of shape
(bands, height, width) with every sample in [0, 1].  The ``HSC1`` file format
serializes exactly that memory layout, so cubes round-trip bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ciedata import XYZ_TO_SRGB, color_matching
from .errors import DimensionError, DomainError

# Exact SI values (2019 redefinition).
PLANCK_H = 6.62607015e-34     # J s
SPEED_OF_LIGHT = 2.99792458e8  # m / s
BOLTZMANN_K = 1.380649e-23     # J / K


@dataclass(frozen=True)
class BandPlan:
    """Uniform spectral sampling: ``count`` bands starting at ``start_nm``."""

    count: int = 37
    start_nm: float = 400.0
    step_nm: float = 10.0
    bandwidth_nm: float = 10.0

    def __post_init__(self):
        if self.count < 1:
            raise DomainError(f"band count must be >= 1, got {self.count}")
        if self.step_nm <= 0 or self.bandwidth_nm <= 0:
            raise DomainError("band step and bandwidth must be positive")

    @property
    def centers_nm(self) -> np.ndarray:
        return self.start_nm + self.step_nm * np.arange(self.count)

    def center_nm(self, band: int) -> float:
        if not 0 <= band < self.count:
            raise DomainError(f"band {band} outside plan with {self.count} bands")
        return self.start_nm + self.step_nm * band


@dataclass(frozen=True)
class HyperCube:
    """Immutable (bands, height, width) float32 cube with samples in [0, 1]."""

    values: np.ndarray
    plan: BandPlan

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 3:
            raise DimensionError(f"cube must be 3-D (bands, h, w), got shape {v.shape}")
        if v.shape[0] != self.plan.count:
            raise DimensionError(
                f"cube has {v.shape[0]} bands but plan expects {self.plan.count}")
        if min(v.shape) < 1:
            raise DimensionError(f"cube dimensions must be positive, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("cube contains non-finite samples")
        if v.min() < 0.0 or v.max() > 1.0:
            raise DomainError("cube samples must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def bands(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def band(self, c: int) -> np.ndarray:
        return self.values[c]

    def take_bands(self, count: int) -> "HyperCube":
        """First ``count`` bands as a new cube (same start/step)."""
        if not 1 <= count <= self.bands:
            raise DimensionError(f"cannot take {count} of {self.bands} bands")
        plan = BandPlan(count, self.plan.start_nm, self.plan.step_nm,
                        self.plan.bandwidth_nm)
        return HyperCube(self.values[:count].copy(), plan)


@dataclass(frozen=True)
class Illuminant:
    """Relative spectral power per band, peak-normalized to 1."""

    temperature_k: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise DimensionError("illuminant needs a 1-D per-band power vector")
        if np.any(v <= 0.0):
            raise DomainError("illuminant power values must be positive")
        if not math.isclose(float(v.max()), 1.0, rel_tol=1e-12):
            raise DomainError("illuminant must be peak-normalized to 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def planck_radiance(wavelength_m, temperature_k: float):
    """Planck spectral radiance B(lambda, T) in W sr^-1 m^-3."""
    lam = np.asarray(wavelength_m, dtype=np.float64)
    hc = PLANCK_H * SPEED_OF_LIGHT
    return (2.0 * hc * SPEED_OF_LIGHT / lam**5
            / np.expm1(hc / (lam * BOLTZMANN_K * temperature_k)))


def planck_illuminant(temperature_k: float, plan: BandPlan) -> Illuminant:
    """Blackbody illuminant sampled at band centers, peak-normalized.

    The 10 nm filter bandwidth is narrow compared to the spectral variation
    of the Planck curve, so the center sample stands in for the band average.
    """
    if temperature_k <= 0:
        raise DomainError(f"temperature must be positive, got {temperature_k}")
    power = planck_radiance(plan.centers_nm * 1e-9, temperature_k)
    return Illuminant(temperature_k, power / power.max())


def render_rgb_preview(cube: HyperCube, plan: BandPlan | None = None) -> np.ndarray:
    """Linear-sRGB preview of a cube, shape (height, width, 3) in [0, 1].

    The spectrum at each pixel is integrated against the CIE 1931 curves with
    a rectangle rule of width ``step_nm``, converted to linear sRGB, then
    normalized per channel so a spectrally flat value-1.0 pixel maps to
    (1, 1, 1) exactly.
    """
    if plan is None:
        plan = cube.plan
    elif plan != cube.plan:
        raise DimensionError(f"band plan mismatch: cube {cube.plan}, preview {plan}")
    centers = plan.centers_nm
    if centers.min() < 360.0 or centers.max() > 830.0:
        raise DomainError("band centers outside 360-830 nm cannot be previewed")
    cmf = color_matching(centers) * plan.step_nm          # (bands, 3)
    xyz = np.tensordot(cube.values.astype(np.float64), cmf, axes=(0, 0))
    rgb = xyz @ XYZ_TO_SRGB.T
    white_rgb = XYZ_TO_SRGB @ cmf.sum(axis=0)             # flat spectrum at 1.0
    rgb /= white_rgb
    return np.clip(rgb, 0.0, 1.0)


def srgb_encode(linear: np.ndarray) -> np.ndarray:
    """Standard sRGB transfer curve, for 8-bit emission of linear previews."""
    lin = np.clip(np.asarray(linear, dtype=np.float64), 0.0, 1.0)
    return np.where(lin <= 0.0031308, 12.92 * lin,
                    1.055 * np.power(lin, 1.0 / 2.4) - 0.055)


def save_cube(cube: HyperCube, path) -> None:
    """Write the ``HSC1`` cube format: ASCII header + little-endian float32."""
    header = (f"HSC1 {cube.width} {cube.height} {cube.bands} "
              f"{cube.plan.start_nm!r} {cube.plan.step_nm!r}\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(cube.values, dtype="<f4").tobytes())


def load_cube(path) -> HyperCube:
    """Read an ``HSC1`` file back into a cube (bandwidth defaults to the step)."""
    with open(path, "rb") as fh:
        header = bytearray()
        while not header.endswith(b"\n"):
            ch = fh.read(1)
            if not ch:
                raise DimensionError(f"{path}: truncated HSC1 header")
            header += ch
        fields = header.decode("ascii").split()
        if len(fields) != 6 or fields[0] != "HSC1":
            raise DimensionError(f"{path}: not an HSC1 cube file")
        width, height, bands = (int(f) for f in fields[1:4])
        start_nm, step_nm = float(fields[4]), float(fields[5])
        raw = fh.read(4 * width * height * bands)
    values = np.frombuffer(raw, dtype="<f4").reshape(bands, height, width)
    plan = BandPlan(bands, start_nm, step_nm, bandwidth_nm=step_nm)
    return HyperCube(values.copy(), plan)
