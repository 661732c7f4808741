"""Geometry of the 37-camera layouts: poses, baselines, hull footprint, data rate.

Two arrangements are supported: a hexagonal patch (center + rings of 6, 12
and 18 on a triangular lattice) and the 37 square-lattice points closest to
the origin (squared lattice radius <= 10).  Bands are assigned along an
outward spiral so that spectrally neighboring cameras sit spatially close;
the center camera carries band 18 (580 nm in the default plan).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError

NUM_CAMERAS = 37
CENTER_BAND = 18


@dataclass(frozen=True)
class CameraPose:
    """One camera: position in the array plane plus its derived epipolar data."""

    id: int
    position_mm: tuple[float, float]
    band: int
    baseline_mm: float
    direction: tuple[float, float]   # unit vector center -> camera, (0,0) at center

    @staticmethod
    def at(cam_id: int, x_mm: float, y_mm: float, band: int) -> "CameraPose":
        x_mm, y_mm = float(x_mm), float(y_mm)
        r = math.hypot(x_mm, y_mm)
        u = (x_mm / r, y_mm / r) if r > 0 else (0.0, 0.0)
        return CameraPose(cam_id, (x_mm, y_mm), band, r, u)

    @property
    def is_center(self) -> bool:
        return self.baseline_mm == 0.0


@dataclass(frozen=True)
class ArrayLayout:
    kind: str                      # "hexagonal" | "orthogonal"
    spacing_mm: float
    poses: tuple[CameraPose, ...]

    def __post_init__(self):
        if self.spacing_mm <= 0:
            raise DomainError("lattice spacing must be positive")
        if len(self.poses) != NUM_CAMERAS:
            raise ConfigurationError(
                f"layout needs exactly {NUM_CAMERAS} cameras, got {len(self.poses)}")
        pts = np.array([p.position_mm for p in self.poses], dtype=np.float64)
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        np.fill_diagonal(d2, np.inf)
        if np.min(d2) <= 0:
            raise ConfigurationError("camera positions must be pairwise distinct")
        centers = [p for p in self.poses if p.baseline_mm == 0.0]
        if len(centers) != 1:
            raise ConfigurationError("layout needs exactly one camera at the origin")
        nn = np.sqrt(np.min(d2, axis=1))
        if not np.allclose(nn, self.spacing_mm, rtol=1e-9, atol=1e-9):
            raise ConfigurationError(
                "nearest-neighbor distance must equal the lattice spacing everywhere")

    @property
    def center(self) -> CameraPose:
        return next(p for p in self.poses if p.is_center)

    @property
    def peripherals(self) -> tuple[CameraPose, ...]:
        return tuple(p for p in self.poses if not p.is_center)

    def pose(self, cam_id: int) -> CameraPose:
        return next(p for p in self.poses if p.id == cam_id)

    def positions(self) -> np.ndarray:
        return np.array([p.position_mm for p in self.poses])

    def max_baseline_mm(self) -> float:
        return max(p.baseline_mm for p in self.poses)

    def nearest_peripherals(self, count: int) -> tuple[CameraPose, ...]:
        """The ``count`` peripheral cameras closest to the center (ties by id)."""
        ordered = sorted(self.peripherals, key=lambda p: (p.baseline_mm, p.id))
        return tuple(ordered[:count])


def _spiral_poses(points_mm: list[tuple[float, float]]) -> tuple[CameraPose, ...]:
    """Assign ids/bands along an outward spiral; the center gets CENTER_BAND."""
    def key(pt):
        r = math.hypot(*pt)
        ang = math.atan2(pt[1], pt[0]) % (2.0 * math.pi)
        return (round(r, 9), ang)

    ordered = sorted(points_mm, key=key)
    poses = []
    for rank, (x, y) in enumerate(ordered):
        cam_id = (CENTER_BAND + rank) % NUM_CAMERAS
        poses.append(CameraPose.at(cam_id, x, y, band=cam_id))
    poses.sort(key=lambda p: p.id)
    return tuple(poses)


def build_hexagonal_layout(spacing_mm: float) -> ArrayLayout:
    """Center camera plus three concentric hexagonal rings (1+6+12+18 = 37)."""
    if spacing_mm <= 0:
        raise DomainError("spacing must be positive")
    pts = []
    for q in range(-3, 4):
        for r in range(-3, 4):
            if (abs(q) + abs(r) + abs(q + r)) // 2 <= 3:
                pts.append((spacing_mm * (q + 0.5 * r),
                            spacing_mm * (r * math.sqrt(3.0) / 2.0)))
    return ArrayLayout("hexagonal", spacing_mm, _spiral_poses(pts))


def build_orthogonal_layout(spacing_mm: float) -> ArrayLayout:
    """The 37 square-lattice points with squared lattice radius <= 10."""
    if spacing_mm <= 0:
        raise DomainError("spacing must be positive")
    pts = [(spacing_mm * i, spacing_mm * j)
           for i in range(-3, 4) for j in range(-3, 4)
           if i * i + j * j <= 10]
    return ArrayLayout("orthogonal", spacing_mm, _spiral_poses(pts))


def build_layout(kind: str, spacing_mm: float) -> ArrayLayout:
    if kind in ("hexagonal", "hex"):
        return build_hexagonal_layout(spacing_mm)
    if kind in ("orthogonal", "ortho"):
        return build_orthogonal_layout(spacing_mm)
    raise ConfigurationError(f"unknown layout kind {kind!r}")


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull vertices in counter-clockwise order (monotone chain)."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:  # collinear input collapses to a segment
        return np.array([pts[0], pts[-1]])
    return hull


def hull_area_of_points(points: np.ndarray, footprint_radius_mm: float = 0.0) -> float:
    """Area of the convex hull, optionally inflated by a disc of radius r.

    The Minkowski sum with a disc adds perimeter*r + pi*r^2 to the point-hull
    area; degenerate (collinear) hulls have zero base area.
    """
    if footprint_radius_mm < 0:
        raise DomainError("footprint radius must be >= 0")
    hull = convex_hull(points)
    r = footprint_radius_mm
    if len(hull) == 1:
        return math.pi * r * r
    if len(hull) == 2:
        length = float(np.hypot(*(hull[1] - hull[0])))
        return 2.0 * length * r + math.pi * r * r
    x, y = hull[:, 0], hull[:, 1]
    area = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    perimeter = float(np.sum(np.hypot(*(np.roll(hull, -1, axis=0) - hull).T)))
    return float(area + perimeter * r + math.pi * r * r)


def convex_hull_area(layout: ArrayLayout, footprint_radius_mm: float = 0.0) -> float:
    """Footprint area (mm^2) of a layout's camera positions."""
    return hull_area_of_points(layout.positions(), footprint_radius_mm)


def data_rate_gbit_s(num_cams: int, width_px: int, height_px: int,
                     bits_per_px: int, fps: float) -> float:
    """Raw data rate of the array in Gbit/s."""
    args = (num_cams, width_px, height_px, bits_per_px, fps)
    if any(a <= 0 for a in args):
        raise DomainError("all data-rate factors must be positive")
    return num_cams * width_px * height_px * bits_per_px * fps / 1e9


def layout_to_dict(layout: ArrayLayout) -> dict:
    return {
        "kind": layout.kind,
        "spacing_mm": layout.spacing_mm,
        "cameras": [
            {"id": p.id, "position_mm": list(p.position_mm), "band": p.band}
            for p in layout.poses
        ],
    }


def layout_from_dict(data: dict) -> ArrayLayout:
    poses = tuple(
        CameraPose.at(int(c["id"]), float(c["position_mm"][0]),
                      float(c["position_mm"][1]), int(c["band"]))
        for c in data["cameras"]
    )
    return ArrayLayout(str(data["kind"]), float(data["spacing_mm"]), poses)


def save_layout(layout: ArrayLayout, path) -> None:
    with open(path, "w") as fh:
        json.dump(layout_to_dict(layout), fh, indent=2)
        fh.write("\n")


def load_layout(path) -> ArrayLayout:
    with open(path) as fh:
        return layout_from_dict(json.load(fh))
