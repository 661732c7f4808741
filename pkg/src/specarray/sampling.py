"""Bilinear samplers shared by the renderer and the registration pipeline."""

from __future__ import annotations

import numpy as np


def bilinear_wrapped(image: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample with periodic (tiling) boundary; exact at integer coordinates."""
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0i = x0.astype(np.int64) % w
    y0i = y0.astype(np.int64) % h
    x1i = (x0i + 1) % w
    y1i = (y0i + 1) % h
    top = (1.0 - fx) * img[y0i, x0i] + fx * img[y0i, x1i]
    bot = (1.0 - fx) * img[y1i, x0i] + fx * img[y1i, x1i]
    return (1.0 - fy) * top + fy * bot


def bilinear_clamped(image: np.ndarray, xs: np.ndarray, ys: np.ndarray):
    """Sample with clamped coordinates; returns (values, valid).

    ``valid`` is True where the query point lies inside [0, w-1] x [0, h-1],
    i.e. where no extrapolation was needed.  At integer coordinates the
    result equals the source sample exactly.
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape
    valid = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    xq = np.clip(xs, 0, w - 1)
    yq = np.clip(ys, 0, h - 1)
    x0 = np.floor(xq)
    y0 = np.floor(yq)
    fx = xq - x0
    fy = yq - y0
    x0i = x0.astype(np.int64)
    y0i = y0.astype(np.int64)
    x1i = np.minimum(x0i + 1, w - 1)
    y1i = np.minimum(y0i + 1, h - 1)
    top = (1.0 - fx) * img[y0i, x0i] + fx * img[y0i, x1i]
    bot = (1.0 - fx) * img[y1i, x0i] + fx * img[y1i, x1i]
    return (1.0 - fy) * top + fy * bot, valid
