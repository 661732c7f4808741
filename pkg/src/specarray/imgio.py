"""Image file helpers: 16-bit PGM for captures, 8-bit PNG for previews."""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import DimensionError
from .spectral import srgb_encode


def write_pgm16(path, image: np.ndarray) -> None:
    """Write a [0,1] grayscale image as binary 16-bit PGM (big-endian)."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise DimensionError(f"PGM wants a 2-D image, got shape {img.shape}")
    q = np.round(np.clip(img, 0.0, 1.0) * 65535.0).astype(">u2")
    h, w = q.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(q.tobytes())


def read_pgm16(path) -> np.ndarray:
    """Read a binary PGM back into a [0,1] float32 image."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise DimensionError(f"{path}: not a binary PGM file")
    fields, pos = [], 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":  # comment line
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(int(data[pos:end]))
        pos = end
    pos += 1
    w, h, maxval = fields
    dtype = ">u2" if maxval > 255 else "u1"
    img = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos).reshape(h, w)
    return (img.astype(np.float32) / maxval).astype(np.float32)


def save_gray_png(path, image: np.ndarray) -> None:
    """8-bit grayscale PNG from a [0,1] image (values clipped)."""
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    Image.fromarray(np.round(img * 255.0).astype(np.uint8), mode="L").save(path)


def save_mask_png(path, mask: np.ndarray) -> None:
    """Binary mask preview: visible pixels white, masked pixels black."""
    save_gray_png(path, np.asarray(mask, dtype=np.float64))


def save_rgb_png(path, linear_rgb: np.ndarray) -> None:
    """8-bit PNG from a linear-sRGB preview, companded with the sRGB curve."""
    if linear_rgb.ndim != 3 or linear_rgb.shape[2] != 3:
        raise DimensionError(f"expected (h, w, 3) RGB, got {linear_rgb.shape}")
    enc = srgb_encode(linear_rgb)
    Image.fromarray(np.round(enc * 255.0).astype(np.uint8), mode="RGB").save(path)
