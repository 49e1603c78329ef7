"""Image containers, PNG/JPEG I/O and the per-pixel primitives shared by the pipeline.

Images are ``float64`` arrays of shape ``(H, W, 3)`` holding linear values in
[0, 1]; scalar maps (lightness, illumination, weights, brightness) are
``(H, W)`` arrays. Both are plain numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError


class ImageFormatError(ValueError):
    """The file exists but is not a decodable 8-bit raster."""


def as_image(pixels) -> np.ndarray:
    """Validate and return ``pixels`` as an ``(H, W, 3)`` float64 image."""
    img = np.asarray(pixels, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    return img


def load_image(path: str | Path) -> np.ndarray:
    path = Path(path)
    try:
        with PILImage.open(path) as pil:
            pil.load()
            if pil.mode in ("I", "F") or pil.mode.startswith("I;16"):
                raise ImageFormatError(f"{path}: only 8-bit rasters are supported, got {pil.mode!r}")
            if pil.mode in ("1", "L", "LA"):
                pil = pil.convert("L")
            else:
                pil = pil.convert("RGB")
            data = np.asarray(pil, dtype=np.float64) / 255.0
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: not a decodable image") from exc
    if data.ndim == 2:
        data = np.repeat(data[:, :, None], 3, axis=2)
    return data


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(img: np.ndarray, path: str | Path) -> None:
    """Write an image (or a scalar map, as grayscale) to an 8-bit PNG."""
    data = to_uint8(np.asarray(img, dtype=np.float64))
    mode = "L" if data.ndim == 2 else "RGB"
    PILImage.fromarray(data, mode=mode).save(Path(path), format="PNG")


def lightness(img: np.ndarray) -> np.ndarray:
    """Per-pixel maximum over the three color channels."""
    return np.max(img, axis=2)


def geometric_brightness(img: np.ndarray) -> np.ndarray:
    """Per-pixel geometric mean of the three channels.

    Unlike the arithmetic mean this commutes with the power-law brightness
    transform, which is why exposure search runs on it.
    """
    return np.cbrt(img[..., 0] * img[..., 1] * img[..., 2])


def resize_nearest(src: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Center-aligned nearest-neighbour sampling of rows and columns.

    Output pixel ``(i, j)`` takes ``src[floor((i+.5)*H/out_h), floor((j+.5)*W/out_w)]``.
    No interpolation, so no new pixel values are created.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output size must be positive, got {out_w}x{out_h}")
    h, w = src.shape[:2]
    rows = np.floor((np.arange(out_h) + 0.5) * h / out_h).astype(np.intp)
    cols = np.floor((np.arange(out_w) + 0.5) * w / out_w).astype(np.intp)
    return src[rows[:, None], cols[None, :]].copy()


@dataclass(frozen=True)
class Histogram:
    bins: np.ndarray

    @property
    def total(self) -> int:
        return int(self.bins.sum())

    @property
    def n_bins(self) -> int:
        return len(self.bins)

    def probabilities(self) -> np.ndarray:
        total = self.total
        if total == 0:
            return np.zeros(self.n_bins)
        return self.bins / total


def histogram(values: np.ndarray, n_bins: int = 256) -> Histogram:
    """Count values into ``n_bins`` equal bins over [0, 1].

    A value ``v`` goes to bin ``floor(v * n_bins)``; out-of-range values,
    including exactly 1.0, are clamped into the end bins.
    """
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    v = np.asarray(values, dtype=np.float64).ravel()
    idx = np.clip(np.floor(v * n_bins), 0, n_bins - 1).astype(np.intp)
    return Histogram(np.bincount(idx, minlength=n_bins))


def entropy(h: Histogram) -> float:
    """Shannon entropy of the histogram in bits."""
    if h.total <= 0:
        raise ValueError("entropy of an empty histogram is undefined")
    p = h.probabilities()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))
