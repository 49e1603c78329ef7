"""Lightness order error (LOE) between an image and its enhanced version."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import lightness, resize_nearest


@dataclass(frozen=True)
class LoeConfig:
    sample_size: int = 100

    def __post_init__(self):
        if self.sample_size < 2:
            raise ValueError("sample_size must be >= 2")


def loe_from_lightness(L: np.ndarray, L_enh: np.ndarray, block: int = 512) -> float:
    """Mean over pixels x of the number of pixels y whose order relative to x flips.

    Order is ``U(p, q) = p >= q``, so ties count as ordered.
    """
    a = np.asarray(L, dtype=np.float64).ravel()
    b = np.asarray(L_enh, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError("lightness maps differ in size")
    m = a.size
    total = 0
    for s in range(0, m, block):
        flips = (a[s:s + block, None] >= a[None, :]) ^ (b[s:s + block, None] >= b[None, :])
        total += int(np.count_nonzero(flips))
    return total / m


def loe(original: np.ndarray, enhanced: np.ndarray, cfg: LoeConfig | None = None) -> float:
    cfg = cfg or LoeConfig()
    if original.shape != enhanced.shape:
        raise ValueError(f"image sizes differ: {original.shape} vs {enhanced.shape}")
    n = cfg.sample_size
    return loe_from_lightness(resize_nearest(lightness(original), n, n),
                              resize_nearest(lightness(enhanced), n, n))
