"""Dual-exposure fusion: blend the input with a synthetic brighter exposure."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .camera import CameraModel, apply_btf
from .illumination import SolverConfig, estimate_illumination
from .sampler import KSearchConfig, optimal_k


@dataclass(frozen=True)
class EnhanceConfig:
    mu: float = 0.5
    solver: SolverConfig = field(default_factory=SolverConfig)
    camera: CameraModel = field(default_factory=CameraModel)
    ksearch: KSearchConfig = field(default_factory=KSearchConfig)

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be >= 0")


@dataclass
class EnhanceOutput:
    result: np.ndarray
    illumination: np.ndarray
    weight: np.ndarray
    synthetic: np.ndarray
    k_hat: float
    timings: dict[str, float]


def weight_map(T: np.ndarray, mu: float) -> np.ndarray:
    return np.power(T, mu)


def fuse_weighted(images: Sequence[np.ndarray], weights: Sequence[np.ndarray]) -> np.ndarray:
    """Per-pixel weighted sum of N images after normalising the weights to sum to one.

    Pixels where every weight is zero get equal weights.
    """
    if len(images) != len(weights) or not images:
        raise ValueError("need one weight map per image")
    shape = images[0].shape
    for img, w in zip(images, weights):
        if img.shape != shape or w.shape != shape[:2]:
            raise ValueError("images and weight maps must share dimensions")
    total = np.sum(weights, axis=0)
    empty = total == 0
    out = np.zeros(shape)
    for img, w in zip(images, weights):
        norm = np.where(empty, 1.0 / len(images), w / np.where(empty, 1.0, total))
        out += norm[..., None] * img
    return np.clip(out, 0.0, 1.0)


def fuse(P: np.ndarray, synthetic: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``W * P + (1 - W) * synthetic`` per channel, clamped to [0, 1]."""
    return fuse_weighted([P, synthetic], [W, 1.0 - W])


def enhance(P: np.ndarray, cfg: EnhanceConfig | None = None, k: float | None = None) -> EnhanceOutput:
    """Run the full pipeline. Pass ``k`` to skip the exposure-ratio search."""
    cfg = cfg or EnhanceConfig()
    timings = {}

    t0 = time.perf_counter()
    T = estimate_illumination(P, cfg.solver)
    timings["illumination"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    W = weight_map(T, cfg.mu)
    timings["weights"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    k_hat = optimal_k(P, T, cfg.camera, cfg.ksearch) if k is None else float(k)
    timings["k_search"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    synthetic = apply_btf(P, cfg.camera, k_hat)
    result = fuse(P, synthetic, W)
    timings["fusion"] = time.perf_counter() - t0

    return EnhanceOutput(result=result, illumination=T, weight=W, synthetic=synthetic,
                         k_hat=k_hat, timings=timings)
