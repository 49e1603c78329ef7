"""Camera response model: the brightness transform ``g(P, k) = beta * P**gamma``.

For camera parameters ``(a, b)`` and exposure ratio ``k`` the transform has
``gamma = k**a`` and ``beta = exp(b * (1 - k**a))``. The matching camera
response function is ``f(E) = exp(b * (1 - E**a))``, which satisfies
``f(k E) = beta * f(E)**gamma`` for every ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_A = -0.3293
DEFAULT_B = 1.1258


@dataclass(frozen=True)
class CameraModel:
    a: float = DEFAULT_A
    b: float = DEFAULT_B

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("camera parameters must be finite")
        if self.a == 0:
            raise ValueError("camera parameter a must be non-zero")


@dataclass(frozen=True)
class BtfParams:
    beta: float
    gamma: float
    k: float


def _check_ratio(k: float) -> None:
    if not k > 0:
        raise ValueError(f"exposure ratio must be > 0, got {k}")


def btf_params(model: CameraModel, k: float) -> BtfParams:
    _check_ratio(k)
    gamma = k ** model.a
    return BtfParams(beta=math.exp(model.b * (1.0 - gamma)), gamma=gamma, k=k)


def apply_btf(values: np.ndarray, model: CameraModel, k: float) -> np.ndarray:
    """Simulate exposure ratio ``k`` on an image or scalar map.

    All channels share one transform. The result is not clamped: for
    ``k > 1`` bright values map above 1.
    """
    _check_ratio(k)
    v = np.asarray(values, dtype=np.float64)
    if k == 1:
        return v.copy()
    p = btf_params(model, k)
    return p.beta * np.power(v, p.gamma)


def crf(model: CameraModel, E, c: float | None = None):
    """Camera response ``f(E)``; pass ``c`` to evaluate the linear-BTF family ``E**c``."""
    E_arr = np.asarray(E, dtype=np.float64)
    if np.any(E_arr <= 0):
        raise ValueError("irradiance must be > 0")
    if c is not None:
        out = np.power(E_arr, c)
    else:
        out = np.exp(model.b * (1.0 - np.power(E_arr, model.a)))
    return float(out) if out.ndim == 0 else out
