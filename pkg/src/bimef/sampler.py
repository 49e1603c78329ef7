"""Exposure-ratio search: pick ``k`` that maximises the entropy of the
brightened under-exposed pixels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import xlogy

from .camera import CameraModel, apply_btf
from .image import entropy, geometric_brightness, histogram, resize_nearest

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class KSearchConfig:
    under_exposed_threshold: float = 0.5
    thumb_size: int = 50
    k_min: float = 1.0
    k_max: float = 100.0
    coarse_steps: int = 50
    refine_tol: float = 1e-3
    n_bins: int = 256
    method: Literal["sweep", "golden"] = "sweep"

    def __post_init__(self):
        if not 0 < self.k_min < self.k_max:
            raise ValueError("need 0 < k_min < k_max")
        if self.coarse_steps < 3:
            raise ValueError("coarse_steps must be >= 3")
        if self.thumb_size < 1 or self.refine_tol <= 0:
            raise ValueError("thumb_size must be >= 1 and refine_tol > 0")
        if self.method not in ("sweep", "golden"):
            raise ValueError(f"unknown k-search method {self.method!r}")

    def coarse_grid(self) -> np.ndarray:
        return np.exp(np.linspace(math.log(self.k_min), math.log(self.k_max), self.coarse_steps))


def extract_under_exposed(img: np.ndarray, T: np.ndarray, cfg: KSearchConfig) -> np.ndarray:
    """Brightness values of the thumbnail pixels whose illumination is below the threshold."""
    if img.shape[:2] != T.shape:
        raise ValueError(f"image {img.shape[:2]} and illumination {T.shape} differ in size")
    n = cfg.thumb_size
    thumb = resize_nearest(img, n, n)
    mask = resize_nearest(T, n, n) < cfg.under_exposed_threshold
    return geometric_brightness(thumb)[mask]


def entropy_of_enhanced(q: np.ndarray, model: CameraModel, k: float, n_bins: int = 256) -> float:
    if q.size == 0:
        raise ValueError("under-exposed set is empty")
    enhanced = np.clip(apply_btf(q, model, k), 0.0, 1.0)
    return entropy(histogram(enhanced, n_bins))


def _bins(values: np.ndarray, n_bins: int) -> np.ndarray:
    return np.clip(np.floor(np.clip(values, 0.0, 1.0) * n_bins), 0, n_bins - 1).astype(np.intp)


def entropy_pieces(q: np.ndarray, model: CameraModel, cfg: KSearchConfig) -> tuple[np.ndarray, np.ndarray]:
    """Exact entropy of the enhanced histogram as a step function of ``log k``.

    Returns ``(starts, entropies)``: on ``[starts[i], starts[i+1])`` (the last
    piece ends at ``log k_max``) the entropy is constant. A value ``v`` hits
    bin edge ``e`` when ``k**a = (ln e - b) / (ln v - b)``, so every
    breakpoint is known in closed form and the counts can be swept in order.
    """
    n_bins = cfg.n_bins
    lo, hi = math.log(cfg.k_min), math.log(cfg.k_max)
    values, mult = np.unique(q, return_counts=True)
    n = float(q.size)

    b0 = _bins(apply_btf(values, model, cfg.k_min), n_bins)
    b1 = _bins(apply_btf(values, model, cfg.k_max), n_bins)
    counts0 = np.bincount(b0, weights=mult, minlength=n_bins)
    start_h = (math.log(n) - xlogy(counts0, counts0).sum() / n) / math.log(2)

    # one event per (value, crossed edge); edge index i separates bins i-1 and i
    steps = np.abs(b1 - b0)
    owner = np.repeat(np.arange(values.size), steps)
    if owner.size == 0:
        return np.array([lo]), np.array([start_h])
    offset = np.arange(owner.size) - np.repeat(np.cumsum(steps) - steps, steps)
    up = b1[owner] > b0[owner]
    edge = np.where(up, b0[owner] + 1 + offset, b0[owner] - offset)
    src = np.where(up, edge - 1, edge)
    dst = np.where(up, edge, edge - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = (np.log(edge / n_bins) - model.b) / (np.log(values[owner]) - model.b)
        t = np.log(gamma) / model.a
    t = np.clip(np.nan_to_num(t, nan=lo), lo, hi)
    m = mult[owner].astype(np.float64)

    order = np.argsort(t, kind="stable")
    t, src, dst, m = t[order], src[order], dst[order], m[order]
    n_ev = t.size

    # per-bin running counts: each event leaves src and enters dst
    touch_bin = np.concatenate([src, dst])
    touch_ev = np.concatenate([np.arange(n_ev), np.arange(n_ev)])
    touch_delta = np.concatenate([-m, m])
    by_bin = np.lexsort((touch_ev, touch_bin))
    tb, te, td = touch_bin[by_bin], touch_ev[by_bin], touch_delta[by_bin]
    seg_start = np.r_[True, tb[1:] != tb[:-1]]
    run = np.cumsum(td)
    base = np.repeat(run[seg_start] - td[seg_start], np.diff(np.r_[np.flatnonzero(seg_start), tb.size]))
    after = counts0[tb] + run - base
    before = after - td
    d_s = xlogy(after, after) - xlogy(before, before)
    per_event = np.bincount(te, weights=d_s, minlength=n_ev)

    s_total = xlogy(counts0, counts0).sum() + np.cumsum(per_event)
    h = (math.log(n) - s_total / n) / math.log(2)
    # simultaneous events form one breakpoint; keep the state after the last
    last = np.r_[t[1:] != t[:-1], True]
    starts = np.r_[lo, t[last]]
    ent = np.r_[start_h, h[last]]
    if starts.size > 1 and starts[1] == lo:
        starts, ent = starts[1:], ent[1:]
    return starts, ent


def _sweep_k(q: np.ndarray, model: CameraModel, cfg: KSearchConfig) -> float:
    starts, ent = entropy_pieces(q, model, cfg)
    ends = np.r_[starts[1:], math.log(cfg.k_max)]
    # sliver pieces can flip under rounding when re-evaluated; avoid them if possible
    usable = (ends - starts) > 1e-9
    if not usable.any():
        usable[:] = True
    ent = np.where(usable, ent, -np.inf)
    # ties (a plateau once every value sits in its own bin) resolve to the
    # maximising piece nearest the middle of the maximising span
    best = np.flatnonzero(ent >= ent.max() - 1e-12)
    center = 0.5 * (starts[best[0]] + ends[best[-1]])
    gap = np.maximum(starts[best] - center, 0) + np.maximum(center - ends[best], 0)
    pick = best[int(np.argmin(gap))]
    if gap.min() == 0 and starts[pick] + 1e-10 < center < ends[pick] - 1e-10:
        return math.exp(center)
    return math.exp(0.5 * (starts[pick] + ends[pick]))


def _golden_k(score, cfg: KSearchConfig) -> float:
    grid = np.log(cfg.coarse_grid())
    values = [score(x) for x in grid]
    i = int(np.argmax(values))
    best_x, best_h = float(grid[i]), values[i]

    lo, hi = float(grid[max(i - 1, 0)]), float(grid[min(i + 1, len(grid) - 1)])
    c, d = hi - _INV_PHI * (hi - lo), lo + _INV_PHI * (hi - lo)
    fc, fd = score(c), score(d)
    while hi - lo > cfg.refine_tol:
        for x, f in ((c, fc), (d, fd)):
            if f > best_h:
                best_x, best_h = x, f
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = score(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = score(d)
    for x, f in ((c, fc), (d, fd)):
        if f > best_h:
            best_x, best_h = x, f
    return math.exp(best_x)


def optimal_k(img: np.ndarray, T: np.ndarray, model: CameraModel, cfg: KSearchConfig) -> float:
    """Entropy-maximising exposure ratio, or 1.0 when nothing is under-exposed.

    ``method="sweep"`` finds the exact maximiser of the step-function entropy
    over ``[k_min, k_max]``. ``method="golden"`` scans a log-spaced grid and
    refines around the best point with golden-section search; it is cheaper
    in evaluations but can stop on a local step. Either way the result is
    never worse than the best coarse grid point.
    """
    q = extract_under_exposed(img, T, cfg)
    if q.size == 0:
        return 1.0

    def score(log_k: float) -> float:
        return entropy_of_enhanced(q, model, math.exp(log_k), cfg.n_bins)

    if cfg.method == "golden":
        return _golden_k(score, cfg)
    k = _sweep_k(q, model, cfg)
    grid = cfg.coarse_grid()
    grid_h = [score(math.log(g)) for g in grid]
    i = int(np.argmax(grid_h))
    return k if score(math.log(k)) >= grid_h[i] else float(grid[i])
