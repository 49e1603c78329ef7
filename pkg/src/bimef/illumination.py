"""Illumination map refinement by a weighted, edge-aware least-squares solve.

The initial estimate is the lightness map ``L``. The refined map ``T``
minimises ``sum (T - L)^2 + lam * sum_d w_d * (grad_d T)^2`` whose normal
equations are the sparse system ``(I + sum_d D_d^T diag(w_d) D_d) t = l``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
import scipy.sparse as sp
from scipy.ndimage import convolve1d
from scipy.sparse.linalg import splu

from .image import lightness

log = logging.getLogger(__name__)

Direction = Literal["horizontal", "vertical"]
_AXIS = {"horizontal": 1, "vertical": 0}


class SolverError(RuntimeError):
    """Conjugate gradients did not reach the requested residual."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 1.0
    epsilon: float = 1e-3
    window: int = 5
    pcg_tol: float = 1e-5
    pcg_max_iter: int = 1000
    preconditioner: Literal["lu", "amg", "jacobi"] = "lu"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError("window must be a positive odd integer")
        if self.pcg_tol <= 0 or self.pcg_max_iter < 1:
            raise ValueError("pcg_tol must be > 0 and pcg_max_iter >= 1")
        if self.preconditioner not in ("lu", "amg", "jacobi"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass(frozen=True)
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    shape: tuple[int, int]

    @property
    def dimension(self) -> int:
        return self.rhs.size


def gradient(values: np.ndarray, direction: Direction) -> np.ndarray:
    """Forward difference ``next - current``; zero on the trailing row/column."""
    axis = _AXIS[direction]
    out = np.zeros_like(values, dtype=np.float64)
    if axis == 1:
        out[:, :-1] = values[:, 1:] - values[:, :-1]
    else:
        out[:-1, :] = values[1:, :] - values[:-1, :]
    return out


def texture_weights(L: np.ndarray, cfg: SolverConfig) -> tuple[np.ndarray, np.ndarray]:
    """Directional weights ``1 / (|windowed gradient sum| + eps)``.

    The window is 1-D, ``cfg.window`` long, centered on the pixel and running
    along the gradient direction; it is truncated at the image border. A real
    edge accumulates same-sign gradients and gets a small weight, while
    oscillating texture cancels out and gets smoothed hard.
    """
    kernel = np.ones(cfg.window)
    weights = []
    for direction in ("horizontal", "vertical"):
        g = gradient(L, direction)
        summed = convolve1d(g, kernel, axis=_AXIS[direction], mode="constant", cval=0.0)
        weights.append(1.0 / (np.abs(summed) + cfg.epsilon))
    return weights[0], weights[1]


def assemble_system(L: np.ndarray, M_h: np.ndarray, M_v: np.ndarray, cfg: SolverConfig) -> SparseSystem:
    if not (L.shape == M_h.shape == M_v.shape) or L.ndim != 2:
        raise ValueError(f"map shapes differ: {L.shape}, {M_h.shape}, {M_v.shape}")
    h, w = L.shape
    n = h * w
    idx = np.arange(n).reshape(h, w)

    w_h = cfg.lam * M_h / (np.abs(gradient(L, "horizontal")) + cfg.epsilon)
    w_v = cfg.lam * M_v / (np.abs(gradient(L, "vertical")) + cfg.epsilon)
    # edges exist only between a pixel and its right / lower neighbour
    eh = w_h[:, :-1].ravel()
    ev = w_v[:-1, :].ravel()
    src = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    dst = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    ew = np.concatenate([eh, ev])

    diag = np.ones(n)
    np.add.at(diag, src, ew)
    np.add.at(diag, dst, ew)
    rows = np.concatenate([np.arange(n), src, dst])
    cols = np.concatenate([np.arange(n), dst, src])
    vals = np.concatenate([diag, -ew, -ew])
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    A.sum_duplicates()
    return SparseSystem(matrix=A, rhs=L.astype(np.float64).ravel(), shape=(h, w))


def nested_dissection_order(h: int, w: int, leaf: int = 4) -> np.ndarray:
    """Fill-reducing elimination order for an ``h x w`` 5-point grid.

    Recursively splits the grid along its longer side; each separator line
    is eliminated after both halves.
    """
    idx = np.arange(h * w).reshape(h, w)
    order: list[np.ndarray] = []
    stack: list[tuple[np.ndarray, bool]] = [(idx, False)]
    # explicit stack: (block, already_split) so separators land after both halves
    while stack:
        block, emit = stack.pop()
        if emit:
            order.append(block.ravel())
            continue
        bh, bw = block.shape
        if bh * bw <= leaf * leaf or min(bh, bw) < 3:
            order.append(block.ravel())
        elif bh >= bw:
            m = bh // 2
            stack += [(block[m], True), (block[m + 1:], False), (block[:m], False)]
        else:
            m = bw // 2
            stack += [(block[:, m], True), (block[:, m + 1:], False), (block[:, :m], False)]
    return np.concatenate(order)


def _preconditioner(system: SparseSystem, kind: str) -> Callable[[np.ndarray], np.ndarray]:
    A = system.matrix
    if kind == "jacobi":
        inv_diag = 1.0 / A.diagonal()
        return lambda r: inv_diag * r
    if kind == "amg":
        import pyamg

        ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric")
        return ml.aspreconditioner(cycle="V").matvec
    perm = nested_dissection_order(*system.shape)
    lu = splu(A[perm][:, perm].tocsc(), permc_spec="NATURAL", diag_pivot_thresh=0.0,
              options={"SymmetricMode": True})

    def apply(r: np.ndarray) -> np.ndarray:
        z = np.empty_like(r)
        z[perm] = lu.solve(r[perm])
        return z

    return apply


def pcg(A: sp.csr_matrix, b: np.ndarray, x0: np.ndarray, precond: Callable[[np.ndarray], np.ndarray],
        tol: float, max_iter: int) -> tuple[np.ndarray, float, int]:
    """Preconditioned conjugate gradients; returns (x, relative residual, iterations)."""
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros_like(b), 0.0, 0
    x = x0.copy()
    r = b - A @ x
    res = np.linalg.norm(r) / b_norm
    if res <= tol:
        return x, res, 0
    z = precond(r)
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / b_norm
        if res <= tol:
            return x, res, it
        z = precond(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, res, max_iter


def solve(system: SparseSystem, cfg: SolverConfig) -> np.ndarray:
    """Solve the illumination system and clamp the map to ``[epsilon, 1]``."""
    A, b = system.matrix, system.rhs
    # rhs is the natural start: exact when lam == 0 or the input is constant
    precond = _preconditioner(system, cfg.preconditioner) if cfg.lam > 0 else (lambda r: r)
    t, res, iters = pcg(A, b, b.copy(), precond, cfg.pcg_tol, cfg.pcg_max_iter)
    if res > cfg.pcg_tol:
        raise SolverError(
            f"PCG stopped after {iters} iterations at relative residual {res:.3e} > {cfg.pcg_tol:.1e}",
            residual=res, iterations=iters,
        )
    log.debug("pcg converged in %d iterations (residual %.2e)", iters, res)
    return np.clip(t.reshape(system.shape), cfg.epsilon, 1.0)


def objective(t: np.ndarray, L: np.ndarray, M_h: np.ndarray, M_v: np.ndarray, cfg: SolverConfig) -> float:
    """Value of the quadratic energy minimised by :func:`solve`."""
    e = np.sum((t - L) ** 2)
    for M, d in ((M_h, "horizontal"), (M_v, "vertical")):
        e += cfg.lam * np.sum(M * gradient(t, d) ** 2 / (np.abs(gradient(L, d)) + cfg.epsilon))
    return float(e)


def estimate_illumination(img: np.ndarray, cfg: SolverConfig | None = None) -> np.ndarray:
    cfg = cfg or SolverConfig()
    L = lightness(img)
    M_h, M_v = texture_weights(L, cfg)
    return solve(assemble_system(L, M_h, M_v, cfg), cfg)
