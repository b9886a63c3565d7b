"""Schrödinger transfer-matrix cocycle over the skew-shift (or a circle rotation).

Products are carried as a 2x2 matrix with a separate natural-log scale so
that large couplings and long chains never overflow.  Torus averages of
``Tr[M^T M]`` use equidistant product grids, which integrate the trigonometric
polynomial integrand exactly once the grid is large enough.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._parallel import mean_stderr, run_chunked, uniform_samples
from .torus import TorusPoint, amo_potentials, as_frequency, skew_potentials

__all__ = [
    "GridWarning",
    "ScaledProduct",
    "LyapunovEstimate",
    "transfer_matrix",
    "cocycle_product",
    "trace_mstar_m",
    "default_grid",
    "check_grid",
    "torus_grid",
    "p_n_grid",
    "jensen_rate",
    "lyapunov_mc",
]

POTENTIALS = ("skew", "amo")


class GridWarning(UserWarning):
    """An averaging grid is below the size that makes the quadrature exact."""


def transfer_matrix(E: float, lam: float, v: float) -> np.ndarray:
    return np.array([[E - lam * v, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class ScaledProduct:
    """``exp(log_scale) * matrix`` equals the product ``A_n ... A_1``."""

    matrix: np.ndarray
    log_scale: float = 0.0

    @classmethod
    def identity(cls):
        return cls(np.eye(2), 0.0)

    def unscaled(self):
        return math.exp(self.log_scale) * self.matrix


def _check_potential(potential):
    if potential not in POTENTIALS:
        raise ValueError(f"potential must be one of {POTENTIALS}, got {potential!r}")
    return potential == "amo"


def cocycle_product(n, lam, E, point: TorusPoint, omega, potential="skew", scaled=True) -> ScaledProduct:
    """Ordered product ``A_n ... A_1`` at one torus point.

    For the ``amo`` potential the phase ``theta`` is taken from ``point.x``.
    With ``scaled=False`` no renormalisation happens (testing only).
    """
    if n < 1:
        raise ValueError("cocycle_product needs n >= 1")
    amo = _check_potential(potential)
    hi, lo, p, q = as_frequency(omega).kernel_args()
    m11, m12, m21, m22, ls = _kernels.cocycle_product(
        float(lam), float(E), point.x, point.y, hi, lo, p, q, int(n), amo, scaled)
    return ScaledProduct(np.array([[m11, m12], [m21, m22]]), ls)


def trace_mstar_m(prod: ScaledProduct) -> float:
    """``log Tr[M^T M]`` of the true (unscaled) product."""
    return 2.0 * prod.log_scale + math.log(float(np.sum(prod.matrix ** 2)))


def default_grid(n):
    """Smallest default grid ``(Nx, Ny)`` that integrates ``Tr[M_n^T M_n]`` exactly."""
    return 4 * n + 1, 2 * n * (n + 1) + 1


def check_grid(n, grid):
    nx, ny = grid
    need_x, need_y = default_grid(n)
    if nx < need_x or ny < need_y:
        warnings.warn(
            f"grid {nx}x{ny} below exactness threshold {need_x}x{need_y} for n={n}",
            GridWarning, stacklevel=3)
        return False
    return True


def torus_grid(grid):
    nx, ny = grid
    x = np.arange(nx) / nx
    y = np.arange(ny) / ny
    return np.meshgrid(x, y, indexing="ij")


def _trace_on_grid(n, lam, omega, grid, E=0.0):
    x, y = torus_grid(grid)
    v = skew_potentials(n, x, y, omega)
    m11 = np.ones_like(x)
    m12 = np.zeros_like(x)
    m21 = np.zeros_like(x)
    m22 = np.ones_like(x)
    for j in range(n):
        a = E - lam * v[j]
        m11, m12, m21, m22 = a * m11 - m21, a * m12 - m22, m11, m12
    return m11 ** 2 + m12 ** 2 + m21 ** 2 + m22 ** 2


def p_n_grid(n, lam, omega, grid=None, E=0.0) -> float:
    """Torus average of ``Tr[M_n^T M_n]`` on an equidistant ``Nx x Ny`` grid.

    Exact (up to rounding) when ``Nx >= 4n+1`` and ``Ny >= 2n(n+1)+1``;
    smaller grids emit a :class:`GridWarning`.
    """
    if n < 1:
        raise ValueError("p_n_grid needs n >= 1")
    grid = default_grid(n) if grid is None else tuple(grid)
    check_grid(n, grid)
    return float(np.mean(_trace_on_grid(n, lam, as_frequency(omega), grid, E)))


def jensen_rate(n, lam, omega, grid=None) -> float:
    """``(1/n) log P_n(lam, 0)``, the Jensen upper bound on the Lyapunov exponent."""
    return math.log(p_n_grid(n, lam, omega, grid)) / n


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    stderr: float
    samples: int
    n: int
    seed: int


def lyapunov_mc(lam, E, omega, n, samples, seed, potential="skew", threads=None) -> LyapunovEstimate:
    """Mean of ``(1/n) log Tr[M_n^T M_n]`` over ``samples`` uniform torus points.

    Sample ``i`` uses the ``i``-th row of the Philox stream keyed by ``seed``,
    so the result is bit-identical for any thread count.
    """
    if n < 1 or samples < 1:
        raise ValueError("lyapunov_mc needs n >= 1 and samples >= 1")
    amo = _check_potential(potential)
    hi, lo, p, q = as_frequency(omega).kernel_args()
    pts = uniform_samples(seed, samples, 2)
    xs = np.ascontiguousarray(pts[:, 0])
    ys = np.ascontiguousarray(pts[:, 1])
    out = np.empty(samples)

    def work(a, b):
        _kernels.log_trace_batch(float(lam), float(E), xs[a:b], ys[a:b],
                                 hi, lo, p, q, int(n), amo, out[a:b])

    run_chunked(work, samples, threads)
    value, stderr = mean_stderr(out / n)
    return LyapunovEstimate(value, stderr, samples, n, seed)


def potentials_on(n, x, y, omega, potential="skew"):
    """Potential values ``v_1..v_n`` at torus coordinates (``x`` is theta for amo)."""
    if _check_potential(potential):
        return amo_potentials(n, x, omega)
    return skew_potentials(n, x, y, omega)
