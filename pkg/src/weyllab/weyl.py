"""Quadratic Weyl sums and their statistics over random frequencies.

``S_m(w) = sum_{j<=m} e[w (j^2 - j)]`` and ``W_m(w) = sum_{j<=m} e[w j^2]``,
with ``e[t] = exp(2 pi i t)``.  Prefixes are built in one compensated pass;
frequency samples come from a seeded Philox stream and are processed in
fixed chunks, so every estimate is reproducible bit for bit.
"""

from __future__ import annotations

import cmath
import io
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._parallel import mean_stderr, run_chunked, uniform_samples
from .torus import Frequency, as_frequency, phase_product

__all__ = [
    "WeylPrefix",
    "PathPolyline",
    "MomentReport",
    "JvHEstimate",
    "HLStep",
    "weyl_prefix",
    "pure_weyl_prefix",
    "weyl_general",
    "parity_identity_check",
    "z_n",
    "second_moment_check",
    "sample_frequencies",
    "checkpoint_stats",
    "first_moment_estimate",
    "first_moment_curve",
    "cjvh_estimate",
    "good_set_measure",
    "good_set_persistence",
    "paley_zygmund_check",
    "hl_step",
    "hl_iterate",
    "curlicue_path",
]

SQRT2M1 = math.sqrt(2.0) - 1.0


@dataclass(frozen=True)
class WeylPrefix:
    """Prefix sums; ``values[m - 1]`` holds the sum with ``m`` terms."""

    omega: Frequency
    n: int
    values: np.ndarray
    kind: str  # "S" (with the -j shift) or "W" (pure quadratic)

    def at(self, m):
        return 0j if m == 0 else complex(self.values[m - 1])


def _prefix(n, omega, shift, compensated):
    if n < 1:
        raise ValueError("prefix length n must be >= 1")
    omega = as_frequency(omega)
    hi, lo, p, q = omega.kernel_args()
    out = np.empty(n, dtype=np.complex128)
    _kernels.weyl_prefix_into(hi, lo, p, q, int(n), shift, compensated, out)
    return omega, out


def weyl_prefix(n, omega, compensated=True) -> WeylPrefix:
    """All of ``S_1 .. S_n`` in a single O(n) pass."""
    omega, out = _prefix(n, omega, 1, compensated)
    return WeylPrefix(omega, n, out, "S")


def pure_weyl_prefix(n, omega, compensated=True) -> WeylPrefix:
    """All of ``W_1 .. W_n``."""
    omega, out = _prefix(n, omega, 0, compensated)
    return WeylPrefix(omega, n, out, "W")


def weyl_general(m, omega, xi) -> complex:
    """``sum_{j<=m} e[omega j^2 + xi j]`` for real ``omega`` and ``xi``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    whi, wlo = _kernels.split(float(omega))
    xhi, xlo = _kernels.split(float(xi))
    return complex(_kernels.weyl_general_sum(whi, wlo, xhi, xlo, int(m)))


def parity_identity_check(m, omega) -> float:
    """``| |S_m(w)| - |sum over odd j <= 2m-1 of e[w j^2 / 4]| |``."""
    omega = as_frequency(omega)
    lhs = abs(weyl_prefix(m, omega).at(m))
    quarter = (Frequency.rational(omega.p, 4 * omega.q) if omega.is_rational
               else Frequency.real(omega.value / 4.0))
    j = np.arange(1, 2 * m, 2, dtype=np.int64)
    ph = 2.0 * np.pi * phase_product(quarter, j * j)
    rhs = abs(complex(math.fsum(np.cos(ph)), math.fsum(np.sin(ph))))
    return abs(lhs - rhs)


def z_n(omega, n) -> float:
    """``sqrt(sum_{m<=n-1} |S_m|^2)``."""
    if n < 2:
        raise ValueError("z_n needs n >= 2")
    vals = weyl_prefix(n - 1, omega).values
    return math.sqrt(float(np.sum(vals.real ** 2 + vals.imag ** 2)))


def second_moment_check(n) -> float:
    """``E_w[Z_n^2]`` by an equidistant rational grid that integrates it exactly.

    ``Z_n^2`` is a trigonometric polynomial in ``w`` of degree
    ``(n-1)^2 - (n-1)``; the grid has ``2(n-1)(n-2) + 3`` points.
    """
    if n < 2:
        raise ValueError("second_moment_check needs n >= 2")
    size = 2 * (n - 1) * (n - 2) + 3
    total = math.fsum(z_n(Frequency.rational(i, size), n) ** 2 for i in range(size))
    return total / size


@dataclass(frozen=True)
class MomentReport:
    n: int
    estimate: float
    stderr: float
    samples: int
    seed: int


def sample_frequencies(samples, seed):
    """``samples`` frequencies uniform on [0, 1), keyed by ``seed``."""
    return np.ascontiguousarray(uniform_samples(seed, samples, 1)[:, 0])


def checkpoint_stats(omegas, checkpoints, kind="S", threads=None):
    """``|X_c|`` and ``sum_{m<=c} |X_m|^2`` for each frequency and checkpoint ``c``.

    ``X`` is ``S`` or ``W`` according to ``kind``.  Returns two arrays of
    shape ``(len(omegas), len(checkpoints))``.
    """
    if kind not in ("S", "W"):
        raise ValueError("kind must be 'S' or 'W'")
    checkpoints = np.asarray(sorted(set(int(c) for c in checkpoints)), dtype=np.int64)
    if checkpoints[0] < 1:
        raise ValueError("checkpoints must be >= 1")
    omegas = np.asarray(omegas, dtype=float)
    c = 134217729.0 * omegas
    his = c - (c - omegas)
    los = omegas - his
    absv = np.empty((omegas.size, checkpoints.size))
    energy = np.empty_like(absv)
    shift = 1 if kind == "S" else 0

    def work(a, b):
        _kernels.weyl_checkpoint_batch(his[a:b], los[a:b], shift, checkpoints,
                                       absv[a:b], energy[a:b])

    run_chunked(work, omegas.size, threads)
    return checkpoints, absv, energy


def first_moment_curve(m_list, samples, seed, kind="W", threads=None) -> list[MomentReport]:
    """Monte-Carlo ``E_w[|X_m|] / sqrt(m)`` for every ``m`` on one shared set of frequencies."""
    if samples < 2:
        raise ValueError("first moment estimates need samples >= 2")
    omegas = sample_frequencies(samples, seed)
    ms, absv, _ = checkpoint_stats(omegas, m_list, kind, threads)
    out = []
    for i, m in enumerate(ms):
        est, err = mean_stderr(absv[:, i] / math.sqrt(m))
        out.append(MomentReport(int(m), est, err, samples, seed))
    return out


def first_moment_estimate(m, samples, seed, kind="W", threads=None) -> MomentReport:
    return first_moment_curve([m], samples, seed, kind, threads)[0]


@dataclass(frozen=True)
class JvHEstimate:
    c_jvh: float
    stderr: float
    c1: float
    c0: float
    delta: float
    reports: tuple


def cjvh_estimate(m_list, samples, seed, threads=None) -> JvHEstimate:
    """Estimate ``lim E|W_m| / sqrt(m)`` and the constants derived from it.

    Returns the largest-``m`` estimate with ``C1 = (sqrt2 - 1)/2 * C``,
    ``C0 = C^2 (sqrt2 - 1)^2 / 64`` and ``delta = C^2 (sqrt2 - 1)^2 / 8``.
    """
    if min(m_list) < 1000:
        raise ValueError("cjvh_estimate expects every m >= 1000")
    reports = first_moment_curve(m_list, samples, seed, "W", threads)
    top = reports[-1]
    c = top.estimate
    c1 = SQRT2M1 / 2.0 * c
    return JvHEstimate(c, top.stderr, c1, c * c * SQRT2M1 ** 2 / 64.0,
                       c * c * SQRT2M1 ** 2 / 8.0, tuple(reports))


def good_set_measure(n, threshold, samples, seed, threads=None) -> MomentReport:
    """Fraction of sampled ``w`` with ``(1/n^2) sum_{m<=n-1} |S_m|^2 > threshold``.

    ``stderr`` is the binomial standard error of that fraction.
    """
    if n < 2:
        raise ValueError("good sets need n >= 2")
    omegas = sample_frequencies(samples, seed)
    _, _, energy = checkpoint_stats(omegas, [n - 1], "S", threads)
    frac = float(np.mean(energy[:, 0] / n ** 2 > threshold))
    return MomentReport(n, frac, math.sqrt(frac * (1.0 - frac) / samples), samples, seed)


def good_set_persistence(ns, threshold, samples, seed, threads=None):
    """Track which sampled ``w`` fall in the good set for each ``n`` in ``ns``.

    Returns ``(measures, persistent)``: the per-``n`` fractions and the
    fraction of frequencies good at every listed ``n``.
    """
    ns = sorted(ns)
    omegas = sample_frequencies(samples, seed)
    cps, _, energy = checkpoint_stats(omegas, [n - 1 for n in ns], "S", threads)
    good = np.stack([energy[:, list(cps).index(n - 1)] / n ** 2 > threshold for n in ns], axis=1)
    measures = {n: float(np.mean(good[:, i])) for i, n in enumerate(ns)}
    return measures, float(np.mean(np.all(good, axis=1)))


def paley_zygmund_check(n, samples, seed, theta=0.5, threads=None):
    """Empirical ``P(Z > theta E Z)`` against ``(1-theta)^2 (E Z)^2 / E Z^2``."""
    omegas = sample_frequencies(samples, seed)
    _, _, energy = checkpoint_stats(omegas, [n - 1], "S", threads)
    z = np.sqrt(energy[:, 0])
    ez = float(np.mean(z))
    lhs = float(np.mean(z > theta * ez))
    rhs = (1.0 - theta) ** 2 * ez ** 2 / float(np.mean(z ** 2))
    return lhs, rhs


@dataclass(frozen=True)
class HLStep:
    m: int
    omega: float
    xi: float
    prefactor: complex
    error_budget: float


def hl_step(m, omega, xi) -> HLStep:
    """One approximate-functional-equation step for ``S_m(omega, xi)``.

    ``S_m(w, x) ~ sqrt(i/(2w)) e[-x^2/(4w)] S_{m'}(-1/(4w) mod 1, x/(2w))``
    with ``m' = floor(2 w m)`` and an error of order ``w^{-1/2}``.
    """
    omega = float(omega)
    if not 0.0 < omega <= 0.5:
        raise ValueError("hl_step needs omega in (0, 1/2]")
    if m < 1:
        raise ValueError("hl_step needs m >= 1")
    m_new = math.floor(2.0 * omega * m)
    omega_new = (-1.0 / (4.0 * omega)) % 1.0
    xi_new = (xi / (2.0 * omega)) % 1.0
    pref = cmath.sqrt(1j / (2.0 * omega)) * cmath.exp(-2j * math.pi * xi * xi / (4.0 * omega))
    return HLStep(m_new, omega_new, xi_new, pref, omega ** -0.5)


def hl_iterate(m, omega, xi, min_m=10):
    """Iterate :func:`hl_step`, reflecting ``omega`` into (0, 1/2] as needed.

    Stops once the next length would drop below ``min_m`` or the accumulated
    error budget exceeds the trivial bound ``m``.  Returns the list of steps
    and the resulting approximation of ``S_m(omega, xi)``.
    """
    coef = 1.0 + 0j
    conj = False
    budget = 0.0
    steps = []
    w, x, cur = float(omega) % 1.0, float(xi) % 1.0, int(m)
    while True:
        if w > 0.5:
            # S_m(w, x) = conj(S_m(1 - w, -x))
            w, x, conj = 1.0 - w, (-x) % 1.0, not conj
        if w == 0.0:
            break
        step = hl_step(cur, w, x)
        if step.m < min_m or budget + abs(coef) * step.error_budget > m:
            break
        budget += abs(coef) * step.error_budget
        coef *= step.prefactor.conjugate() if conj else step.prefactor
        steps.append(step)
        w, x, cur = step.omega, step.xi, step.m
    tail = weyl_general(cur, w, x) if cur >= 1 else 0j
    approx = coef * (tail.conjugate() if conj else tail)
    return steps, approx, budget


@dataclass(frozen=True)
class PathPolyline:
    """Linearly interpolated curlicue ``X_n(t)`` with knots ``S_k / sqrt(n)`` at ``t = k/n``."""

    omega: Frequency
    n: int
    t: np.ndarray
    positions: np.ndarray

    def at(self, t):
        return complex(np.interp(t, self.t, self.positions.real),
                       np.interp(t, self.t, self.positions.imag))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,re,im\n")
        for tk, z in zip(self.t, self.positions):
            buf.write(f"{float(tk)!r},{float(z.real)!r},{float(z.imag)!r}\n")
        return buf.getvalue()


def curlicue_path(n, omega) -> PathPolyline:
    if n < 1:
        raise ValueError("curlicue_path needs n >= 1")
    pre = weyl_prefix(n, omega)
    knots = np.concatenate([[0j], pre.values]) / math.sqrt(n)
    return PathPolyline(pre.omega, n, np.arange(n + 1) / n, knots)
