"""Coefficients of the zero-energy torus-averaged trace polynomial.

``P_n(lam) = E[Tr M_n^T M_n] = sum_k alpha_{2k} lam^{2k}`` is computed three
independent ways:

* ``alpha_bruteforce`` sums torus expectations of potential monomials over
  pairs of index tuples with alternating parity (the "club" condition);
* ``alpha2_closed`` / ``alpha4_closed`` are the closed forms in terms of
  quadratic Weyl sums;
* ``poly_oracle`` multiplies transfer matrices with polynomial entries on an
  exact quadrature grid and reads the coefficients off.

The same tuple machinery gives the pointwise coefficients ``beta_{2k}`` of
``Tr M_n^T M_n`` and the Almost-Mathieu analogue.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .cocycle import check_grid, default_grid, torus_grid
from .torus import Frequency, TorusPoint, as_frequency, frac_mul, phase_product, skew_potentials
from .weyl import weyl_prefix

__all__ = [
    "InvalidOrderError",
    "SingularFrequencyError",
    "CoefficientTable",
    "Lambda4Term",
    "club_indicator",
    "monomial_expectation",
    "alpha_bruteforce",
    "alpha2_closed",
    "alpha4_closed",
    "poly_oracle",
    "alpha_top_check",
    "top_coefficient_constant",
    "beta_bruteforce",
    "beta_coefficients",
    "omega_avg_alpha4",
    "omega_avg_alpha4_quadrature",
    "log_lambda4_term",
    "amo_alpha2_closed",
    "amo_alpha_bruteforce",
]

# pairs of tuples are materialised in blocks of at most this many entries
_BLOCK = 1 << 22


class InvalidOrderError(ValueError):
    """Requested coefficient order outside ``0 <= k <= n``."""


class SingularFrequencyError(ValueError):
    """The Almost-Mathieu closed form has a pole at ``omega = 1/2``."""


@dataclass
class CoefficientTable:
    n: int
    omega: Frequency
    coeffs: dict[int, float]
    method: str
    odd_residual: float = 0.0
    warnings: list[str] = field(default_factory=list)

    def polynomial(self, lam):
        return sum(c * lam ** (2 * k) for k, c in self.coeffs.items())


def club_indicator(j, l) -> bool:
    """Parity condition pairing index tuples ``j`` and ``l``.

    ``j_1 - l_1`` even and all consecutive gaps inside each tuple odd.  Any
    condition that refers to a missing entry is vacuous.
    """
    if len(j) and len(l) and (j[0] - l[0]) % 2:
        return False
    for t in (j, l):
        for a, b in zip(t, t[1:]):
            if (b - a) % 2 == 0:
                return False
    return True


def _check_order(n, k):
    if k < 0 or k > n:
        raise InvalidOrderError(f"order k={k} outside 0..{n}")


@lru_cache(maxsize=None)
def _odd_gap_tuples(n, length):
    """Strictly increasing tuples in 1..n whose consecutive gaps are all odd."""
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    out = []

    def extend(prefix):
        if len(prefix) == length:
            out.append(tuple(prefix))
            return
        for nxt in range(prefix[-1] + 1, n + 1, 2):
            extend(prefix + [nxt])

    for first in range(1, n + 1):
        extend([first])
    arr = np.array(out, dtype=np.int64).reshape(-1, length)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def _balanced_signs(k0):
    """Sign vectors in {+1,-1}^k0 with a_1 = +1 and zero sum."""
    if k0 % 2:
        return np.zeros((0, k0), dtype=np.int64)
    half = k0 // 2
    rows = []
    for plus in itertools.combinations(range(1, k0), half - 1):
        a = -np.ones(k0, dtype=np.int64)
        a[0] = 1
        a[list(plus)] = 1
        rows.append(a)
    arr = np.array(rows, dtype=np.int64).reshape(-1, k0)
    arr.setflags(write=False)
    return arr


def _half_phase(omega, s):
    """``frac(omega * s / 2)`` for integer arrays ``s``."""
    if omega.is_rational:
        s = np.asarray(s, dtype=np.int64)
        two_q = 2 * omega.q
        return ((omega.p * (s % two_q)) % two_q) / two_q
    return frac_mul(omega.value / 2.0, s)


def _skew_expectations(combos, omega):
    """Torus expectation of ``v_{c_1} ... v_{c_k0}`` for each row of ``combos``."""
    combos = np.asarray(combos, dtype=np.int64)
    k0 = combos.shape[1]
    signs = _balanced_signs(k0)
    if combos.shape[0] == 0 or signs.shape[0] == 0:
        return np.zeros(combos.shape[0])
    out = np.empty(combos.shape[0])
    rows = max(1, _BLOCK // signs.shape[0])
    for a in range(0, combos.shape[0], rows):
        c = combos[a:a + rows]
        lin = c @ signs.T
        quad = (c * c) @ signs.T
        hit = lin == 0
        vals = np.zeros(lin.shape)
        vals[hit] = np.cos(2.0 * np.pi * _half_phase(omega, quad[hit]))
        out[a:a + rows] = 2.0 * vals.sum(axis=1)
    return out


def monomial_expectation(combined, omega) -> float:
    """``E_{T^2}[v_{j_1} ... v_{j_k0}]`` for a tuple of (possibly repeated) indices.

    Only sign vectors balancing both the count and the indices survive the
    torus average; odd ``k0`` therefore always gives 0.
    """
    combined = tuple(int(c) for c in combined)
    if len(combined) == 0:
        return 1.0
    if min(combined) < 1:
        raise ValueError("potential indices start at 1")
    return float(_skew_expectations(np.array([combined]), as_frequency(omega))[0])


def _order_pairs(n, k, parity_filter):
    """``(k1, k2, sign)`` contributing to the order-``2k`` coefficient."""
    for k1 in range(0, 2 * k + 1):
        k2 = 2 * k - k1
        if k1 > n or k2 > n:
            continue
        d = k1 - k2
        if parity_filter and d % 4:
            continue
        yield k1, k2, (-1) ** ((d // 2) % 2)


def _club_pair_blocks(n, k1, k2):
    """Yield blocks of combined ``(j, l)`` rows over all club-admissible pairs."""
    J = _odd_gap_tuples(n, k1)
    L = _odd_gap_tuples(n, k2)
    if k1 == 0 or k2 == 0:
        classes = [(J, L)]
    else:
        classes = [(J[J[:, 0] % 2 == r], L[L[:, 0] % 2 == r]) for r in (0, 1)]
    for Jc, Lc in classes:
        if len(Jc) == 0 or len(Lc) == 0:
            continue
        step = max(1, _BLOCK // (len(Lc) * max(1, k1 + k2)))
        for a in range(0, len(Jc), step):
            Jb = Jc[a:a + step]
            yield np.concatenate(
                [np.repeat(Jb, len(Lc), axis=0), np.tile(Lc, (len(Jb), 1))], axis=1)


def alpha_bruteforce(n, k, omega, parity_filter=True) -> float:
    """``alpha_{2k}`` by direct summation over club-admissible tuple pairs.

    With ``parity_filter=False`` every split ``k1 + k2 = 2k`` is kept with
    its sign ``(-1)^((k1-k2)/2)``; for the skew-shift the extra terms cancel.
    """
    _check_order(n, k)
    if k == 0:
        return 2.0
    omega = as_frequency(omega)
    total = 0.0
    for k1, k2, sign in _order_pairs(n, k, parity_filter):
        for block in _club_pair_blocks(n, k1, k2):
            total += sign * float(np.sum(_skew_expectations(block, omega)))
    return total


def alpha2_closed(n) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2.0 * n


def alpha4_closed(n, omega) -> float:
    """``4 sum_{m<=n/2} |S_m|^2 + 4 sum_{m<=(n-1)/2} |S_m|^2``; zero for ``n < 2``."""
    if n < 2:
        return 0.0
    half = n // 2
    sq = np.abs(weyl_prefix(half, omega).values) ** 2
    return 4.0 * float(np.sum(sq)) + 4.0 * float(np.sum(sq[:(n - 1) // 2]))


def poly_oracle(n, omega, grid=None) -> CoefficientTable:
    """Coefficients of ``P_n(lam, 0)`` from polynomial-valued transfer matrices.

    The entries of ``M_n`` are carried as degree-``n`` polynomials in ``lam``
    at every point of an exact quadrature grid; the trace polynomial is then
    averaged coefficient by coefficient.
    """
    if n < 1:
        raise ValueError("poly_oracle needs n >= 1")
    omega = as_frequency(omega)
    grid = default_grid(n) if grid is None else tuple(grid)
    notes = [] if check_grid(n, grid) else ["grid below exactness threshold"]
    x, y = torus_grid(grid)
    v = skew_potentials(n, x.ravel(), y.ravel(), omega)
    g = v.shape[1]
    m11 = np.zeros((g, n + 1))
    m12 = np.zeros((g, n + 1))
    m21 = np.zeros((g, n + 1))
    m22 = np.zeros((g, n + 1))
    m11[:, 0] = 1.0
    m22[:, 0] = 1.0
    for j in range(n):
        # A_j = [[-lam v_j, -1], [1, 0]]
        n11 = -m21.copy()
        n12 = -m22.copy()
        n11[:, 1:] -= v[j][:, None] * m11[:, :-1]
        n12[:, 1:] -= v[j][:, None] * m12[:, :-1]
        m11, m12, m21, m22 = n11, n12, m11, m12
    outer = sum(e.T @ e for e in (m11, m12, m21, m22)) / g
    trace = np.zeros(2 * n + 1)
    for i in range(n + 1):
        trace[i:i + n + 1] += outer[i]
    coeffs = {k: float(trace[2 * k]) for k in range(n + 1)}
    odd = float(np.max(np.abs(trace[1::2])))
    return CoefficientTable(n, omega, coeffs, "oracle", odd, notes)


def top_coefficient_constant() -> float:
    """``exp(int_0^1 log cos^2(2 pi x) dx)``, evaluated numerically (equals 1/4)."""
    val, _ = integrate.quad(lambda t: math.log(math.cos(2 * math.pi * t) ** 2),
                            0.0, 1.0, points=[0.25, 0.75], limit=200)
    return math.exp(val)


def alpha_top_check(n, omega, grid=None):
    """Top two coefficients and whether ``alpha_{2n} >= (1/4)^n``."""
    table = poly_oracle(n, omega, grid)
    top = table.coeffs[n]
    below = table.coeffs[n - 1]
    return top, below, bool(top >= 0.25 ** n)


def beta_coefficients(n, point: TorusPoint, omega) -> np.ndarray:
    """Pointwise coefficients ``beta_0 .. beta_{2n}`` (index ``k`` holds ``beta_{2k}``)."""
    v = skew_potentials(n, point.x, point.y, as_frequency(omega))
    return np.array([_beta_from_values(n, k, v) for k in range(n + 1)])


def _beta_from_values(n, k, v):
    if k == 0:
        return 2.0
    total = 0.0
    for k1, k2, sign in _order_pairs(n, k, parity_filter=False):
        sides = []
        for length in (k1, k2):
            T = _odd_gap_tuples(n, length)
            prods = np.prod(v[T - 1], axis=1) if length else np.ones(1)
            if length == 0:
                sides.append(None)
            else:
                sides.append((prods[T[:, 0] % 2 == 0].sum(), prods[T[:, 0] % 2 == 1].sum()))
        a, b = sides
        if a is None and b is None:
            part = 1.0
        elif a is None:
            part = b[0] + b[1]
        elif b is None:
            part = a[0] + a[1]
        else:
            part = a[0] * b[0] + a[1] * b[1]
        total += sign * part
    return float(total)


def beta_bruteforce(n, k, point: TorusPoint, omega) -> float:
    """``beta_{2k}(x, y)``: the un-averaged analogue of ``alpha_{2k}``."""
    _check_order(n, k)
    v = skew_potentials(n, point.x, point.y, as_frequency(omega))
    return _beta_from_values(n, k, v)


def _triangular(m):
    return m * (m + 1) // 2


def omega_avg_alpha4(n) -> float:
    """``int_0^1 alpha_4 d omega = 4 (T(n//2) + T((n-1)//2))`` with ``T(m) = m(m+1)/2``."""
    if n < 2:
        return 0.0
    return 4.0 * (_triangular(n // 2) + _triangular((n - 1) // 2))


def omega_avg_alpha4_quadrature(n, size=None) -> float:
    """Equidistant-grid average of ``alpha4_closed`` over ``omega`` in [0, 1).

    The integrand is a trigonometric polynomial in ``omega`` of degree
    ``m^2 - m`` with ``m = n // 2``, so any grid above twice that is exact.
    """
    m = n // 2
    if size is None:
        size = 2 * (m * m - m) + 3
    vals = [alpha4_closed(n, i / size) for i in range(size)]
    return float(np.mean(vals))


@dataclass(frozen=True)
class Lambda4Term:
    n: int
    value: float
    ratio: float
    e_beta4: float
    e_beta2_sq: float


def _alternating_sum(n, x, y, omega_values):
    """``sum_j (-1)^j v_j`` on an (omega, x, y) grid; its square is ``beta_2``."""
    j = np.arange(1, n + 1)
    binom = j * (j - 1) // 2
    ph = (frac_mul(omega_values[None, :, None, None], binom[:, None, None, None])
          + frac_mul(y[None, None], j[:, None, None, None]) + x[None, None])
    signs = np.where(j % 2 == 0, 1.0, -1.0)[:, None, None, None]
    return np.sum(signs * 2.0 * np.cos(2.0 * np.pi * ph), axis=0)


def log_lambda4_term(n, grids=None) -> Lambda4Term:
    """``(E[beta_4] - E[beta_2^2]/4) / 2`` with the average over ``(x, y, omega)``.

    ``E[beta_4]`` is the closed omega-average of ``alpha_4``; ``E[beta_2^2]``
    is computed by exact quadrature over an ``Nx x Ny x Nw`` grid.
    """
    if grids is None:
        grids = (9, 8 * n + 1, 4 * n * n + 1)
    nx, ny, nw = grids
    x, y = torus_grid((nx, ny))
    omegas = np.arange(nw) / nw
    acc = 0.0
    for a in range(0, nw, 32):
        g = _alternating_sum(n, x, y, omegas[a:a + 32])
        acc += float(np.sum(g ** 4))
    e_b2sq = acc / (nx * ny * nw)
    e_b4 = omega_avg_alpha4(n)
    value = 0.5 * (e_b4 - e_b2sq / 4.0)
    return Lambda4Term(n, value, value / n, e_b4, e_b2sq)


def amo_alpha2_closed(n, omega) -> float:
    """``|1 - e[(omega + 1/2) n]|^2 / (2 cos^2(pi omega))``."""
    omega = as_frequency(omega)
    if omega.value == 0.5:
        raise SingularFrequencyError("closed form is singular at omega = 1/2")
    ph = (phase_product(omega, n) + 0.5 * (n % 2)) % 1.0
    num = abs(1.0 - complex(math.cos(2 * math.pi * ph), math.sin(2 * math.pi * ph))) ** 2
    return num / (2.0 * math.cos(math.pi * omega.value) ** 2)


def _amo_expectations(combos, omega):
    """Average over theta of ``prod_s 2cos(2 pi (c_s omega + theta))``."""
    combos = np.asarray(combos, dtype=np.int64)
    signs = _balanced_signs(combos.shape[1])
    if combos.shape[0] == 0 or signs.shape[0] == 0:
        return np.zeros(combos.shape[0])
    out = np.empty(combos.shape[0])
    rows = max(1, _BLOCK // signs.shape[0])
    for a in range(0, combos.shape[0], rows):
        lin = combos[a:a + rows] @ signs.T
        out[a:a + rows] = 2.0 * np.cos(2.0 * np.pi * phase_product(omega, lin)).sum(axis=1)
    return out


def amo_alpha_bruteforce(n, k, omega) -> float:
    """Almost-Mathieu ``alpha~_{2k}``, summed like ``alpha_bruteforce`` without the mod-4 filter."""
    _check_order(n, k)
    if k == 0:
        return 2.0
    omega = as_frequency(omega)
    total = 0.0
    for k1, k2, sign in _order_pairs(n, k, parity_filter=False):
        for block in _club_pair_blocks(n, k1, k2):
            total += sign * float(np.sum(_amo_expectations(block, omega)))
    return total
