"""Rational approximation of the frequency and the Fresnel main term near it.

Near a rational ``p/q`` with even ``p`` the Weyl sum ``S_m(w)`` is a theta sum
whose size is governed by a difference of Fresnel integrals.  This module
finds the approximations, builds the matching parameters and checks that
the sums really are large along ``N_k = floor(sqrt(C) q_k)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from .torus import Frequency, as_frequency, frac_mul
from .weyl import weyl_prefix

__all__ = [
    "Rational",
    "FJKContext",
    "SubsequenceEntry",
    "SubsequenceReport",
    "ExactRationalError",
    "HypothesisRangeError",
    "ConsistencyError",
    "exact_value",
    "continued_fraction",
    "even_numerator_approx",
    "even_numerator_scan",
    "fresnel",
    "fresnel_array",
    "fjk_context",
    "nearest_even_context",
    "fjk_sum",
    "fjk_main_term_magnitude",
    "fjk_main_terms",
    "regime_scale",
    "subsequence_bound_check",
    "smallest_working_c",
]

_SQRT_I_INV = cmath.exp(-0.25j * math.pi)


class ExactRationalError(ValueError):
    """``xi = 0``: the frequency is exactly ``p/(2q)``; use the Gauss-sum value instead."""


class HypothesisRangeError(ValueError):
    """The requested ``m`` violates ``|m xi + a| <= 1 - eps``."""


class ConsistencyError(RuntimeError):
    """The parametrised theta sum failed to reproduce ``S_m``."""


@dataclass(frozen=True, order=True)
class Rational:
    q: int
    p: int

    def __post_init__(self):
        if self.q < 1 or math.gcd(self.p, self.q) != 1:
            raise ValueError(f"{self.p}/{self.q} is not a reduced fraction")

    def __iter__(self):
        return iter((self.p, self.q))

    def __str__(self):
        return f"{self.p}/{self.q}"


def exact_value(omega) -> Fraction:
    """The exact rational value behind a frequency, a float or a Fraction."""
    if isinstance(omega, Fraction):
        return omega
    if isinstance(omega, Frequency):
        return Fraction(omega.p, omega.q) if omega.is_rational else Fraction(omega.value)
    if isinstance(omega, str):
        return exact_value(Frequency.parse(omega))
    return Fraction(float(omega))


def _expand(x: Fraction, depth=None, q_max=None):
    """Partial quotients and convergents of ``x``, stopped by depth or by ``q > q_max``."""
    quotients, convs = [], []
    p0, q0, p1, q1 = 0, 1, 1, 0
    rem = x
    while depth is None or len(quotients) < depth:
        a = math.floor(rem)
        quotients.append(a)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        convs.append(Fraction(p1, q1))
        frac = rem - a
        if frac == 0 or (q_max is not None and q1 > q_max):
            break
        rem = 1 / frac
    return quotients, convs


def continued_fraction(omega, depth):
    """``(quotients, convergents)`` of ``omega`` to ``depth`` terms.

    Floats are expanded exactly as the binary number they are, so the
    expansion of ``sqrt(2) - 1`` is faithful for roughly twenty terms.  A
    rational input terminates with its own value as last convergent.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    return _expand(exact_value(omega), depth)


def _qualifies(x, p, q, bound):
    return p % 2 == 0 and math.gcd(p, q) == 1 and abs(q * x - p) * q * bound < 1


def even_numerator_approx(omega, C, q_max):
    """All ``p/q`` with ``2 | p``, ``gcd(p, q) = 1``, ``q <= q_max`` and ``|2 w q - p| < 1/(C q)``.

    Candidates are the convergents of ``2w`` and the intermediate fractions
    between consecutive convergents; each is re-checked in exact arithmetic.
    For ``C >= 2`` every solution is a convergent, so nothing is missed.
    """
    if C <= 0 or q_max < 2:
        raise ValueError("need C > 0 and q_max >= 2")
    x = 2 * exact_value(omega)
    bound = Fraction(C)
    quotients, convs = _expand(x, q_max=q_max)
    cands = set()
    prev = (1, 0)
    for i, c in enumerate(convs):
        cands.add((c.numerator, c.denominator))
        if i + 1 < len(quotients):
            for t in range(1, quotients[i + 1]):
                q = prev[1] + t * c.denominator
                if q > q_max:
                    break
                cands.add((prev[0] + t * c.numerator, q))
        prev = (c.numerator, c.denominator)
    hits = [Rational(q=q, p=p) for p, q in cands if 1 <= q <= q_max and _qualifies(x, p, q, bound)]
    return sorted(hits)


def even_numerator_scan(omega, C, q_max):
    """Exhaustive reference for :func:`even_numerator_approx` (every ``q``, every admissible ``p``)."""
    x = 2 * exact_value(omega)
    bound = Fraction(C)
    out = []
    for q in range(1, q_max + 1):
        width = 1 / (bound * q)
        for p in range(math.ceil(q * x - width), math.floor(q * x + width) + 1):
            if _qualifies(x, p, q, bound):
                out.append(Rational(q=q, p=p))
    return out


def _fresnel_scipy(y):
    s, c = special.fresnel(np.asarray(y, dtype=float) * math.sqrt(2.0))
    return _SQRT_I_INV * (c + 1j * s) / math.sqrt(2.0)


def _fresnel_quad(y):
    # F(y) = e^{-i pi/4} int_0^y e^{i pi t^2} dt
    sign = -1.0 if y < 0 else 1.0
    y = abs(y)
    if y <= 8.0:
        # one adaptive Gauss-Kronrod pass per half-oscillation, between the nodes sqrt(k)
        nodes = [math.sqrt(k) for k in range(int(y * y) + 1)] + [y]
        re, im = [], []
        for a, b in zip(nodes, nodes[1:]):
            re.append(integrate.quad(lambda t: math.cos(math.pi * t * t), a, b, epsabs=1e-15)[0])
            im.append(integrate.quad(lambda t: math.sin(math.pi * t * t), a, b, epsabs=1e-15)[0])
        body = complex(math.fsum(re), math.fsum(im))
    else:
        # int_y^inf e^{i pi t^2} dt ~ -e^{i pi y^2}/(2 pi i y) sum_k (2k-1)!!/(2 pi i y^2)^k
        z = 2j * math.pi * y * y
        term, series = 1.0 + 0j, 1.0 + 0j
        for k in range(1, 9):
            term *= (2 * k - 1) / z
            series += term
        tail = -cmath.exp(1j * math.pi * y * y) / (2j * math.pi * y) * series
        body = cmath.exp(0.25j * math.pi) / 2.0 - tail
    return sign * _SQRT_I_INV * body


def fresnel(y, method="scipy") -> complex:
    """``F(y) = (1/sqrt(i)) int_0^y e^{i pi t^2} dt``; odd, tends to 1/2 as ``y -> inf``.

    ``method="quad"`` uses adaptive quadrature below ``|y| = 8`` and the
    stationary-phase tail above; the default uses the Cephes Fresnel pair.
    """
    if method == "scipy":
        return complex(_fresnel_scipy(float(y)))
    if method == "quad":
        return _fresnel_quad(float(y))
    raise ValueError(f"unknown fresnel method {method!r}")


def fresnel_array(y):
    """Vectorised :func:`fresnel`."""
    return _fresnel_scipy(y)


@dataclass(frozen=True)
class FJKContext:
    p: int
    q: int
    xi: float
    theta: float
    A: float
    a: float
    omega: float
    # exact (xi, theta) when the context was built from an exact frequency
    exact: tuple | None = field(default=None, compare=False, repr=False)


def _frac_products(c: Fraction, k):
    """``frac(c * k)`` for an exact rational ``c`` and integer array ``k``."""
    if Fraction(float(c)) == c:
        return frac_mul(float(c), k)
    num, den = c.numerator, c.denominator
    return np.array([(num * (int(v) % den) % den) / den for v in k])


def fjk_sum(m, ctx: FJKContext):
    """Prefixes of ``sum_{n<=m} exp(pi i (n^2 (p+xi)/q + 2 n theta/q))``.

    The exponent is ``2 pi i (n^2 (p+xi)/(2q) + n theta/q)``; with exact
    parameters both coefficients are reduced exactly mod 1.
    """
    n = np.arange(1, m + 1, dtype=np.int64)
    if ctx.exact is not None:
        xi, theta = ctx.exact
        ph = _frac_products((ctx.p + xi) / (2 * ctx.q), n * n) + _frac_products(theta / ctx.q, n)
        return np.cumsum(np.exp(2j * math.pi * ph))
    n2 = n * n
    ph = ((n2 * ctx.p) % (2 * ctx.q)) / ctx.q + (n2 * ctx.xi) / ctx.q + n * (2.0 * ctx.theta / ctx.q)
    return np.cumsum(np.exp(1j * math.pi * np.mod(ph, 2.0)))


_CHECK_M = (1, 7, 31)


def fjk_context(omega, pq, check=True) -> FJKContext:
    """Parameters ``xi = 2qw - p``, ``theta = -qw``, ``A = -p/2``, ``a = -xi/2``.

    Before returning, the parametrised sum is compared against
    :func:`weyl_prefix` at ``m = 1, 7, 31``.
    """
    p, q = (pq.p, pq.q) if isinstance(pq, Rational) else pq
    if q < 1 or math.gcd(p, q) != 1:
        raise ValueError(f"{p}/{q} is not a reduced fraction")
    if p % 2:
        raise ValueError(f"numerator {p} must be even")
    w = exact_value(omega)
    xi_exact, theta_exact = 2 * q * w - p, -q * w
    xi = float(xi_exact)
    ctx = FJKContext(p, q, xi, float(theta_exact), -p / 2.0, -xi / 2.0, float(w), (xi_exact, theta_exact))
    if check:
        ref = weyl_prefix(max(_CHECK_M), float(w)).values
        mine = fjk_sum(max(_CHECK_M), ctx)
        for m in _CHECK_M:
            if abs(ref[m - 1] - mine[m - 1]) > 1e-10:
                raise ConsistencyError(f"parametrised sum differs from S_{m} at {p}/{q}")
    return ctx


def nearest_even_context(omega, q) -> FJKContext | None:
    """Context for the even ``p`` closest to ``2 q w``, or ``None`` when ``gcd(p, q) > 1``."""
    x = 2 * q * exact_value(omega)
    p = 2 * round(x / 2)
    if math.gcd(p, q) != 1:
        return None
    return fjk_context(omega, (p, q))


def _positive(ctx: FJKContext) -> FJKContext:
    # |S_m(w)| = |S_m(1 - w)|; under w -> 1 - w, p -> 2q - p the sign of xi flips
    if ctx.xi > 0:
        return ctx
    w = 1.0 - ctx.omega
    xi = -ctx.xi
    exact = None if ctx.exact is None else (-ctx.exact[0], -ctx.q - ctx.exact[1])
    return FJKContext(2 * ctx.q - ctx.p, ctx.q, xi, -ctx.q * w, ctx.p / 2.0 - ctx.q, -xi / 2.0, w, exact)


def fjk_main_terms(ms, ctx: FJKContext, eps=0.25, strict=True):
    """``|T_m| = |xi|^{-1/2} |F((m xi + a)/sqrt(q xi)) - F(a/sqrt(q xi))|`` for an array of ``m``.

    With ``strict=False`` the formula is also evaluated where the
    approximation is not guaranteed (``|m xi + a| > 1 - eps``).
    """
    if ctx.xi == 0.0:
        raise ExactRationalError("xi = 0: exact rational frequency, use the Gauss sum")
    ms = np.asarray(ms, dtype=float)
    if strict and np.any(np.abs(ms * ctx.xi + ctx.a) > 1.0 - eps):
        raise HypothesisRangeError(f"|m xi + a| exceeds 1 - eps = {1.0 - eps}")
    c = _positive(ctx)
    s = math.sqrt(c.q * c.xi)
    f0 = fresnel_array(c.a / s)
    return np.abs(fresnel_array((ms * c.xi + c.a) / s) - f0) / math.sqrt(c.xi)


def fjk_main_term_magnitude(m, ctx: FJKContext, eps=0.25, strict=True) -> float:
    return float(fjk_main_terms([m], ctx, eps, strict)[0])


def regime_scale(m, ctx: FJKContext):
    """``m / (sqrt(q) + m sqrt|xi|)``, the two-sided size of ``|T_m|`` in the main regime."""
    return m / (math.sqrt(ctx.q) + m * math.sqrt(abs(ctx.xi)))


@dataclass(frozen=True)
class SubsequenceEntry:
    q: int
    N: int
    lhs: float
    ratio: float
    flagged: bool
    p: int = 0
    generic: float = 0.0  # omega-average of sum_{m<=N}|S_m|^2 / N^2

    def to_dict(self):
        return {"q": self.q, "N": self.N, "lhs": self.lhs, "ratio": self.ratio,
                "flagged": self.flagged}


@dataclass(frozen=True)
class SubsequenceReport:
    omega: float
    C: float
    q_max: int
    entries: tuple = field(default_factory=tuple)

    @property
    def flagged_fraction(self):
        if not self.entries:
            return float("nan")
        return sum(e.flagged for e in self.entries) / len(self.entries)

    def to_dict(self):
        return {"omega": self.omega, "C": self.C, "q_max": self.q_max,
                "entries": [e.to_dict() for e in self.entries]}


def subsequence_bound_check(omega, C, q_max) -> SubsequenceReport:
    """Evaluate ``sum_{m<=N_k}|S_m|^2 / N_k^2`` along ``N_k = floor(sqrt(C) q_k)``.

    ``q_k`` runs over :func:`even_numerator_approx`; entries with ratio at
    least 2 are flagged.
    """
    if C < 16:
        raise ValueError("the subsequence construction needs C >= 16")
    w = float(exact_value(omega))
    entries = []
    for r in even_numerator_approx(omega, C, q_max):
        n = math.floor(math.sqrt(C) * r.q)
        vals = weyl_prefix(n, as_frequency(omega) if isinstance(omega, Frequency) else w).values
        lhs = float(np.sum(vals.real ** 2 + vals.imag ** 2))
        ratio = lhs / n ** 2
        entries.append(SubsequenceEntry(r.q, n, lhs, ratio, ratio >= 2.0, r.p, (n + 1) / (2 * n)))
    return SubsequenceReport(w, float(C), int(q_max), tuple(entries))


def smallest_working_c(omegas, q_max, candidates=(16, 32, 64, 128, 256)):
    """Smallest ``C`` for which every subsequence point over ``omegas`` is flagged.

    Returns ``(C or None, {C: (flagged, total)})``.
    """
    table = {}
    best = None
    for C in candidates:
        ents = [e for w in omegas for e in subsequence_bound_check(w, C, q_max).entries]
        table[C] = (sum(e.flagged for e in ents), len(ents))
        if best is None and ents and all(e.flagged for e in ents):
            best = C
    return best, table

