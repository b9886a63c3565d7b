"""Skew-shift orbits on the 2-torus and the two potentials built from them.

Phases are always reduced mod 1 before a cosine is taken.  For a float
frequency the product ``w * k`` is reduced with an exact split product; for
a rational frequency ``p/q`` it is reduced in integer arithmetic, which keeps
Gauss-sum cases bit-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np

__all__ = [
    "Frequency",
    "TorusPoint",
    "as_frequency",
    "frac_mul",
    "phase_product",
    "skew_shift_step",
    "skew_orbit",
    "skew_potential",
    "skew_potentials",
    "amo_potential",
    "amo_potentials",
]

_SPLITTER = 134217729.0
_TWO26 = 67108864.0


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _frac(x):
    return x - np.floor(x)


def frac_mul(a, k):
    """Fractional part of ``a * k`` for float ``a`` and integer ``k``, |k| < 2**53.

    Works elementwise on arrays.  The result is accurate to a few ulp of 1
    regardless of the size of ``k``.
    """
    hi, lo = _split(np.asarray(a, dtype=float))
    k = np.asarray(k, dtype=float)
    k1 = np.floor(k / _TWO26)
    k0 = k - k1 * _TWO26
    s = _frac(hi * k0) + _frac(lo * k0)
    s = s + _frac((hi * k1) * _TWO26) + _frac((lo * k1) * _TWO26)
    return _frac(s)


_NAMED = {
    "sqrt2m1": lambda: Decimal(2).sqrt() - 1,
    "golden": lambda: (Decimal(5).sqrt() - 1) / 2,
}


@dataclass(frozen=True)
class Frequency:
    """A frequency on the circle, kept exact when it is rational.

    ``value`` is always in [0, 1).  ``p``/``q`` are set (coprime, ``q >= 1``)
    only for exact rationals.
    """

    value: float
    p: int | None = None
    q: int | None = None

    def __post_init__(self):
        if self.q is not None:
            if self.q < 1 or math.gcd(self.p, self.q) != 1:
                raise ValueError(f"rational frequency must be reduced, got {self.p}/{self.q}")
            if not 0 <= self.p < self.q:
                raise ValueError("rational frequency numerator must be reduced mod q")
        if not 0.0 <= self.value < 1.0:
            raise ValueError(f"frequency value {self.value} not reduced mod 1")

    @classmethod
    def rational(cls, p, q):
        fr = Fraction(p, q)
        fr -= math.floor(fr)
        return cls(float(fr), fr.numerator, fr.denominator)

    @classmethod
    def real(cls, value):
        value = float(value) % 1.0
        if value == 1.0:  # -tiny % 1.0 rounds up
            value = 0.0
        return cls(value)

    @classmethod
    def parse(cls, text):
        """Parse ``"0.3"``, ``"p/q"`` or a named constant (``sqrt2m1``, ``golden``)."""
        text = text.strip()
        if text in _NAMED:
            with localcontext() as ctx:
                ctx.prec = 60
                return cls.real(float(_NAMED[text]()))
        if "/" in text:
            num, den = text.split("/", 1)
            return cls.rational(int(num), int(den))
        return cls.real(float(text))

    @property
    def is_rational(self):
        return self.q is not None

    def kernel_args(self):
        """``(hi, lo, p, q)`` as consumed by the numba kernels."""
        if self.is_rational:
            return 0.0, 0.0, self.p, self.q
        hi, lo = _split(self.value)
        return float(hi), float(lo), 0, 0

    def __str__(self):
        return f"{self.p}/{self.q}" if self.is_rational else repr(self.value)


def as_frequency(omega) -> Frequency:
    if isinstance(omega, Frequency):
        return omega
    if isinstance(omega, Fraction):
        return Frequency.rational(omega.numerator, omega.denominator)
    if isinstance(omega, str):
        return Frequency.parse(omega)
    return Frequency.real(omega)


def phase_product(omega, k):
    """``frac(omega * k)`` for integer ``k`` (array-friendly), exact for rationals."""
    omega = as_frequency(omega)
    if omega.is_rational:
        k = np.asarray(k, dtype=np.int64)
        return ((omega.p * (k % omega.q)) % omega.q) / omega.q
    return frac_mul(omega.value, k)


@dataclass(frozen=True)
class TorusPoint:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", _reduce(self.x))
        object.__setattr__(self, "y", _reduce(self.y))


def _reduce(t):
    t = float(t) % 1.0
    return 0.0 if t == 1.0 else t


def skew_shift_step(point: TorusPoint, omega) -> TorusPoint:
    """One step of ``(x, y) -> (x + y, y + omega)`` mod 1."""
    omega = as_frequency(omega)
    return TorusPoint(point.x + point.y, point.y + omega.value)


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _dd_add_mod1(ah, al, bh, bl):
    s, e = _two_sum(ah, bh)
    s -= math.floor(s)  # exact: s is in [0, 3)
    s, e = _two_sum(s, e + al + bl)
    if s + e < 0.0:
        s, e = _two_sum(s + 1.0, e)
    elif s + e >= 1.0:
        s, e = _two_sum(s - 1.0, e)
    return s, e


def skew_orbit(point: TorusPoint, omega, steps: int) -> list[TorusPoint]:
    """Iterates ``T^1 .. T^steps`` of the skew-shift starting from ``point``.

    The state is carried in double-double so rounding does not accumulate
    along the orbit; each returned point is off by at most one rounding.
    """
    omega = as_frequency(omega)
    w_lo = float(Fraction(omega.p, omega.q) - Fraction(omega.value)) if omega.is_rational else 0.0
    xh, xl, yh, yl = point.x, 0.0, point.y, 0.0
    out = []
    for _ in range(steps):
        xh, xl = _dd_add_mod1(xh, xl, yh, yl)
        yh, yl = _dd_add_mod1(yh, yl, omega.value, w_lo)
        out.append(TorusPoint(xh + xl, yh + yl))
    return out


def _skew_phase(j, x, y, omega):
    # first coordinate of T^j(x, y): binom(j, 2) omega + j y + x
    j = np.asarray(j, dtype=np.int64)
    return _frac(phase_product(omega, j * (j - 1) // 2) + frac_mul(y, j) + np.asarray(x, dtype=float))


def skew_potential(j: int, point: TorusPoint, omega) -> float:
    """``2 cos(2 pi (binom(j,2) omega + j y + x))`` for ``j >= 1``."""
    if j < 1:
        raise ValueError("potential index j must be >= 1")
    return float(2.0 * np.cos(2.0 * np.pi * _skew_phase(j, point.x, point.y, omega)))


def skew_potentials(n, x, y, omega):
    """Array ``v[j-1, ...]`` for ``j = 1..n``; ``x`` and ``y`` may be broadcastable arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    js = np.arange(1, n + 1).reshape((n,) + (1,) * max(x.ndim, y.ndim))
    return 2.0 * np.cos(2.0 * np.pi * _skew_phase(js, x, y, omega))


def amo_potential(j: int, theta: float, omega) -> float:
    """Almost-Mathieu potential ``2 cos(2 pi (j omega + theta))``."""
    if j < 1:
        raise ValueError("potential index j must be >= 1")
    return float(2.0 * np.cos(2.0 * np.pi * _frac(phase_product(omega, j) + theta)))


def amo_potentials(n, theta, omega):
    theta = np.asarray(theta, dtype=float)
    js = np.arange(1, n + 1).reshape((n,) + (1,) * theta.ndim)
    return 2.0 * np.cos(2.0 * np.pi * _frac(phase_product(omega, js) + theta))
