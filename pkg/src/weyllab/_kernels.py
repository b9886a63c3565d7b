"""numba kernels for the hot loops.

Every kernel takes the frequency in split form ``(hi, lo, p, q)``: for a
rational frequency ``q > 0`` and the phase is reduced in integer arithmetic,
otherwise ``hi + lo`` is the Veltkamp split of the float frequency and
``q == 0``.  All kernels release the GIL so callers may drive them from a
thread pool.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi
_SPLITTER = 134217729.0  # 2**27 + 1
_TWO26 = 67108864.0


@njit(cache=True, nogil=True)
def split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


@njit(cache=True, nogil=True)
def frac(x):
    return x - math.floor(x)


@njit(cache=True, nogil=True)
def frac_mul(hi, lo, k):
    """Fractional part of ``(hi + lo) * k`` for integer-valued ``|k| < 2**53``.

    Each partial product is exact, so the only rounding is in the final
    four-term sum.
    """
    k1 = math.floor(k / _TWO26)
    k0 = k - k1 * _TWO26
    s = frac(hi * k0) + frac(lo * k0)
    s += frac((hi * k1) * _TWO26) + frac((lo * k1) * _TWO26)
    return frac(s)


@njit(cache=True, nogil=True)
def rational_phase(p, q, k):
    return ((p % q) * (k % q) % q) / q


@njit(cache=True, nogil=True)
def _phase(hi, lo, p, q, k):
    if q > 0:
        return rational_phase(p, q, k)
    return frac_mul(hi, lo, float(k))


@njit(cache=True, nogil=True)
def weyl_prefix_into(hi, lo, p, q, n, shift, compensated, out):
    """Write ``sum_{j<=m} e[w (j^2 - shift*j)]`` into ``out[m-1]`` for m <= n."""
    sr = 0.0
    si = 0.0
    cr = 0.0
    ci = 0.0
    for j in range(1, n + 1):
        ph = _phase(hi, lo, p, q, j * j - shift * j)
        xr = math.cos(TWO_PI * ph)
        xi = math.sin(TWO_PI * ph)
        if compensated:
            # Neumaier variant of Kahan summation, per component
            t = sr + xr
            if abs(sr) >= abs(xr):
                cr += (sr - t) + xr
            else:
                cr += (xr - t) + sr
            sr = t
            t = si + xi
            if abs(si) >= abs(xi):
                ci += (si - t) + xi
            else:
                ci += (xi - t) + si
            si = t
            out[j - 1] = complex(sr + cr, si + ci)
        else:
            sr += xr
            si += xi
            out[j - 1] = complex(sr, si)


@njit(cache=True, nogil=True)
def weyl_general_sum(whi, wlo, xhi, xlo, m):
    sr = 0.0
    si = 0.0
    cr = 0.0
    ci = 0.0
    for j in range(1, m + 1):
        ph = frac(frac_mul(whi, wlo, float(j * j)) + frac_mul(xhi, xlo, float(j)))
        xr = math.cos(TWO_PI * ph)
        xi = math.sin(TWO_PI * ph)
        t = sr + xr
        if abs(sr) >= abs(xr):
            cr += (sr - t) + xr
        else:
            cr += (xr - t) + sr
        sr = t
        t = si + xi
        if abs(si) >= abs(xi):
            ci += (si - t) + xi
        else:
            ci += (xi - t) + si
        si = t
    return complex(sr + cr, si + ci)


@njit(cache=True, nogil=True)
def weyl_checkpoint_batch(his, los, shift, checkpoints, abs_out, energy_out):
    """Per-frequency statistics at increasing checkpoints.

    For row i and checkpoint c: ``abs_out[i, c] = |S_c|`` and
    ``energy_out[i, c] = sum_{m<=c} |S_m|^2``.
    """
    nmax = checkpoints[-1]
    buf = np.empty(nmax, dtype=np.complex128)
    for i in range(his.shape[0]):
        weyl_prefix_into(his[i], los[i], 0, 0, nmax, shift, True, buf)
        energy = 0.0
        c = 0
        for m in range(1, nmax + 1):
            z = buf[m - 1]
            energy += z.real * z.real + z.imag * z.imag
            while c < checkpoints.shape[0] and checkpoints[c] == m:
                abs_out[i, c] = abs(z)
                energy_out[i, c] = energy
                c += 1


@njit(cache=True, nogil=True)
def cocycle_product(lam, energy, x, y, hi, lo, p, q, n, amo, scaled):
    """Return ``(m11, m12, m21, m22, log_scale)`` for ``A_n ... A_1``."""
    m11 = 1.0
    m12 = 0.0
    m21 = 0.0
    m22 = 1.0
    log_scale = 0.0
    yhi, ylo = split(y)
    for j in range(1, n + 1):
        if amo:
            ph = frac(_phase(hi, lo, p, q, j) + x)
        else:
            ph = frac(_phase(hi, lo, p, q, j * (j - 1) // 2)
                      + frac_mul(yhi, ylo, float(j)) + x)
        a = energy - lam * 2.0 * math.cos(TWO_PI * ph)
        n11 = a * m11 - m21
        n12 = a * m12 - m22
        m21 = m11
        m22 = m12
        m11 = n11
        m12 = n12
        if scaled:
            mx = max(abs(m11), abs(m12), abs(m21), abs(m22))
            if mx > 2.0 or mx < 0.5:
                m11 /= mx
                m12 /= mx
                m21 /= mx
                m22 /= mx
                log_scale += math.log(mx)
    return m11, m12, m21, m22, log_scale


@njit(cache=True, nogil=True)
def log_trace_batch(lam, energy, xs, ys, hi, lo, p, q, n, amo, out):
    for i in range(xs.shape[0]):
        m11, m12, m21, m22, ls = cocycle_product(
            lam, energy, xs[i], ys[i], hi, lo, p, q, n, amo, True)
        out[i] = 2.0 * ls + math.log(m11 * m11 + m12 * m12 + m21 * m21 + m22 * m22)
