import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import frozen
from weyllab import diophantine as D
from weyllab import weyl
from weyllab.torus import Frequency

HALF_SQ = (math.sqrt(2) - 1) / 2
unit = st.floats(0.001, 0.999)


def test_continued_fraction_examples():
    q, c = D.continued_fraction(Fraction(1, 3), 10)
    assert q == [0, 3] and c[-1] == Fraction(1, 3)
    q, c = D.continued_fraction(Frequency.parse("sqrt2m1"), 5)
    assert q == [0, 2, 2, 2, 2]
    assert c[1:] == [Fraction(1, 2), Fraction(2, 5), Fraction(5, 12), Fraction(12, 29)]
    q, c = D.continued_fraction(Frequency.parse("golden"), 12)
    assert q[1:] == [1] * 11
    fib = [1, 1]
    while len(fib) < 14:
        fib.append(fib[-1] + fib[-2])
    assert c[1:] == [Fraction(fib[i], fib[i + 1]) for i in range(11)]
    with pytest.raises(ValueError):
        D.continued_fraction(0.3, 0)


@settings(max_examples=80, deadline=None)
@given(unit, st.integers(2, 20))
def test_convergent_properties(w, depth):
    quotients, convs = D.continued_fraction(w, depth)
    x = Fraction(w)
    qs = [c.denominator for c in convs]
    assert all(a < b for a, b in zip(qs[1:], qs[2:]))
    terminated = convs[-1] == x
    for i, (c, nxt) in enumerate(zip(convs, convs[1:])):
        gap = abs(c.denominator * x - c.numerator)
        if terminated and i == len(convs) - 2:
            # the last step of a finite expansion attains the bound
            assert gap <= Fraction(1, nxt.denominator)
        else:
            assert gap < Fraction(1, nxt.denominator)


def test_even_numerator_examples():
    assert (2, 5) in [tuple(r) for r in D.even_numerator_approx(HALF_SQ, 2, 10)]
    assert (2, 5) not in [tuple(r) for r in D.even_numerator_approx(HALF_SQ, 4, 10)]
    for r in D.even_numerator_approx(0.25, 16, 50):
        assert r.p % 2 == 0 and abs(r.q * Fraction(1, 2) - r.p) < Fraction(1, 16 * r.q)
    with pytest.raises(ValueError):
        D.even_numerator_approx(0.3, 0, 10)


@settings(max_examples=60, deadline=None)
@given(unit, st.floats(2, 128), st.integers(2, 400))
def test_even_numerator_is_complete_and_valid(w, C, q_max):
    found = D.even_numerator_approx(w, C, q_max)
    assert found == D.even_numerator_scan(w, C, q_max)
    x = 2 * Fraction(w)
    for r in found:
        assert r.p % 2 == 0 and math.gcd(r.p, r.q) == 1 and r.q <= q_max
        assert abs(r.q * x - r.p) < 1 / (Fraction(C) * r.q)
    assert [r.q for r in found] == sorted(r.q for r in found)


def test_fresnel_examples():
    assert D.fresnel(0.0) == 0
    assert D.fresnel(0.0, "quad") == 0
    assert abs(D.fresnel(1e6) - 0.5) <= 1e-6
    assert abs(D.fresnel(1e6, "quad") - 0.5) <= 1e-6
    with pytest.raises(ValueError):
        D.fresnel(1.0, "bogus")


@pytest.mark.parametrize("method", ["scipy", "quad"])
def test_fresnel_frozen(method):
    for y, ref in frozen.FRESNEL.items():
        assert abs(D.fresnel(y, method) - ref) <= 1e-10


@settings(max_examples=80, deadline=None)
@given(st.floats(-50, 50))
def test_fresnel_odd_and_bounded(y):
    f = D.fresnel(y)
    assert D.fresnel(-y) == -f
    assert abs(f) <= abs(y) + 1e-15
    assert abs(D.fresnel(y, "quad") - f) <= 1e-10


def test_fresnel_against_trapezoid():
    # cumulative trapezoid with 10^6 panels on [0, 5]
    t = np.linspace(0.0, 5.0, 10 ** 6 + 1)
    f = np.exp(1j * np.pi * t * t)
    cum = np.concatenate([[0], np.cumsum((f[1:] + f[:-1]) / 2 * (t[1] - t[0]))]) * np.exp(-0.25j * np.pi)
    idx = np.arange(0, t.size, 25000)
    ref = cum[idx]
    got = D.fresnel_array(t[idx])
    assert np.max(np.abs(got - ref)) <= 1e-8
    assert np.max(np.abs(D.fresnel_array(-t[idx]) + ref)) <= 1e-8


def test_fjk_context_example():
    ctx = D.fjk_context(HALF_SQ, (2, 5))
    assert ctx.xi == pytest.approx(5 * (math.sqrt(2) - 1) - 2, abs=1e-15)
    assert ctx.xi == pytest.approx(0.0711, abs=1e-4)
    assert ctx.A == -1.0 and ctx.a == -ctx.xi / 2
    assert (ctx.p * ctx.q + 2 * ctx.A) % 2 == 0
    assert ctx.theta == pytest.approx(ctx.A + ctx.a, abs=1e-15)
    assert abs(ctx.a) <= 0.5
    assert D.fjk_sum(1, ctx)[0] == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        D.fjk_context(HALF_SQ, (3, 5))


@settings(max_examples=60, deadline=None)
@given(unit, st.integers(1, 60))
def test_fjk_round_trip(w, q):
    ctx = D.nearest_even_context(w, 2 * q - 1)
    if ctx is None:
        return
    assert abs(ctx.xi) <= 1 and abs(ctx.a) <= 0.5
    ref = weyl.weyl_prefix(1000, w).values
    assert np.max(np.abs(D.fjk_sum(1000, ctx) - ref)) <= 1e-10


def test_main_term_examples():
    ctx = D.fjk_context(HALF_SQ, (2, 5))
    assert D.fjk_main_term_magnitude(0, ctx) == 0.0
    with pytest.raises(D.HypothesisRangeError):
        D.fjk_main_term_magnitude(20, ctx)
    s20 = abs(weyl.weyl_prefix(20, HALF_SQ).at(20))
    t20 = D.fjk_main_term_magnitude(20, ctx, strict=False)
    assert abs(s20 - t20) <= 10 * math.sqrt(5) * (1 + abs(ctx.xi) * 5)
    exact = D.fjk_context(Fraction(1, 5), (2, 5))
    assert exact.xi == 0.0
    with pytest.raises(D.ExactRationalError):
        D.fjk_main_term_magnitude(3, exact)


def test_negative_xi_uses_reflection():
    w = 0.2 - 1e-4
    ctx = D.fjk_context(w, (2, 5))
    assert ctx.xi < 0
    mirror = D.fjk_context(1 - w, (8, 5))
    assert mirror.xi == pytest.approx(-ctx.xi, abs=1e-15)
    ms = np.arange(1, 200)
    assert np.allclose(D.fjk_main_terms(ms, ctx), D.fjk_main_terms(ms, mirror), rtol=1e-9)
    s = np.abs(weyl.weyl_prefix(199, w).values)
    assert np.max(np.abs(s - D.fjk_main_terms(ms, ctx))) <= 10 * math.sqrt(5) * (1 + abs(ctx.xi) * 5)


def test_regime_constants_inside_defaults():
    ratios = []
    for w in weyl.sample_frequencies(10, 77):
        for q in range(1, 51, 2):
            ctx = D.nearest_even_context(float(w), q)
            if ctx is None or ctx.xi == 0.0:
                continue
            for m in range(max(1, math.ceil(q / 4)), 4 * q * q + 1, max(1, q)):
                if abs(ctx.xi) <= 1 / (4 * m):
                    ratios.append(D.fjk_main_term_magnitude(m, ctx) / D.regime_scale(m, ctx))
    assert ratios and 0.1 <= min(ratios) and max(ratios) <= 10.0


def test_subsequence_examples():
    with pytest.raises(ValueError):
        D.subsequence_bound_check(0.3, 8, 100)
    zero = D.subsequence_bound_check(0.0, 16, 100)
    assert zero.entries and all(e.flagged for e in zero.entries if e.N >= 6)
    rep = D.subsequence_bound_check(HALF_SQ, 64, 1000)
    assert all(e.ratio >= 2 for e in rep.entries)
    assert all(e.N == math.floor(8 * e.q) for e in rep.entries)
    js = json.loads(json.dumps(D.subsequence_bound_check(0.0, 16, 100).to_dict()))
    assert set(js["entries"][0]) == {"q", "N", "lhs", "ratio", "flagged"}


def test_subsequence_points_are_large():
    omegas = [float(w) for w in weyl.sample_frequencies(20, 5)]
    ents = [e for w in omegas for e in D.subsequence_bound_check(w, 128, 5000).entries]
    assert all(e.ratio >= e.generic for e in ents)
    best, table = D.smallest_working_c(omegas, 2000)
    assert best is None or best in table
