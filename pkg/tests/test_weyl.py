import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import frozen
from weyllab import weyl
from weyllab.torus import Frequency

SQ = Frequency.parse("sqrt2m1")
QUARTER = Frequency.rational(1, 4)
unit = st.floats(0, 1, exclude_max=True)


def test_prefix_examples():
    assert weyl.weyl_prefix(1, 0.731).values[0] == 1.0
    assert np.array_equal(weyl.weyl_prefix(50, 0.0).values, np.arange(1, 51))
    assert weyl.weyl_prefix(3, QUARTER).at(3) == pytest.approx(-1.0, abs=1e-15)
    assert weyl.weyl_prefix(4, SQ).at(0) == 0
    with pytest.raises(ValueError):
        weyl.weyl_prefix(0, SQ)


def test_pure_prefix_examples():
    w = 0.3
    assert weyl.pure_weyl_prefix(1, w).values[0] == pytest.approx(cmath.exp(2j * math.pi * w), abs=1e-15)
    assert np.array_equal(weyl.pure_weyl_prefix(9, 0.0).values, np.arange(1, 10))
    assert abs(weyl.pure_weyl_prefix(2, Frequency.rational(1, 2)).at(2)) <= 1e-15
    assert weyl.pure_weyl_prefix(5, SQ).kind == "W"


def test_frozen_sums():
    vals = weyl.weyl_prefix(20000, SQ).values
    for m, ref in frozen.WEYL_S_SQRT2M1.items():
        assert abs(vals[m - 1] - ref) <= 1e-10


def test_general_examples():
    assert weyl.weyl_general(2, 0.25, 0.25) == pytest.approx(-2.0, abs=1e-14)
    w = SQ.value
    assert weyl.weyl_general(300, w, 0.0) == pytest.approx(weyl.pure_weyl_prefix(300, w).at(300), abs=1e-10)
    assert weyl.weyl_general(300, w, -w) == pytest.approx(weyl.weyl_prefix(300, w).at(300), abs=1e-10)
    with pytest.raises(ValueError):
        weyl.weyl_general(0, w, 0.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3000), unit)
def test_prefix_increments_unit_and_bounded(n, w):
    vals = np.concatenate([[0j], weyl.weyl_prefix(n, w).values])
    assert np.max(np.abs(np.abs(np.diff(vals)) - 1.0)) <= 1e-12
    assert np.all(np.abs(vals[1:]) <= np.arange(1, n + 1) + 1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3000), unit)
def test_conjugation_symmetry(n, w):
    a = np.abs(weyl.weyl_prefix(n, w).values)
    b = np.abs(weyl.weyl_prefix(n, Frequency.real(1.0 - w)).values)
    assert np.allclose(a, b, atol=1e-9)


def test_compensated_vs_naive_at_one_million():
    a = weyl.weyl_prefix(10 ** 6, SQ).values
    b = weyl.weyl_prefix(10 ** 6, SQ, compensated=False).values
    assert np.max(np.abs(a - b)) <= 1e-8


def test_parity_examples():
    assert weyl.parity_identity_check(1, SQ) <= 1e-15
    assert weyl.parity_identity_check(3, QUARTER) <= 1e-15
    assert abs(weyl.weyl_prefix(3, QUARTER).at(3)) == pytest.approx(1.0)
    assert weyl.parity_identity_check(50, SQ) <= 1e-10


def test_parity_identity_on_random_draws():
    rows = np.random.default_rng(3).random((1000, 2))
    worst = max(weyl.parity_identity_check(1 + int(r[0] * 2000), float(r[1])) for r in rows)
    assert worst <= 1e-10


def test_z_examples():
    assert weyl.z_n(0.123, 2) == 1.0
    assert weyl.z_n(0.0, 6) == pytest.approx(math.sqrt(sum(m * m for m in range(1, 6))))
    assert weyl.z_n(QUARTER, 3) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        weyl.z_n(SQ, 1)


@pytest.mark.parametrize("n", range(2, 41))
def test_second_moment_exact(n):
    assert weyl.second_moment_check(n) == pytest.approx(n * (n - 1) / 2, rel=1e-10)


def test_first_moment_examples():
    w1 = weyl.first_moment_estimate(1, 50, 1, "W")
    assert w1.estimate == pytest.approx(1.0, abs=1e-15) and w1.stderr <= 1e-15
    s1 = weyl.first_moment_estimate(1, 50, 1, "S")
    assert s1.estimate == 1.0 and s1.stderr == 0.0
    a, b = weyl.first_moment_curve([10 ** 4, 4 * 10 ** 4], 2000, 11)
    assert abs(a.estimate - b.estimate) <= 0.1 * b.estimate
    with pytest.raises(ValueError):
        weyl.first_moment_estimate(10, 1, 1)


def test_moment_reproducible_across_threads():
    a = weyl.first_moment_curve([500, 3000], 700, 5, threads=1)
    b = weyl.first_moment_curve([500, 3000], 700, 5, threads=8)
    assert a == b


def test_cjvh_constants():
    est = weyl.cjvh_estimate([1000, 4000], 600, 2)
    assert 0.0 < est.c_jvh <= 1.0
    assert est.c0 == pytest.approx(est.c1 ** 2 / 16)
    assert est.delta == pytest.approx(est.c1 ** 2 / 2)
    assert est.c1 == pytest.approx((math.sqrt(2) - 1) / 2 * est.c_jvh)
    with pytest.raises(ValueError):
        weyl.cjvh_estimate([100], 10, 1)


def test_good_set_examples():
    assert weyl.good_set_measure(64, 0.0, 300, 1).estimate == 1.0
    assert weyl.good_set_measure(64, 64.0, 300, 1).estimate == 0.0
    est = weyl.cjvh_estimate([2000, 8000], 2000, 8)
    rep = weyl.good_set_measure(2048, est.c1 ** 2 / 16, 2000, 9)
    assert rep.estimate >= est.delta / 2
    assert rep.stderr >= 0.0


def test_good_set_persistence():
    measures, persistent = weyl.good_set_persistence([512, 1024, 2048, 4096], 0.002, 500, 4)
    assert set(measures) == {512, 1024, 2048, 4096}
    assert 0.0 <= persistent <= min(measures.values())


def test_paley_zygmund_holds_empirically():
    for n in (64, 512):
        rep_lhs, rhs = weyl.paley_zygmund_check(n, 1500, 12)
        assert rep_lhs >= rhs - 3 * math.sqrt(rep_lhs * (1 - rep_lhs) / 1500)


def test_hl_step():
    w = math.sqrt(2) - 1 - 0.17
    st_ = weyl.hl_step(500, w, 0.0)
    assert st_.m == math.floor(2 * w * 500) < 500
    approx = st_.prefactor * weyl.weyl_general(st_.m, st_.omega, st_.xi)
    assert abs(weyl.weyl_general(500, w, 0.0) - approx) <= 10 * w ** -0.5
    assert st_.error_budget == pytest.approx(w ** -0.5)
    assert weyl.hl_step(37, 0.5, 0.1).m == 37
    for bad in (0.0, 0.6, -0.1):
        with pytest.raises(ValueError):
            weyl.hl_step(10, bad, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(20, 5000), st.floats(0.01, 0.5), st.floats(0, 1))
def test_hl_step_contracts_within_budget(m, w, xi):
    step = weyl.hl_step(m, w, xi)
    assert step.m <= m
    approx = step.prefactor * (weyl.weyl_general(step.m, step.omega, step.xi) if step.m else 0)
    assert abs(weyl.weyl_general(m, w, xi) - approx) <= 10 * w ** -0.5


def test_hl_iterate_respects_budget():
    m = 10 ** 5
    steps, approx, budget = weyl.hl_iterate(m, SQ.value, 0.1)
    assert steps and all(s.m >= 10 for s in steps)
    assert budget <= m
    assert abs(approx - weyl.weyl_general(m, SQ.value, 0.1)) <= 10 * budget


def test_curlicue():
    path = weyl.curlicue_path(40, SQ)
    assert path.at(0.0) == 0
    assert path.at(1.0) == pytest.approx(weyl.weyl_prefix(40, SQ).at(40) / math.sqrt(40))
    mid = path.at(2.5 / 40)
    assert mid == pytest.approx((path.positions[2] + path.positions[3]) / 2)
    flat = weyl.curlicue_path(9, 0.0)
    assert flat.at(1.0) == pytest.approx(3.0)
    assert np.all(flat.positions.imag == 0)
    small = weyl.curlicue_path(5, SQ)
    lines = small.to_csv().splitlines()
    assert lines[0] == "t,re,im" and lines[1] == "0.0,0.0,0.0" and len(lines) == 7
    last = [float(c) for c in lines[-1].split(",")]
    assert last == [1.0, small.positions[-1].real, small.positions[-1].imag]

