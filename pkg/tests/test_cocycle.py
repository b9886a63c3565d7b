import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import frozen
from weyllab.cocycle import (GridWarning, ScaledProduct, check_grid, cocycle_product, default_grid,
                             jensen_rate, lyapunov_mc, p_n_grid, trace_mstar_m, transfer_matrix)
from weyllab.torus import Frequency, TorusPoint

ORIGIN = TorusPoint(0, 0)
SQ = Frequency.parse("sqrt2m1")


def test_transfer_matrix_examples():
    assert np.array_equal(transfer_matrix(0, 0, 5.0), [[0, -1], [1, 0]])
    assert np.array_equal(transfer_matrix(1, 0.5, 2), [[0, -1], [1, 0]])
    assert np.array_equal(transfer_matrix(0, 1, 2), [[-2, -1], [1, 0]])
    assert np.linalg.det(transfer_matrix(0.3, 1.7, -1.2)) == pytest.approx(1.0, abs=1e-14)


def test_product_examples():
    prod = cocycle_product(2, 1.0, 0.0, ORIGIN, 0.0)
    assert np.allclose(prod.unscaled(), [[3, 2], [-2, -1]], atol=1e-14)
    assert trace_mstar_m(prod) == pytest.approx(math.log(18))
    one = cocycle_product(1, 1.0, 0.0, ORIGIN, 0.0)
    assert np.allclose(one.unscaled(), [[-2, -1], [1, 0]])
    assert trace_mstar_m(one) == pytest.approx(math.log(6))
    rot = cocycle_product(7, 0.0, 0.0, ORIGIN, SQ)
    assert np.allclose(rot.unscaled(), np.linalg.matrix_power([[0, -1], [1, 0]], 7))
    assert trace_mstar_m(rot) == pytest.approx(math.log(2))
    assert trace_mstar_m(ScaledProduct.identity()) == pytest.approx(math.log(2))
    with pytest.raises(ValueError):
        cocycle_product(0, 1.0, 0.0, ORIGIN, SQ)
    with pytest.raises(ValueError):
        cocycle_product(3, 1.0, 0.0, ORIGIN, SQ, potential="random")


def test_against_frozen_trace():
    prod = cocycle_product(6, 0.7, 0.2, TorusPoint(0.1, 0.35), SQ)
    assert math.exp(trace_mstar_m(prod)) == pytest.approx(frozen.TRACE_N6, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30), st.floats(0, 2), st.floats(-2, 2), st.floats(0, 1, exclude_max=True),
       st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_scaled_matches_unscaled(n, lam, E, x, y, w):
    a = cocycle_product(n, lam, E, TorusPoint(x, y), w)
    b = cocycle_product(n, lam, E, TorusPoint(x, y), w, scaled=False)
    assert b.log_scale == 0.0
    assert np.allclose(a.unscaled(), b.matrix, rtol=1e-10, atol=1e-10 * np.abs(b.matrix).max())
    assert trace_mstar_m(a) >= math.log(2) - 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 2000), st.floats(0, 20), st.floats(0, 1, exclude_max=True),
       st.sampled_from(["skew", "amo"]))
def test_renormalised_entries_stay_in_band(n, lam, w, pot):
    prod = cocycle_product(n, lam, 0.0, TorusPoint(0.3, 0.6), w, pot)
    top = np.abs(prod.matrix).max()
    assert 0.5 <= top <= 2.0 or prod.log_scale == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.floats(0, 0.5), st.floats(0, 1, exclude_max=True))
def test_determinant_tracks_scale(n, lam, w):
    prod = cocycle_product(n, lam, 0.0, TorusPoint(0.2, 0.7), w)
    assert np.linalg.det(prod.matrix) == pytest.approx(math.exp(-2 * prod.log_scale), rel=1e-10)


def test_long_product_has_no_overflow():
    prod = cocycle_product(10 ** 6, 50.0, 0.0, TorusPoint(0.1, 0.2), SQ)
    assert np.all(np.isfinite(prod.matrix))
    assert prod.log_scale > 10 ** 6 * math.log(50) * 0.9


def test_pn_examples():
    assert p_n_grid(4, 0.0, SQ) == pytest.approx(2.0, abs=1e-13)
    assert p_n_grid(2, 1.0, 0.0) == pytest.approx(10.0, abs=1e-12)
    assert p_n_grid(1, 1.0, SQ) == pytest.approx(4.0, abs=1e-13)
    assert p_n_grid(1, 1.0, 0.77) == pytest.approx(4.0, abs=1e-13)


def test_pn_matches_frozen_series():
    coeffs = frozen.ALPHAS_N4_SQRT2M1
    lam = 0.8
    expected = sum(c * lam ** (2 * k) for k, c in enumerate(coeffs))
    assert p_n_grid(4, lam, SQ) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.floats(0, 3), st.floats(0, 1, exclude_max=True))
def test_pn_even_in_lambda(n, lam, w):
    assert p_n_grid(n, lam, w) == pytest.approx(p_n_grid(n, -lam, w), rel=1e-12)


def test_grid_warning():
    assert default_grid(3) == (13, 25)
    with pytest.warns(GridWarning):
        p_n_grid(3, 1.0, SQ, grid=(5, 5))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_grid(3, (13, 25))


def test_jensen_examples():
    assert jensen_rate(5, 0.0, SQ) == pytest.approx(math.log(2) / 5)
    assert jensen_rate(2, 1.0, 0.0) == pytest.approx(0.5 * math.log(10))
    assert jensen_rate(4, 0.5, SQ) >= jensen_rate(4, 0.0, SQ)


def test_lyapunov_trivial_and_reproducible():
    est = lyapunov_mc(0.0, 0.0, SQ, 50, 100, seed=1)
    assert est.value == pytest.approx(math.log(2) / 50, rel=1e-12)
    assert est.stderr == 0.0
    a = lyapunov_mc(1.3, 0.2, SQ, 400, 300, seed=9, threads=1)
    b = lyapunov_mc(1.3, 0.2, SQ, 400, 300, seed=9, threads=8)
    assert a == b
    assert a.stderr >= 0


@pytest.mark.parametrize("pot", ["skew", "amo"])
def test_herman_bound(pot):
    est = lyapunov_mc(10.0, 0.0, SQ, 10 ** 4, 200, seed=4, potential=pot)
    assert est.value >= math.log(10) - 0.05
