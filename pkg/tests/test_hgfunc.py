import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfc, eval_hermite, gammaln

from bosegrid.hgfunc import (HGBasis, TailWeights, eval_hg, eval_hg_ft, hg_table, tail_bound,
                             tail_bound_grid, tail_moment, tail_weight)


def hermite_oracle(n, m, x):
    """Textbook normalized HG function (only safe for small n)."""
    y = math.sqrt(m) * np.asarray(x, float)
    norm = (m / math.pi) ** 0.25 / math.sqrt(2.0 ** n * math.factorial(n))
    return norm * eval_hermite(n, y) * np.exp(-0.5 * y * y)


@pytest.mark.parametrize("n", [0, 1, 2, 5, 12, 20])
@pytest.mark.parametrize("m", [0.3, 1.0, 4.0])
def test_matches_hermite_polynomials(n, m):
    x = np.linspace(-6, 6, 41)
    np.testing.assert_allclose(eval_hg(n, m, x), hermite_oracle(n, m, x), rtol=1e-10, atol=1e-14)


def test_ground_state_value():
    assert eval_hg(0, 1.0, 0.0) == pytest.approx(math.pi ** -0.25, rel=1e-15)
    assert np.ndim(eval_hg(3, 1.0, 0.7)) == 0


def test_orthonormality_by_quadrature():
    x, w = np.polynomial.hermite.hermgauss(120)
    # Gauss-Hermite absorbs exp(-x^2); undo it for the product of two HG functions
    table = hg_table(60, 1.0, x) * np.exp(0.5 * x * x)
    gram = (table * w) @ table.T
    np.testing.assert_allclose(gram, np.eye(61), atol=1e-11)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 150), x=st.floats(-20, 20), m=st.floats(0.1, 10))
def test_three_term_recurrence(n, x, m):
    t = hg_table(n + 1, m, np.array([x]))[:, 0]
    lhs = math.sqrt(2 * m) * x * t[n]
    rhs = math.sqrt(n + 1) * t[n + 1] + math.sqrt(n) * t[n - 1]
    assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(lhs)))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(0, 80), x=st.floats(-8, 8), m=st.floats(0.05, 20))
def test_mass_scaling(n, x, m):
    assert eval_hg(n, m, x) == pytest.approx(m ** 0.25 * eval_hg(n, 1.0, math.sqrt(m) * x), abs=1e-13)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(0, 60), x=st.floats(-10, 10))
def test_parity(n, x):
    assert eval_hg(n, 1.0, -x) == pytest.approx((-1) ** n * eval_hg(n, 1.0, x), abs=1e-15)


def test_high_order_is_finite_and_bounded():
    x = np.linspace(-60, 60, 2001)
    v = eval_hg(1030, 1.0, x)
    assert np.all(np.isfinite(v))
    assert np.max(np.abs(v)) < 1.0


def test_fourier_transform_by_quadrature():
    # direct numerical transform with kernel exp(-i k x)/sqrt(2 pi)
    x = np.linspace(-14, 14, 6001)
    dx = x[1] - x[0]
    for n in (0, 1, 4, 7):
        f = eval_hg(n, 2.0, x)
        for k in (0.0, 0.6, 1.9):
            direct = np.sum(f * np.exp(-1j * k * x)) * dx / math.sqrt(2 * math.pi)
            assert eval_hg_ft(n, 2.0, k) == pytest.approx(direct, abs=1e-10)


@pytest.mark.parametrize("F", [0.5, 1.5, 3.0, 5.0])
def test_tail_weight_erfc_oracle(F):
    assert tail_weight(0, 1.0, F) ** 2 == pytest.approx(erfc(F), rel=1e-10)
    # phi_1^2 tail: erfc(F) + 2 F exp(-F^2)/sqrt(pi)
    assert tail_weight(1, 1.0, F) ** 2 == pytest.approx(erfc(F) + 2 * F * math.exp(-F * F) / math.sqrt(math.pi),
                                                        rel=1e-10)


def test_tail_weight_mass_scaling():
    assert tail_weight(6, 4.0, 1.0) == pytest.approx(tail_weight(6, 1.0, 2.0), rel=1e-10)


@settings(max_examples=15, deadline=None)
@given(n=st.integers(0, 40), F=st.floats(0.5, 12))
def test_tail_monotone_in_window(n, F):
    assert tail_weight(n, 1.0, F + 0.5) <= tail_weight(n, 1.0, F) + 1e-15


def test_tail_moment_power_one_oracle():
    # int_{|x|>F} x^2 phi_0^2 = erfc(F)/2 + F exp(-F^2)/sqrt(pi)
    F = 1.3
    exact = 0.5 * erfc(F) + F * math.exp(-F * F) / math.sqrt(math.pi)
    assert tail_moment(0, 1.0, F, power=1) ** 2 == pytest.approx(exact, rel=1e-10)


def test_tail_bound_closed_form():
    n, L = 5, 6.0
    log_sq = n * math.log(2 * L * L) - L * L - math.log(L * math.sqrt(math.pi)) - gammaln(n + 1)
    assert tail_bound(n, L) == pytest.approx(math.exp(0.5 * log_sq), rel=1e-14)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(0, 30), L=st.floats(6, 20))
def test_tail_bound_decreasing_beyond_turning_point(n, L):
    if L * L > n + 1:
        assert tail_bound(n, L + 0.5) < tail_bound(n, L)


def test_tail_bound_dominates_far_tail():
    for n in (0, 3, 10):
        L = math.sqrt(2 * n + 1) + 3
        assert tail_weight(n, 1.0, L) <= tail_bound(n, L)


def test_tail_bound_grid_positive_and_decaying():
    v = [tail_bound_grid(3, N) for N in (32, 64, 128)]
    assert all(x > 0 for x in v) and v[0] > v[1] > v[2]
    with pytest.raises(ValueError):
        tail_bound_grid(-1, 32)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        eval_hg(-1, 1.0, 0.0)
    with pytest.raises(ValueError):
        eval_hg(0, 0.0, 0.0)
    with pytest.raises(ValueError):
        HGBasis(-1.0, 3)
    with pytest.raises(ValueError):
        TailWeights(-1.0, 0, 0, 0, (0, 0), (0, 0))
    with pytest.raises(ValueError):
        tail_bound(2, 0.0)


def test_basis_wrapper():
    b = HGBasis(2.0, 4)
    x = np.array([0.1, -0.4])
    np.testing.assert_allclose(b.table(x)[3], b(3, x))
    np.testing.assert_allclose(b.ft(2, x), eval_hg_ft(2, 2.0, x))
