import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import erfcx

from fracchain.exceptions import DomainError, RangeError
from fracchain.mittag_leffler import mittag_leffler


def mp_reference(alpha, z):
    """Power series in arbitrary precision, with digits scaled to the cancellation."""
    a, x = mpmath.mpf(alpha), mpmath.mpf(z)
    digits = int(abs(float(z)) ** (1 / alpha) / math.log(10)) + 40
    with mpmath.workdps(digits):
        total, k = mpmath.mpf(0), 0
        while True:
            term = x**k / mpmath.gamma(a * k + 1)
            total += term
            if k > 10 and abs(term) < mpmath.mpf(10) ** (-digits):
                return float(total)
            k += 1


@pytest.mark.parametrize("x", [0.0, 1e-3, 0.3, 1.0, 2.5, 7.0, 15.0, 40.0, 300.0])
def test_half_order_matches_scaled_erfc(x):
    assert mittag_leffler(0.5, -x) == pytest.approx(float(erfcx(x)), rel=1e-10)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.75, 0.85, 0.95, 0.98])
@pytest.mark.parametrize("z", [-25.0, -9.0, -4.0, -1.5, -0.2, 0.4, 2.0, 6.0])
def test_matches_high_precision_series(alpha, z):
    if abs(z) ** (1 / alpha) > 400:
        pytest.skip("reference series too costly at this argument")
    ref = mp_reference(alpha, z)
    assert mittag_leffler(alpha, z) == pytest.approx(ref, rel=1e-10, abs=1e-300)


@given(st.floats(0.2, 0.99), st.floats(0.0, 30.0), st.floats(0.01, 5.0))
def test_decreasing_on_negative_axis(alpha, x, dx):
    # E_alpha(-x) is completely monotone for 0 < alpha <= 1.
    a, b = mittag_leffler(alpha, -x), mittag_leffler(alpha, -x - dx)
    assert 0 < b <= a <= 1


def test_special_values():
    assert mittag_leffler(0.7, 0.0) == 1.0
    assert mittag_leffler(1.0, -2.0) == math.exp(-2.0)
    assert mittag_leffler(1.0, 3.0) == math.exp(3.0)


def test_errors():
    with pytest.raises(DomainError):
        mittag_leffler(0.0, 1.0)
    with pytest.raises(DomainError):
        mittag_leffler(1.5, 1.0)
    with pytest.raises(DomainError):
        mittag_leffler(0.5, math.nan)
    with pytest.raises(RangeError):
        mittag_leffler(0.5, 50.0)
    with pytest.raises(RangeError):
        mittag_leffler(1.0, 1000.0)


def test_large_negative_tail_is_algebraic():
    # E_alpha(-x) ~ x^-1 / Gamma(1 - alpha) for large x.
    alpha, x = 0.8, 1e4
    assert mittag_leffler(alpha, -x) == pytest.approx(1 / (x * math.gamma(1 - alpha)), rel=1e-3)
    assert np.isfinite(mittag_leffler(0.9, -1e8))
