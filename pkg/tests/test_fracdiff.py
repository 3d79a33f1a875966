import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma

from longmem.fracdiff import Direction, apply_fracdiff, frac_coeffs, phase_operator


def test_difference_coefficients_d04():
    c = frac_coeffs(0.4, 4).coeffs
    np.testing.assert_allclose(c, [1, -0.4, -0.12, -0.064, -0.0416], atol=1e-12)


def test_identity_and_first_difference_rows():
    assert frac_coeffs(0.0, 4).coeffs.tolist() == [1, 0, 0, 0, 0]
    assert frac_coeffs(1.0, 4).coeffs.tolist() == [1, -1, 0, 0, 0]


def test_inverse_coefficients_match_gamma_ratio():
    c = frac_coeffs(0.3, 2, Direction.INVERSE).coeffs
    np.testing.assert_allclose(c, [1, 0.3, 0.195], atol=1e-15)
    j = np.arange(10)
    ref = gamma(0.3 + j) / (gamma(0.3) * gamma(j + 1))
    np.testing.assert_allclose(frac_coeffs(0.3, 9, "inverse").coeffs, ref, rtol=1e-12)


def test_direction_from_string_and_lag():
    fc = frac_coeffs(0.2, 7, "difference")
    assert fc.direction is Direction.DIFFERENCE
    assert fc.lag == 7


@settings(max_examples=60, deadline=None)
@given(st.floats(-2, 2, allow_nan=False), st.integers(1, 400))
def test_recursion_identity(d, M):
    c = frac_coeffs(d, M).coeffs
    assert c[0] == 1.0
    j = np.arange(1, M + 1)
    np.testing.assert_allclose(c[1:], c[:-1] * (j - 1 - d) / j, rtol=1e-13, atol=1e-300)
    ci = frac_coeffs(d, M, Direction.INVERSE).coeffs
    np.testing.assert_allclose(ci[1:], ci[:-1] * (d + j - 1) / j, rtol=1e-13, atol=1e-300)


def test_recursion_long_lag_stays_finite():
    c = frac_coeffs(0.45, 10_000, Direction.INVERSE).coeffs
    assert np.all(np.isfinite(c)) and c[-1] > 0
    # eventual monotone decay toward zero
    assert np.all(np.diff(np.abs(c[10:])) <= 0)


def test_apply_identity_and_difference():
    np.testing.assert_array_equal(apply_fracdiff(np.ones(6), frac_coeffs(0.0, 4)), np.ones(6))
    np.testing.assert_array_equal(apply_fracdiff([1.0, 2, 3, 4], frac_coeffs(1.0, 3)), [1, 1, 1, 1])


def test_integer_d_is_repeated_differencing(rng):
    x = rng.standard_normal(50)
    once = np.diff(np.r_[0.0, x])
    twice = np.diff(np.r_[0.0, once])
    np.testing.assert_allclose(apply_fracdiff(x, frac_coeffs(2.0, 49)), twice, atol=1e-12)


def test_round_trip_error_shrinks_with_lag(rng):
    x = rng.standard_normal(2048)
    errs = []
    for M in (64, 256, 512):
        y = apply_fracdiff(apply_fracdiff(x, frac_coeffs(0.3, M)), frac_coeffs(-0.3, M))
        errs.append(np.max(np.abs(y - x)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.05


def test_full_length_round_trip_is_exact(rng):
    # untruncated filters on a finite sample compose to the identity
    x = rng.standard_normal(300)
    y = apply_fracdiff(apply_fracdiff(x, frac_coeffs(0.3, 299)), frac_coeffs(-0.3, 299))
    np.testing.assert_allclose(y, x, atol=1e-10)


def test_fft_and_direct_paths_agree(rng):
    x = rng.standard_normal((400, 2))
    long = frac_coeffs(0.35, 399)
    ref = np.array([[sum(long.coeffs[j] * x[t - j, k] for j in range(t + 1)) for k in range(2)] for t in range(400)])
    np.testing.assert_allclose(apply_fracdiff(x, long), ref, atol=1e-10)


def test_empty_series_rejected():
    with pytest.raises(ValueError):
        apply_fracdiff([], frac_coeffs(0.2, 3))


def test_phase_operator_examples():
    assert phase_operator(0.0, 1.3) == pytest.approx(1 + 0j)
    assert phase_operator(0.5, np.pi) == pytest.approx(np.pi**-0.5 + 0j, abs=1e-15)
    z = phase_operator(0.4, 0.1)
    assert abs(z) == pytest.approx(0.1**-0.4, rel=1e-14)
    assert np.angle(z) == pytest.approx(0.2 * (np.pi - 0.1), rel=1e-14)


def test_phase_operator_rejects_nonpositive_frequency():
    with pytest.raises(ValueError):
        phase_operator(0.3, 0.0)


def test_phase_expansion_accuracy():
    lam = np.linspace(1e-3, 0.5, 200)
    worst = 0.0
    for d in np.linspace(-0.49, 0.49, 11):
        exact = (1 - np.exp(1j * lam)) ** d
        approx = lam**d * np.exp(1j * (lam - np.pi) * d / 2)
        ratio = np.abs(exact - approx) / np.abs(lam**d) / lam**2
        worst = max(worst, ratio.max())
    # O(lambda^2) remainder with a modest constant
    assert worst < 0.1
