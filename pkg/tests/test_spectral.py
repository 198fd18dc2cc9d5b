"""Periodograms, smoothing, sample autocorrelations, and the Hill estimator."""

import math

import numpy as np
import pytest

from elstable.errors import DegenerateSeriesError
from elstable.spectral import (SmoothedTransfer, acf_sequence, fourier_frequencies,
                               gamma_sq, hill_curve, hill_estimator,
                               periodogram_matrix, periodogram_matrix_grid,
                               raw_periodogram, sample_acf, self_normalized_grid,
                               self_normalized_periodogram, smoothed_self_normalized)


@pytest.fixture
def x(rng):
    return rng.standard_t(df=3, size=64)


# --------------------------------------------------------------------------
# periodogram identities

def test_grid_periodogram_matches_direct_sum(x):
    grid = self_normalized_grid(x)
    direct = self_normalized_periodogram(x, grid.freqs)
    np.testing.assert_allclose(grid.values, direct, atol=1e-10)


def test_periodogram_parseval_mean_is_one(x):
    # (1/n) sum_t I_tilde(lambda_t) = sum x_tilde^2 = 1, exactly.
    values = self_normalized_grid(x).values
    assert abs(np.mean(values) - 1.0) < 1e-12


def test_periodogram_scale_invariance(x):
    a = self_normalized_periodogram(x, 0.7)
    b = self_normalized_periodogram(1000.0 * x, 0.7)
    assert abs(a - b) < 1e-12


def test_raw_periodogram_normalization(x):
    # raw = gamma_sq * self-normalized, by construction of the normalization.
    alpha = 1.5
    omega = np.array([0.3, 1.1])
    raw = raw_periodogram(x, alpha, omega)
    self_norm = self_normalized_periodogram(x, omega)
    np.testing.assert_allclose(raw, gamma_sq(x, alpha) * self_norm, rtol=1e-12)


def test_fourier_frequencies_wrap():
    freqs = fourier_frequencies(6)
    assert freqs.shape == (6,)
    assert np.all(freqs > -np.pi) and np.all(freqs <= np.pi)
    assert abs(freqs[-1] - 0.0) < 1e-15  # t = n wraps to 2 pi -> 0


def test_degenerate_series_rejected():
    with pytest.raises(DegenerateSeriesError):
        self_normalized_periodogram(np.zeros(10), 0.5)
    with pytest.raises(DegenerateSeriesError):
        self_normalized_periodogram(np.array([1.0, np.nan]), 0.5)
    with pytest.raises(DegenerateSeriesError):
        self_normalized_periodogram(np.array([]), 0.5)


def test_matrix_periodogram_hermitian_rank_one(rng):
    x = rng.standard_normal((32, 2))
    mats = periodogram_matrix(x, 1.5, np.array([0.4, 2.0]))
    np.testing.assert_allclose(mats, np.conj(np.swapaxes(mats, -1, -2)), atol=1e-12)
    for m in mats:
        eigs = np.linalg.eigvalsh(m)
        assert eigs[0] > -1e-12          # positive semi-definite
        assert eigs[0] < 1e-10 * eigs[1]  # rank one


def test_matrix_periodogram_grid_matches_direct(rng):
    x = rng.standard_normal((24, 2))
    grid = periodogram_matrix_grid(x, 1.5)
    direct = periodogram_matrix(x, 1.5, grid.freqs)
    np.testing.assert_allclose(grid.values, direct, atol=1e-10)


# --------------------------------------------------------------------------
# sample autocorrelations

def test_sample_acf_definition(x):
    n = x.size
    denom = float(x @ x)
    for h in (0, 1, 5):
        expect = float(x[:n - h] @ x[h:]) / denom if h else 1.0
        assert abs(sample_acf(x, h) - expect) < 1e-12


def test_acf_sequence_matches_sample_acf(x):
    seq = acf_sequence(x)
    lags = np.arange(x.size)
    np.testing.assert_allclose(seq, sample_acf(x, lags), atol=1e-10)


def test_sample_acf_rejects_bad_lags(x):
    with pytest.raises(ValueError):
        sample_acf(x, -1)
    with pytest.raises(ValueError):
        sample_acf(x, x.size)


# --------------------------------------------------------------------------
# smoothed transfer estimate

def test_smoothing_with_zero_bandwidth_is_the_periodogram(x):
    # Averaging a single frequency leaves the cosine-series coefficients
    # untouched, so the smoother reduces to the periodogram everywhere.
    smoother = SmoothedTransfer(x, bandwidth=0)
    omega = np.array([0.0, 0.4, 1.3, 3.0])
    np.testing.assert_allclose(smoother(omega),
                               self_normalized_periodogram(x, omega), atol=1e-8)


def test_smoothed_transfer_integrates_to_one(x):
    # The constant cosine-series term is rho_hat(0) = 1 for every bandwidth.
    smoother = SmoothedTransfer(x)
    grid = np.linspace(-np.pi, np.pi, 2049)
    integral = np.trapezoid(smoother(grid), grid) / (2.0 * np.pi)
    assert abs(integral - 1.0) < 1e-8


def test_smoothing_shrinks_high_lag_coefficients(x):
    plain = SmoothedTransfer(x, bandwidth=0).coeffs
    smooth = SmoothedTransfer(x, bandwidth=8).coeffs
    h = np.arange(x.size)
    far = h > 16
    assert np.all(np.abs(smooth[far]) <= np.abs(plain[far]) + 1e-12)


def test_smoothed_default_bandwidth_is_sqrt_n(x):
    assert SmoothedTransfer(x).bandwidth == int(math.sqrt(x.size))
    assert SmoothedTransfer(x, spacing="reciprocal").spacing == "reciprocal"
    with pytest.raises(ValueError):
        SmoothedTransfer(x, bandwidth=x.size)
    with pytest.raises(ValueError):
        SmoothedTransfer(x, spacing="nearest")


def test_smoothed_helper_matches_class(x):
    omega = np.array([0.2, 0.9])
    np.testing.assert_allclose(
        smoothed_self_normalized(x, omega, bandwidth=4),
        SmoothedTransfer(x, bandwidth=4)(omega), atol=1e-14)


# --------------------------------------------------------------------------
# Hill tail-index estimation

def test_hill_hand_computed_value():
    # |x| order statistics 8 >= 4 >= 2 >= 1, k = 2:
    # mean log = (log(8/2) + log(4/2)) / 2 = 1.5 log 2.
    x = np.array([8.0, -4.0, 2.0, 1.0])
    assert abs(hill_estimator(x, k=2) - 1.0 / (1.5 * math.log(2.0))) < 1e-12


def test_hill_recovers_pareto_index(rng):
    # |X| = U^(-1/alpha) is exactly Pareto(alpha): the estimate is consistent.
    alpha = 1.5
    x = rng.random(50_000) ** (-1.0 / alpha)
    est = hill_estimator(x, k=2000)
    assert abs(est - alpha) < 0.1


def test_hill_default_k_and_validation(rng):
    x = rng.standard_cauchy(100)
    assert hill_estimator(x) == hill_estimator(x, k=int(100 ** 0.6))
    with pytest.raises(ValueError):
        hill_estimator(x, k=0)
    with pytest.raises(ValueError):
        hill_estimator(x, k=100)
    with pytest.raises(DegenerateSeriesError):
        hill_estimator(np.ones(50), k=10)


def test_hill_curve_matches_pointwise(rng):
    x = rng.standard_cauchy(200)
    ks = [5, 10, 20]
    np.testing.assert_allclose(hill_curve(x, ks),
                               [hill_estimator(x, k) for k in ks], atol=1e-14)
