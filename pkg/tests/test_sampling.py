import math

import numpy as np
import pytest

from nmrqcels.sampling import binomial_fraction, raw_stream, sample_times


def test_truncation_support():
    times = sample_times(2.5, 5000, seed=1)
    assert np.all(np.abs(times) <= 2.5)


def test_determinism_same_seed():
    a = sample_times(1.0, 100, seed=42)
    b = sample_times(1.0, 100, seed=42)
    assert np.array_equal(a, b)
    c = sample_times(1.0, 100, seed=43)
    assert not np.array_equal(a, c)
    d = sample_times(1.0, 100, seed=42, stream_key=(3,))
    assert not np.array_equal(a, d)


def _truncated_moment_oracle() -> float:
    """Second moment of the unit-variance Gaussian truncated to [-1, 1].

    Independent quadrature of t^2 exp(-t^2/2) over [-1, 1], normalized by the
    truncated mass.
    """
    grid = np.linspace(-1.0, 1.0, 200_001)
    pdf = np.exp(-(grid**2) / 2.0)
    mass = np.trapezoid(pdf, grid)
    second = np.trapezoid(grid**2 * pdf, grid)
    return second / mass


def test_empirical_std_matches_quadrature_oracle():
    t_scale = 3.7
    times = sample_times(t_scale, 100_000, seed=7)
    expected_std = t_scale * math.sqrt(_truncated_moment_oracle())
    assert abs(np.std(times) / expected_std - 1.0) < 0.02


def test_oracle_agrees_with_closed_form():
    # Var = 1 - 2*phi(1)/(Phi(1) - Phi(-1)) for the standard normal truncated
    # at +/- 1 sigma
    phi1 = math.exp(-0.5) / math.sqrt(2 * math.pi)
    mass = math.erf(1 / math.sqrt(2))
    closed = 1.0 - 2.0 * phi1 / mass
    assert _truncated_moment_oracle() == pytest.approx(closed, rel=1e-6)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        sample_times(0.0, 10, seed=0)
    with pytest.raises(ValueError):
        sample_times(1.0, 0, seed=0)


def test_binomial_fraction_deterministic():
    a = binomial_fraction(0.3, 10_000, raw_stream(5, 1))
    b = binomial_fraction(0.3, 10_000, raw_stream(5, 1))
    assert a == b
    assert abs(a - 0.3) < 0.02
    with pytest.raises(ValueError):
        binomial_fraction(0.5, 0, raw_stream(5))
