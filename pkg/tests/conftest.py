import numpy as np
import pytest

from nmrqcels.hamiltonian import SpinSystemSpec


@pytest.fixture
def sulfanol():
    return SpinSystemSpec(2, (3.44, 7.40), {(0, 1): 2.32}, 1e6, 1.0)


@pytest.fixture
def cis_acid():
    return SpinSystemSpec(2, (6.375, 6.302), {(0, 1): 7.92}, 2e8, 2000.0)


@pytest.fixture
def three_spin():
    return SpinSystemSpec(3, (1.0, 3.0, 5.2), {(0, 1): 0.21, (0, 2): 0.17, (1, 2): 0.28}, 1e6, 1.0)


def random_spec(rng: np.random.Generator, n_spins: int | None = None) -> SpinSystemSpec:
    """Small random spin system for property tests."""
    if n_spins is None:
        n_spins = int(rng.integers(1, 4))
    deltas = tuple(rng.uniform(0.5, 9.0, size=n_spins))
    couplings = {}
    for i in range(n_spins):
        for j in range(i + 1, n_spins):
            if rng.random() < 0.8:
                couplings[(i, j)] = float(rng.uniform(0.1, 3.0))
    return SpinSystemSpec(n_spins, deltas, couplings, 1e6, 1.0)


# Exact sulfanol transition values, from the closed-form two-spin solution:
# centers (a+b)/2 +/- c/2 +/- C/2 with C = hypot(a-b, c), amplitudes
# (1 -/+ c/C)/4 at outer/inner positions.
SULFANOL_CENTERS_PPM = np.array([1.96522332, 4.28522332, 6.55477668, 8.87477668])
SULFANOL_AMPS_UNIT_NORM = np.array([0.22066, 0.67179, 0.67179, 0.22066])
CIS_CENTERS_PPM = np.array([6.27717543, 6.31677543, 6.36022457, 6.39982457])
