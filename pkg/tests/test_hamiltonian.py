import math

import numpy as np
import pytest

from nmrqcels.hamiltonian import (
    DENSE_QUBIT_LIMIT,
    PauliString,
    PauliSum,
    SpinSystemError,
    SpinSystemSpec,
    build_magnetization,
    build_nmr_hamiltonian,
    centers_to_ppm,
    field_to_frequency_hz,
    pauli_sum_to_dense,
    ppm_to_angular,
)

from conftest import random_spec


def test_sulfanol_hamiltonian_terms(sulfanol):
    ham = build_nmr_hamiltonian(sulfanol)
    assert len(ham) == 5
    by_letters = {t.letters: t.coefficient for t in ham.terms}
    assert by_letters["ZI"] == pytest.approx(2 * math.pi * 3.44 / 2)
    assert by_letters["IZ"] == pytest.approx(2 * math.pi * 7.40 / 2)
    for letters in ("XX", "YY", "ZZ"):
        assert by_letters[letters] == pytest.approx(2 * math.pi * 2.32 / 4)


def test_decoupled_limit_gives_only_z_terms():
    spec = SpinSystemSpec(3, (1.0, 2.0, 3.0), {}, 1e6, 1.0)
    ham = build_nmr_hamiltonian(spec)
    assert len(ham) == 3
    assert all(set(t.letters) <= {"I", "Z"} for t in ham.terms)


def test_cis_unit_chain(cis_acid):
    # independent hand computation of the unit chain:
    # omega = 2*pi * delta_ppm * (nu * 1e-6) / rescale, Z coefficient omega/2
    ham = build_nmr_hamiltonian(cis_acid)
    z0 = next(t for t in ham.terms if t.letters == "ZI")
    expected = 2 * math.pi * 6.375 * (2e8 * 1e-6) / 2 / 2000.0
    assert z0.coefficient == pytest.approx(expected, rel=1e-14)


def test_term_count_formula():
    spec = SpinSystemSpec(3, (1.0, 2.0, 3.0), {(0, 1): 1.0, (1, 2): 2.0}, 1e6, 1.0)
    assert len(build_nmr_hamiltonian(spec)) == 3 + 3 * 2


def test_interaction_modes(sulfanol):
    assert len(build_nmr_hamiltonian(sulfanol, "zz")) == 3
    assert len(build_nmr_hamiltonian(sulfanol, "z")) == 2
    with pytest.raises(ValueError):
        build_nmr_hamiltonian(sulfanol, "xy")


def test_magnetization_structure(sulfanol):
    mx, my = build_magnetization(sulfanol)
    assert len(mx) == 2 and len(my) == 2
    assert all(t.coefficient == 0.5 for t in mx.terms + my.terms)
    lam = mx.coefficient_one_norm() + my.coefficient_one_norm()
    assert lam == pytest.approx(sulfanol.n_spins)


def test_magnetization_single_spin():
    spec = SpinSystemSpec(1, (2.0,), {}, 1e6, 1.0)
    mx, my = build_magnetization(spec)
    assert mx.terms[0].letters == "X" and my.terms[0].letters == "Y"


def test_dense_single_z():
    psum = PauliSum((PauliString("Z", 1.0),), 1)
    assert np.allclose(pauli_sum_to_dense(psum), np.diag([1.0, -1.0]))


def test_dense_xx_antidiagonal():
    psum = PauliSum((PauliString("XX", 1.0),), 2)
    assert np.allclose(pauli_sum_to_dense(psum), np.fliplr(np.eye(4)))


def test_sulfanol_dense_matches_explicit_matrix(sulfanol):
    # brute-force: write the 4x4 matrix by hand from the definition
    a = 2 * math.pi * 3.44
    b = 2 * math.pi * 7.40
    c = 2 * math.pi * 2.32
    explicit = np.array([
        [(a + b) / 2 + c / 4, 0, 0, 0],
        [0, (a - b) / 2 - c / 4, c / 2, 0],
        [0, c / 2, -(a - b) / 2 - c / 4, 0],
        [0, 0, 0, -(a + b) / 2 + c / 4],
    ])
    dense = pauli_sum_to_dense(build_nmr_hamiltonian(sulfanol))
    assert np.allclose(dense, explicit, atol=1e-10)
    assert np.allclose(np.linalg.eigvalsh(dense), np.linalg.eigvalsh(explicit))


def test_dense_limit_enforced():
    psum = PauliSum((PauliString("Z" * (DENSE_QUBIT_LIMIT + 1), 1.0),), DENSE_QUBIT_LIMIT + 1)
    with pytest.raises(ValueError):
        pauli_sum_to_dense(psum)


def test_hamiltonian_hermitian_property():
    rng = np.random.default_rng(11)
    for _ in range(25):
        spec = random_spec(rng)
        dense = pauli_sum_to_dense(build_nmr_hamiltonian(spec))
        assert np.allclose(dense, dense.conj().T, atol=1e-12)


def test_z_part_commutes_with_zz_part():
    rng = np.random.default_rng(5)
    for _ in range(10):
        spec = random_spec(rng, n_spins=3)
        z_only = pauli_sum_to_dense(build_nmr_hamiltonian(spec, "z"))
        with_zz = pauli_sum_to_dense(build_nmr_hamiltonian(spec, "zz"))
        zz_only = with_zz - z_only
        comm = z_only @ zz_only - zz_only @ z_only
        assert np.max(np.abs(comm)) < 1e-10


def test_centers_to_ppm_round_trip(cis_acid):
    rng = np.random.default_rng(3)
    ppm = rng.uniform(-10, 10, size=20)
    theta = np.array([ppm_to_angular(p, cis_acid) for p in ppm])
    back = centers_to_ppm(theta, cis_acid)
    assert np.allclose(back, ppm, rtol=1e-12)
    assert centers_to_ppm(0.0, cis_acid) == 0.0


def test_doublet_difference_to_hz():
    # 0.0396 ppm at a 200 MHz spectrometer is 7.92 Hz
    spec = SpinSystemSpec(2, (6.375, 6.302), {(0, 1): 7.92}, 2e8, 2000.0)
    assert 0.0396 * spec.hz_per_ppm == pytest.approx(7.92, abs=1e-10)


def test_field_to_frequency():
    assert field_to_frequency_hz(1.0) == pytest.approx(42.577e6)


def test_identity_string_needs_flag():
    with pytest.raises(ValueError):
        PauliString("II", 1.0)
    PauliString("II", 1.0, allow_identity=True)


def test_pauli_sum_merges_duplicates():
    psum = PauliSum((PauliString("XZ", 1.0), PauliString("XZ", 0.5)), 2)
    assert len(psum) == 1
    assert psum.terms[0].coefficient == pytest.approx(1.5)


def test_spec_validation_errors():
    with pytest.raises(SpinSystemError):
        SpinSystemSpec(0, (), {}, 1e6, 1.0)
    with pytest.raises(SpinSystemError):
        SpinSystemSpec(2, (1.0,), {}, 1e6, 1.0)
    with pytest.raises(SpinSystemError):
        SpinSystemSpec(2, (1.0, 2.0), {(0, 2): 1.0}, 1e6, 1.0)
    with pytest.raises(SpinSystemError):
        SpinSystemSpec(2, (1.0, 2.0), {(1, 0): 1.0}, 1e6, 1.0)
    with pytest.raises(SpinSystemError):
        SpinSystemSpec(2, (1.0, 2.0), {}, -5.0, 1.0)
    with pytest.raises(SpinSystemError):
        SpinSystemSpec(2, (1.0, 2.0), {}, 1e6, 0.0)
