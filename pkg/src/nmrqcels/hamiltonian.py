"""Spin-system Hamiltonian and magnetization operators as weighted Pauli sums.

All frequencies are stored internally as angular frequencies (rad/s) with the
2*pi factor absorbed at construction time.  Chemical shifts enter in ppm of the
spectrometer reference frequency, scalar couplings in Hz; every conversion
between those external units and the internal one lives in this module so the
rest of the package never multiplies by 2*pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Proton gyromagnetic ratio, Hz per Tesla.
GYROMAGNETIC_RATIO_HZ_PER_T = 42.577e6

# Dense-matrix operations refuse registers larger than this.
DENSE_QUBIT_LIMIT = 12

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


class SpinSystemError(ValueError):
    """Invalid spin-system definition (bad shifts, couplings or frequencies)."""


def field_to_frequency_hz(b_tesla: float) -> float:
    """Reference resonance frequency (Hz) of protons in a static field (T)."""
    return GYROMAGNETIC_RATIO_HZ_PER_T * b_tesla


@dataclass(frozen=True)
class SpinSystemSpec:
    """Physical definition of the spin system.

    delta_ppm are per-spin chemical shifts in ppm of ``reference_freq_hz``;
    couplings maps ordered index pairs (i, j), i < j, to scalar couplings in
    Hz.  ``rescale`` divides every Hamiltonian coefficient (and is undone when
    converting fitted centers back to ppm).
    """

    n_spins: int
    delta_ppm: tuple[float, ...]
    couplings: dict[tuple[int, int], float] = field(default_factory=dict)
    reference_freq_hz: float = 1.0e6
    rescale: float = 1.0

    def __post_init__(self):
        if self.n_spins < 1:
            raise SpinSystemError("n_spins must be a positive integer")
        object.__setattr__(self, "delta_ppm", tuple(float(d) for d in self.delta_ppm))
        if len(self.delta_ppm) != self.n_spins:
            raise SpinSystemError(
                f"delta_ppm has {len(self.delta_ppm)} entries, expected {self.n_spins}"
            )
        couplings = {}
        for key, j_hz in dict(self.couplings).items():
            i, j = int(key[0]), int(key[1])
            if not (0 <= i < j < self.n_spins):
                raise SpinSystemError(f"coupling index ({i}, {j}) out of range for {self.n_spins} spins")
            couplings[(i, j)] = float(j_hz)
        object.__setattr__(self, "couplings", couplings)
        if not self.reference_freq_hz > 0:
            raise SpinSystemError("reference_freq_hz must be positive")
        if not self.rescale > 0:
            raise SpinSystemError("rescale must be positive")

    @property
    def hz_per_ppm(self) -> float:
        return self.reference_freq_hz * 1e-6

    def fingerprint(self) -> str:
        """Short stable hash of the physical parameters, for dataset provenance."""
        import hashlib
        import json

        payload = json.dumps(
            {
                "n_spins": self.n_spins,
                "delta_ppm": list(self.delta_ppm),
                "couplings": sorted([i, j, v] for (i, j), v in self.couplings.items()),
                "reference_freq_hz": self.reference_freq_hz,
                "rescale": self.rescale,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def ppm_to_angular(ppm: float, spec: SpinSystemSpec) -> float:
    """Chemical-shift offset in ppm -> internal (rescaled) angular frequency, rad/s."""
    return 2.0 * math.pi * ppm * spec.hz_per_ppm / spec.rescale


def centers_to_ppm(theta, spec: SpinSystemSpec):
    """Internal angular frequencies (rad/s) -> ppm; exact inverse of ppm_to_angular."""
    theta = np.asarray(theta, dtype=float)
    out = theta * spec.rescale / (2.0 * math.pi * spec.hz_per_ppm)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PauliString:
    """A weighted tensor product of single-qubit Pauli operators.

    ``letters`` is a string over {I, X, Y, Z}, one letter per qubit (qubit 0 is
    the leftmost letter and the most significant index bit).
    """

    letters: str
    coefficient: float = 1.0
    allow_identity: bool = False

    def __post_init__(self):
        if not self.letters or any(c not in "IXYZ" for c in self.letters):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")
        if set(self.letters) == {"I"} and not self.allow_identity:
            raise ValueError("identity-only Pauli string requires allow_identity=True")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    def with_coefficient(self, coefficient: float) -> "PauliString":
        return PauliString(self.letters, coefficient, allow_identity=self.allow_identity)

    def dense(self) -> np.ndarray:
        mat = np.array([[self.coefficient]], dtype=complex)
        for letter in self.letters:
            mat = np.kron(mat, PAULI_MATRICES[letter])
        return mat


def single_site_string(n: int, site: int, letter: str, coefficient: float = 1.0) -> PauliString:
    letters = "".join(letter if k == site else "I" for k in range(n))
    return PauliString(letters, coefficient)


def two_site_string(n: int, i: int, j: int, letter: str, coefficient: float = 1.0) -> PauliString:
    letters = "".join(letter if k in (i, j) else "I" for k in range(n))
    return PauliString(letters, coefficient)


@dataclass(frozen=True)
class PauliSum:
    """A real-weighted sum of Pauli strings on a common register.

    Duplicate letter-sequences are merged at construction; zero-coefficient
    terms are kept only if they were the sole occurrence (so term counts stay
    predictable for deliberately-zero inputs).
    """

    terms: tuple[PauliString, ...]
    register_size: int

    def __post_init__(self):
        merged: dict[str, float] = {}
        order: list[str] = []
        for term in self.terms:
            if term.n_qubits != self.register_size:
                raise ValueError(
                    f"term {term.letters!r} acts on {term.n_qubits} qubits, register has {self.register_size}"
                )
            if term.letters not in merged:
                merged[term.letters] = 0.0
                order.append(term.letters)
            merged[term.letters] += term.coefficient
        object.__setattr__(
            self,
            "terms",
            tuple(
                PauliString(letters, merged[letters], allow_identity=True)
                for letters in order
            ),
        )

    def __len__(self) -> int:
        return len(self.terms)

    def coefficient_one_norm(self) -> float:
        return float(sum(abs(t.coefficient) for t in self.terms))

    def dense(self) -> np.ndarray:
        return pauli_sum_to_dense(self)


def build_nmr_hamiltonian(spec: SpinSystemSpec, interaction: str = "full") -> PauliSum:
    """Spin Hamiltonian as a Pauli sum, coefficients in rescaled rad/s.

    The one-body part contributes (omega_i / 2) Z_i with
    omega_i = 2*pi * delta_i * reference_freq_hz * 1e-6, and each coupling
    contributes (omega_ij / 4)(X_i X_j + Y_i Y_j + Z_i Z_j) with
    omega_ij = 2*pi * J_ij.  Everything is divided by ``rescale``.

    ``interaction`` narrows the model for validation studies: "full" keeps the
    isotropic coupling, "zz" keeps only the Z_i Z_j part of each coupling, and
    "z" drops couplings entirely.
    """
    if interaction not in ("full", "zz", "z"):
        raise ValueError(f"unknown interaction mode {interaction!r}")
    n = spec.n_spins
    terms = []
    for i, delta in enumerate(spec.delta_ppm):
        omega = 2.0 * math.pi * delta * spec.hz_per_ppm / spec.rescale
        terms.append(single_site_string(n, i, "Z", omega / 2.0))
    if interaction != "z":
        letters = "XYZ" if interaction == "full" else "Z"
        for (i, j), j_hz in sorted(spec.couplings.items()):
            omega = 2.0 * math.pi * j_hz / spec.rescale
            for letter in letters:
                terms.append(two_site_string(n, i, j, letter, omega / 4.0))
    return PauliSum(tuple(terms), n)


def build_magnetization(spec: SpinSystemSpec) -> tuple[PauliSum, PauliSum]:
    """Transverse magnetization components (M_x, M_y) = (1/2 sum X_k, 1/2 sum Y_k)."""
    n = spec.n_spins
    mx = PauliSum(tuple(single_site_string(n, k, "X", 0.5) for k in range(n)), n)
    my = PauliSum(tuple(single_site_string(n, k, "Y", 0.5) for k in range(n)), n)
    return mx, my


def pauli_sum_to_dense(psum: PauliSum, limit: int = DENSE_QUBIT_LIMIT) -> np.ndarray:
    """Dense 2^n x 2^n matrix of a Pauli sum (oracle path, small registers only)."""
    if psum.register_size > limit:
        raise ValueError(
            f"register of {psum.register_size} qubits exceeds dense limit {limit}"
        )
    dim = 2**psum.register_size
    out = np.zeros((dim, dim), dtype=complex)
    for term in psum.terms:
        out += term.dense()
    return out
