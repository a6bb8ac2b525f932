"""Dense statevector engine: exact time evolution and magnetization signals.

Exact evolution diagonalizes the Hamiltonian once (cheap at <= 12 qubits) and
caches the eigensystem, so the hundreds of time points a fitting run needs are
each a single basis rotation.  The magnetization signal follows the
evolve-forward convention

    value(t) = exp(-eta*t) * <psi0| e^{+iHt} (M_x + i M_y) e^{-iHt} |psi0>,

whose frequency content for these Hamiltonians is a sum of exp(+i*omega*t)
components at non-negative transition frequencies omega.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from ._util import parallel_chunk_map
from .hamiltonian import (
    DENSE_QUBIT_LIMIT,
    PauliString,
    PauliSum,
    SpinSystemSpec,
    build_magnetization,
    build_nmr_hamiltonian,
    pauli_sum_to_dense,
)

NORM_TOL = 1e-10


@dataclass(frozen=True)
class StateVector:
    """2^n complex amplitudes with unit Euclidean norm.

    Qubit 0 corresponds to the most significant bit of the amplitude index,
    matching the tensor order used for dense operators.
    """

    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes, got shape {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 beyond {NORM_TOL}")
        object.__setattr__(self, "amplitudes", amps)


def hadamard_state(n: int, limit: int = DENSE_QUBIT_LIMIT) -> StateVector:
    """Uniform-superposition ansatz |+>^n: every amplitude 2^(-n/2)."""
    if not 1 <= n <= limit:
        raise ValueError(f"register size {n} outside [1, {limit}]")
    dim = 2**n
    return StateVector(np.full(dim, dim**-0.5, dtype=complex), n)


@functools.lru_cache(maxsize=512)
def _compiled_pauli(letters: str) -> tuple[np.ndarray, np.ndarray]:
    """(index permutation, per-basis phase) such that (P psi) = (phase*psi)[perm]."""
    n = len(letters)
    dim = 2**n
    idx = np.arange(dim)
    flip_mask = 0
    phase = np.ones(dim, dtype=complex)
    for k, letter in enumerate(letters):
        bit = (idx >> (n - 1 - k)) & 1
        if letter == "X":
            flip_mask |= 1 << (n - 1 - k)
        elif letter == "Y":
            flip_mask |= 1 << (n - 1 - k)
            phase = phase * (1j * (1 - 2 * bit))
        elif letter == "Z":
            phase = phase * (1 - 2 * bit)
    return idx ^ flip_mask, phase


def apply_pauli_string(amplitudes: np.ndarray, term: PauliString) -> np.ndarray:
    """coefficient * (P @ amplitudes); works on (..., 2^n) batches."""
    perm, phase = _compiled_pauli(term.letters)
    return term.coefficient * (phase * amplitudes)[..., perm]


def expect(psi: StateVector, obs: PauliSum) -> complex:
    """<psi| obs |psi>; real up to ~1e-12 imaginary part for Hermitian obs."""
    amps = psi.amplitudes
    if obs.register_size != psi.n_qubits:
        raise ValueError("observable register size does not match state")
    total = 0.0 + 0.0j
    for term in obs.terms:
        total += np.vdot(amps, apply_pauli_string(amps, term))
    return complex(total)


@dataclass(frozen=True)
class EvolutionOracle:
    """Cached eigendecomposition H = V diag(E) V^dagger of a Pauli-sum Hamiltonian."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source: PauliSum

    @classmethod
    def build(cls, hamiltonian: PauliSum) -> "EvolutionOracle":
        dense = pauli_sum_to_dense(hamiltonian)
        eigenvalues, eigenvectors = np.linalg.eigh(dense)
        return cls(eigenvalues, eigenvectors, hamiltonian)

    @property
    def n_qubits(self) -> int:
        return self.source.register_size

    def propagate(self, amplitudes: np.ndarray, times: np.ndarray) -> np.ndarray:
        """States e^{-iHt}|psi> for every t; returns (len(times), 2^n)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        coeffs = self.eigenvectors.conj().T @ amplitudes
        phases = np.exp(-1j * np.outer(times, self.eigenvalues))
        return (self.eigenvectors @ (phases * coeffs).T).T


def evolve_exact(oracle: EvolutionOracle, psi: StateVector, t: float) -> StateVector:
    """e^{-iHt}|psi> via the cached eigensystem; exactly norm-preserving."""
    if oracle.n_qubits != psi.n_qubits:
        raise ValueError("oracle and state dimensions do not match")
    amps = oracle.propagate(psi.amplitudes, np.array([t]))[0]
    return StateVector(amps, psi.n_qubits)


@dataclass(frozen=True)
class Provenance:
    """How a signal dataset was produced (engine, formula, shot mode)."""

    kind: str  # "exact" | "trotter" | "circuit"
    detail: dict = field(default_factory=dict)

    def label(self) -> str:
        if not self.detail:
            return self.kind
        inner = ", ".join(f"{k}={v}" for k, v in sorted(self.detail.items()))
        return f"{self.kind}({inner})"


@dataclass(frozen=True)
class SignalDataset:
    """Sampled complex magnetization signal with provenance."""

    times: np.ndarray
    values: np.ndarray
    provenance: Provenance
    fingerprint: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if times.shape != values.shape:
            raise ValueError("times and values must have matching shapes")
        if not np.all(np.isfinite(times)):
            raise ValueError("dataset contains non-finite times")
        if not np.all(np.isfinite(values.real)) or not np.all(np.isfinite(values.imag)):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.times)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# provenance={self.provenance.label()}\n")
            if self.fingerprint:
                fh.write(f"# spec_fingerprint={self.fingerprint}\n")
            for key, value in sorted(self.metadata.items()):
                fh.write(f"# {key}={value}\n")
            fh.write("t_seconds,re,im\n")
            for t, v in zip(self.times, self.values):
                fh.write(f"{float(t)!r},{float(v.real)!r},{float(v.imag)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "SignalDataset":
        meta: dict[str, str] = {}
        times, re, im = [], [], []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    meta[key.strip()] = value.strip()
                    continue
                if line.startswith("t_seconds"):
                    continue
                t, r, i = line.split(",")
                times.append(float(t))
                re.append(float(r))
                im.append(float(i))
        provenance = Provenance(meta.pop("provenance", "exact").split("(")[0], {})
        fingerprint = meta.pop("spec_fingerprint", "")
        values = np.array(re, dtype=float) + 1j * np.array(im, dtype=float)
        return cls(np.array(times), values, provenance, fingerprint, meta)


def magnetization_dense(spec: SpinSystemSpec) -> np.ndarray:
    """Dense combined magnetization M_x + i M_y."""
    mx, my = build_magnetization(spec)
    return pauli_sum_to_dense(mx) + 1j * pauli_sum_to_dense(my)


def magnetization_signal(
    spec: SpinSystemSpec,
    times,
    eta: float = 0.0,
    interaction: str = "full",
    max_workers: int = 1,
    oracle: EvolutionOracle | None = None,
) -> SignalDataset:
    """Exact magnetization time series, optionally damped by exp(-eta*t).

    eta = 0 yields the raw (undamped) magnetization; eta > 0 multiplies the
    complex value at each time by exp(-eta*t), modeling free-induction decay.
    """
    if eta < 0:
        raise ValueError("eta must be >= 0")
    times = np.asarray(times, dtype=float)
    if oracle is None:
        oracle = EvolutionOracle.build(build_nmr_hamiltonian(spec, interaction))
    psi0 = hadamard_state(spec.n_spins)
    m_dense = magnetization_dense(spec)

    def evaluate(chunk: np.ndarray) -> np.ndarray:
        states = oracle.propagate(psi0.amplitudes, chunk)
        return np.einsum("ti,ij,tj->t", states.conj(), m_dense, states)

    values = parallel_chunk_map(evaluate, times, max_workers)
    if eta > 0:
        values = values * np.exp(-eta * times)
    return SignalDataset(
        times,
        values,
        Provenance("exact", {"eta": eta} if eta else {}),
        spec.fingerprint(),
    )
