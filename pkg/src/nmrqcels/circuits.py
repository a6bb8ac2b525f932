"""Circuit-level emulation of the magnetization measurement primitive.

The magnetization operator is a weighted sum of Pauli strings, embedded into a
larger unitary with the prepare/select construction: PREP loads sqrt(|a_i|/λ)
amplitudes on an ancilla register, SELECT applies the i-th (phase-adjusted)
Pauli string controlled on ancilla state |i>, and projecting the ancillas back
onto |0...0> leaves M/λ acting on the system.  A single extra test qubit in a
Hadamard-test arrangement then reads out the real part (W = identity) or the
imaginary part (W = S-dagger) of <M(t)>.

Everything is simulated as linear algebra on the joint ancilla (x) system
statevector; no gate synthesis is attempted.  Finite-shot mode replaces the
exact test-qubit probability by a seeded binomial draw, one independent stream
per (time point, component).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import parallel_chunk_map
from .hamiltonian import (
    PauliString,
    PauliSum,
    SpinSystemSpec,
    build_magnetization,
    build_nmr_hamiltonian,
)
from .sampling import binomial_fraction, raw_stream
from .simulator import (
    EvolutionOracle,
    Provenance,
    SignalDataset,
    StateVector,
    apply_pauli_string,
    hadamard_state,
)
from .trotter import ProductFormula, trotter_propagate


@dataclass(frozen=True)
class ShotConfig:
    """Measurement mode: exact probabilities or seeded finite sampling."""

    mode: str = "exact"
    shots: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown shot mode {self.mode!r}")
        if self.mode == "sampled" and (self.shots is None or self.shots < 1):
            raise ValueError("sampled mode requires shots >= 1")

    @classmethod
    def exact(cls) -> "ShotConfig":
        return cls("exact")

    @classmethod
    def sampled(cls, shots: int, seed: int = 0) -> "ShotConfig":
        return cls("sampled", shots, seed)


@dataclass(frozen=True)
class EvolutionMethod:
    """How the time-evolved state is produced: exact or a product formula."""

    kind: str = "exact"
    formula: ProductFormula | None = None

    def __post_init__(self):
        if self.kind not in ("exact", "trotter"):
            raise ValueError(f"unknown evolution kind {self.kind!r}")
        if self.kind == "trotter" and self.formula is None:
            raise ValueError("trotter evolution requires a ProductFormula")

    @classmethod
    def exact(cls) -> "EvolutionMethod":
        return cls("exact")

    @classmethod
    def trotter(cls, order: int, steps: int) -> "EvolutionMethod":
        return cls("trotter", ProductFormula(order, steps))

    def label(self) -> str:
        if self.kind == "exact":
            return "exact"
        return f"trotter(order={self.formula.order}, steps={self.formula.steps})"


@dataclass(frozen=True)
class BlockEncoding:
    """PREP/SELECT data for a linear combination of Pauli strings.

    ``prep_amplitudes`` has length 2^n_ancilla with sqrt(|a_i|/lam) in the
    first n_terms slots and zeros in the unused ones; ``select_phases`` carries
    each coefficient's unit-modulus phase so the stored strings keep unit
    coefficient.
    """

    n_ancilla: int
    prep_amplitudes: np.ndarray
    select_terms: tuple[PauliString, ...]
    select_phases: np.ndarray
    lam: float
    system_qubits: int

    @property
    def n_terms(self) -> int:
        return len(self.select_terms)


def build_block_encoding(weighted_terms) -> BlockEncoding:
    """Block-encode sum_i a_i P_i from (a_i, P_i) pairs (a_i complex, P_i unit)."""
    weighted_terms = list(weighted_terms)
    if not weighted_terms:
        raise ValueError("cannot block-encode an empty operator")
    weights = np.array([complex(w) for w, _ in weighted_terms])
    if np.any(weights == 0):
        raise ValueError("cannot block-encode zero-coefficient terms")
    strings = [term.with_coefficient(1.0) for _, term in weighted_terms]
    sizes = {s.n_qubits for s in strings}
    if len(sizes) != 1:
        raise ValueError("all terms must act on the same register")
    n_terms = len(strings)
    lam = float(np.sum(np.abs(weights)))
    n_ancilla = max(0, int(np.ceil(np.log2(n_terms))))
    prep = np.zeros(2**n_ancilla)
    prep[:n_terms] = np.sqrt(np.abs(weights) / lam)
    return BlockEncoding(
        n_ancilla=n_ancilla,
        prep_amplitudes=prep,
        select_terms=tuple(strings),
        select_phases=weights / np.abs(weights),
        lam=lam,
        system_qubits=sizes.pop(),
    )


def block_encoding_from_pauli_sum(psum: PauliSum) -> BlockEncoding:
    return build_block_encoding((t.coefficient, t) for t in psum.terms)


def magnetization_block_encoding(spec: SpinSystemSpec) -> BlockEncoding:
    """Encoding of the combined transverse magnetization M_x + i M_y.

    All 2*n_spins magnitudes equal 1/2, so PREP is the uniform superposition
    over the first 2*n_spins ancilla states and lam equals n_spins; the i on
    the Y components rides along as a select phase.
    """
    mx, my = build_magnetization(spec)
    weighted = [(t.coefficient, t) for t in mx.terms]
    weighted += [(1j * t.coefficient, t) for t in my.terms]
    return build_block_encoding(weighted)


def _encoded_block_apply(be: BlockEncoding, amplitudes: np.ndarray) -> np.ndarray:
    """(M/lam)|psi> computed through the joint ancilla (x) system register.

    Applies PREP to the ancillas, SELECT row by row, then contracts with
    PREP-dagger and keeps the ancilla |0...0> block.
    """
    joint = be.prep_amplitudes[:, None].astype(complex) * amplitudes[None, :]
    for i, (term, phase) in enumerate(zip(be.select_terms, be.select_phases)):
        joint[i] = phase * apply_pauli_string(joint[i], term)
    return be.prep_amplitudes @ joint


def lcu_expectation(psi: StateVector, be: BlockEncoding) -> complex:
    """lam * <psi| PREP^dag SELECT PREP |psi> restricted to the ancilla-0 block.

    Equals <psi| M |psi> for the encoded operator M.
    """
    if be.system_qubits != psi.n_qubits:
        raise ValueError("block encoding register does not match state")
    block = _encoded_block_apply(be, psi.amplitudes)
    return be.lam * complex(np.vdot(psi.amplitudes, block))


_W_PHASES = {"identity": 1.0 + 0.0j, "s_dagger": -1.0j}


def _test_qubit_probability(value_over_lam: float) -> float:
    """P(test qubit = 0); block-encoding ancilla outcomes cancel in the mean."""
    return min(1.0, max(0.0, 0.5 * (1.0 + value_over_lam)))


def _evolved_states(
    spec: SpinSystemSpec,
    times: np.ndarray,
    evolution: EvolutionMethod,
    interaction: str,
) -> np.ndarray:
    hamiltonian = build_nmr_hamiltonian(spec, interaction)
    psi0 = hadamard_state(spec.n_spins)
    if evolution.kind == "exact":
        return EvolutionOracle.build(hamiltonian).propagate(psi0.amplitudes, times)
    return trotter_propagate(hamiltonian, psi0.amplitudes, times, evolution.formula)


def hadamard_test(
    spec: SpinSystemSpec,
    t: float,
    w: str,
    be: BlockEncoding | None = None,
    shots: ShotConfig = ShotConfig.exact(),
    evolution: EvolutionMethod = EvolutionMethod.exact(),
    interaction: str = "full",
    stream_key: tuple[int, ...] = (),
) -> float:
    """One interference measurement: Re<M(t)> for w="identity", Im for w="s_dagger".

    In sampled mode the return value is lam*(2*p_hat - 1) with p_hat the
    empirical test-qubit frequency over ``shots`` draws, an unbiased estimator
    with standard deviation at most lam/sqrt(shots).
    """
    if w not in _W_PHASES:
        raise ValueError(f"w must be 'identity' or 's_dagger', got {w!r}")
    if be is None:
        be = magnetization_block_encoding(spec)
    state = _evolved_states(spec, np.array([t]), evolution, interaction)[0]
    block = _encoded_block_apply(be, state)
    interference = complex(np.vdot(state, block))  # <M(t)>/lam
    target = (_W_PHASES[w] * interference).real
    if shots.mode == "exact":
        return be.lam * target
    p0 = _test_qubit_probability(target)
    component = 0 if w == "identity" else 1
    bitgen = raw_stream(shots.seed, *stream_key, component)
    p_hat = binomial_fraction(p0, shots.shots, bitgen)
    return be.lam * (2.0 * p_hat - 1.0)


def generate_dataset(
    spec: SpinSystemSpec,
    times,
    evolution: EvolutionMethod = EvolutionMethod.exact(),
    shots: ShotConfig = ShotConfig.exact(),
    interaction: str = "full",
    max_workers: int = 1,
) -> SignalDataset:
    """Magnetization dataset from Hadamard-test circuits, one pair per time.

    value(t) = hadamard_test(identity) + i * hadamard_test(s_dagger).  Sampled
    mode derives one RNG stream per (point index, component), so the result is
    independent of evaluation order and bit-identical for a fixed seed.
    """
    times = np.asarray(times, dtype=float)
    be = magnetization_block_encoding(spec)
    if len(times) == 0:
        detail = {"mode": shots.mode} if shots.mode == "exact" else {
            "mode": "sampled", "shots": shots.shots, "seed": shots.seed}
        return SignalDataset(times, np.zeros(0, complex), Provenance("circuit", detail),
                             spec.fingerprint())
    states = _evolved_states(spec, times, evolution, interaction)

    def evaluate(indices: np.ndarray) -> np.ndarray:
        out = np.empty(len(indices), dtype=complex)
        for row, idx in enumerate(indices):
            state = states[idx]
            block = _encoded_block_apply(be, state)
            interference = complex(np.vdot(state, block))
            re_target = interference.real
            im_target = (_W_PHASES["s_dagger"] * interference).real
            if shots.mode == "exact":
                out[row] = be.lam * (re_target + 1j * im_target)
            else:
                p_re = _test_qubit_probability(re_target)
                p_im = _test_qubit_probability(im_target)
                re_hat = binomial_fraction(p_re, shots.shots, raw_stream(shots.seed, int(idx), 0))
                im_hat = binomial_fraction(p_im, shots.shots, raw_stream(shots.seed, int(idx), 1))
                out[row] = be.lam * ((2 * re_hat - 1) + 1j * (2 * im_hat - 1))
        return out

    values = parallel_chunk_map(evaluate, np.arange(len(times)), max_workers)
    detail = {"mode": "exact"} if shots.mode == "exact" else {
        "mode": "sampled", "shots": shots.shots, "seed": shots.seed}
    detail["evolution"] = evolution.label()
    metadata = {
        "lambda": be.lam,
        "normalization": "raw magnetization; amplitudes sum to n_spins/2 at t=0",
    }
    return SignalDataset(times, values, Provenance("circuit", detail), spec.fingerprint(), metadata)
