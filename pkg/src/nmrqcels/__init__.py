"""NMR spin-system simulation and multi-level complex-exponential peak estimation."""

from .circuits import (
    BlockEncoding,
    EvolutionMethod,
    ShotConfig,
    build_block_encoding,
    generate_dataset,
    hadamard_test,
    lcu_expectation,
    magnetization_block_encoding,
)
from .hamiltonian import (
    PauliString,
    PauliSum,
    SpinSystemSpec,
    build_magnetization,
    build_nmr_hamiltonian,
    centers_to_ppm,
    field_to_frequency_hz,
    pauli_sum_to_dense,
    ppm_to_angular,
)
from .optimizer import BoxBounds, OptimizerConfig, OptResult, check_gradient, minimize
from .peaks import PeakEstimate, PeakSet
from .qcels import (
    IterationTrace,
    PipelineError,
    QcelsHyperParams,
    circuit_source,
    compute_hyperparams,
    cost_and_grad,
    exact_source,
    run_pipeline,
)
from .sampling import sample_times
from .simulator import (
    EvolutionOracle,
    Provenance,
    SignalDataset,
    StateVector,
    evolve_exact,
    expect,
    hadamard_state,
    magnetization_signal,
)
from .spectrum import (
    NyquistError,
    SpectrumGrid,
    analytic_highfield_peaks,
    analytic_zz_peaks,
    exact_transition_peaks,
    fid_dft_baseline,
    lorentzian_render,
)
from .trotter import (
    ProductFormula,
    StageSchedule,
    build_schedule,
    evolve_trotter,
    exp_pauli_string,
    signal_error,
    signal_error_study,
    trotter_signal,
)

__version__ = "0.1.0"

__all__ = [
    "BlockEncoding", "BoxBounds", "EvolutionMethod", "EvolutionOracle",
    "IterationTrace", "NyquistError", "OptResult", "OptimizerConfig",
    "PauliString", "PauliSum", "PeakEstimate", "PeakSet", "PipelineError",
    "ProductFormula", "Provenance", "QcelsHyperParams", "ShotConfig",
    "SignalDataset", "SpectrumGrid", "SpinSystemSpec", "StageSchedule",
    "StateVector", "analytic_highfield_peaks", "analytic_zz_peaks",
    "build_block_encoding", "build_magnetization", "build_nmr_hamiltonian",
    "build_schedule", "centers_to_ppm", "check_gradient", "circuit_source",
    "compute_hyperparams", "cost_and_grad", "evolve_exact", "evolve_trotter",
    "exact_source", "exact_transition_peaks", "expect", "exp_pauli_string",
    "fid_dft_baseline", "field_to_frequency_hz", "generate_dataset",
    "hadamard_state", "hadamard_test", "lcu_expectation", "lorentzian_render",
    "magnetization_block_encoding", "magnetization_signal", "minimize",
    "pauli_sum_to_dense", "ppm_to_angular", "run_pipeline", "sample_times",
    "signal_error", "signal_error_study", "trotter_signal",
]
