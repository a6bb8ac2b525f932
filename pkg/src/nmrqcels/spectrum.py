"""Spectra: Lorentzian rendering, the damped-FID DFT baseline, and analytic oracles.

The analytic oracles cover the two solvable regimes of the spin Hamiltonian
(uncoupled Z-only evolution, and Z plus ZZ coupling for two spins) and the
general brute-force route: diagonalize the Hamiltonian and read peaks off the
transition frequencies weighted by the magnetization matrix elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import (
    SpinSystemSpec,
    build_nmr_hamiltonian,
    centers_to_ppm,
    pauli_sum_to_dense,
    ppm_to_angular,
)
from .peaks import PeakSet
from .simulator import hadamard_state, magnetization_dense, magnetization_signal


class NyquistError(ValueError):
    """Sampling interval too coarse for the fastest transition in the spectrum."""


@dataclass(frozen=True)
class SpectrumGrid:
    """Intensity on a strictly increasing ppm axis, optional per-peak components."""

    f_ppm: np.ndarray
    total: np.ndarray
    eta: float
    components: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        f = np.asarray(self.f_ppm, dtype=float)
        total = np.asarray(self.total, dtype=float)
        if f.shape != total.shape:
            raise ValueError("frequency axis and intensity shapes differ")
        if len(f) >= 2 and not np.all(np.diff(f) > 0):
            raise ValueError("frequency axis must be strictly increasing")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(total))):
            raise ValueError("spectrum contains non-finite entries")
        object.__setattr__(self, "f_ppm", f)
        object.__setattr__(self, "total", total)
        object.__setattr__(self, "components", tuple(np.asarray(c, float) for c in self.components))

    def local_maxima(self) -> list[tuple[float, float]]:
        """(f_ppm, intensity) of strict interior local maxima, descending intensity."""
        t = self.total
        idx = np.where((t[1:-1] > t[:-2]) & (t[1:-1] > t[2:]))[0] + 1
        found = [(float(self.f_ppm[i]), float(t[i])) for i in idx]
        return sorted(found, key=lambda pair: -pair[1])

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# eta={self.eta!r}\n")
            header = "f_ppm,total" + "".join(f",peak_{k}" for k in range(len(self.components)))
            fh.write(header + "\n")
            for i in range(len(self.f_ppm)):
                row = [repr(float(self.f_ppm[i])), repr(float(self.total[i]))]
                row += [repr(float(c[i])) for c in self.components]
                fh.write(",".join(row) + "\n")


def lorentzian_render(
    peaks: PeakSet,
    eta: float,
    f_min: float,
    f_max: float,
    n_points: int,
    hz_per_ppm: float,
) -> SpectrumGrid:
    """Sum of Lorentzians A*eta / (eta^2 + omega^2) on a ppm grid.

    The frequency offset enters in angular units, omega = 2*pi*hz_per_ppm*(f - f0),
    so eta keeps its 1/s meaning independently of the display axis.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if not f_min < f_max:
        raise ValueError("need f_min < f_max")
    if n_points < 2:
        raise ValueError("need at least two grid points")
    if len(peaks) == 0:
        raise ValueError("cannot render an empty peak set")
    f = np.linspace(f_min, f_max, n_points)
    components = []
    for peak in peaks.peaks:
        omega = 2.0 * math.pi * hz_per_ppm * (f - peak.center_ppm)
        components.append(peak.amplitude * eta / (eta**2 + omega**2))
    total = np.sum(components, axis=0)
    return SpectrumGrid(f, total, eta, tuple(components))


def exact_transition_peaks(
    spec: SpinSystemSpec,
    interaction: str = "full",
    threshold: float = 1e-10,
) -> PeakSet:
    """Brute-force peak oracle from the dense eigensystem.

    Peaks sit at eigenvalue differences E_m - E_n whose magnetization matrix
    element (weighted by the ansatz overlaps) is non-negligible; degenerate
    frequencies are merged.  Amplitudes are the raw signal coefficients.
    """
    hamiltonian = build_nmr_hamiltonian(spec, interaction)
    energies, vectors = np.linalg.eigh(pauli_sum_to_dense(hamiltonian))
    psi0 = hadamard_state(spec.n_spins).amplitudes
    overlaps = vectors.conj().T @ psi0
    m_eig = vectors.conj().T @ magnetization_dense(spec) @ vectors
    weights = np.outer(overlaps.conj(), overlaps) * m_eig
    freqs = energies[:, None] - energies[None, :]
    scale = np.max(np.abs(weights))
    entries: list[tuple[float, float]] = []
    dim = len(energies)
    for m in range(dim):
        for n in range(dim):
            w = weights[m, n]
            if abs(w) > threshold * scale:
                entries.append((float(freqs[m, n]), complex(w)))
    entries.sort(key=lambda e: e[0])
    freq_scale = max(1e-30, max(abs(f) for f, _ in entries))
    grouped: list[tuple[float, complex]] = []
    for freq, weight in entries:
        if grouped and abs(freq - grouped[-1][0]) < 1e-9 * freq_scale:
            prev_f, prev_w = grouped[-1]
            total = prev_w + weight
            center = (prev_f * abs(prev_w) + freq * abs(weight)) / (abs(prev_w) + abs(weight))
            grouped[-1] = (center, total)
        else:
            grouped.append((freq, weight))
    amplitudes = [w.real for _, w in grouped]
    centers = [f for f, _ in grouped]
    return PeakSet.build(np.maximum(amplitudes, 0.0), centers, spec)


def analytic_highfield_peaks(spec: SpinSystemSpec) -> PeakSet:
    """Decoupled limit: one peak per spin at its chemical shift, amplitude 1/2."""
    centers = [ppm_to_angular(d, spec) for d in spec.delta_ppm]
    return PeakSet.build([0.5] * spec.n_spins, centers, spec)


def analytic_zz_peaks(spec: SpinSystemSpec) -> PeakSet:
    """Closed-form doublets for two spins with ZZ-only coupling.

    Four peaks at delta_0 +/- J/2 and delta_1 +/- J/2 (in ppm-equivalent
    units), amplitude 1/4 each; J = 0 degenerates to the decoupled pair.
    """
    if spec.n_spins != 2 or len(spec.couplings) > 1:
        raise ValueError("ZZ closed form requires exactly two spins with one coupling")
    j_hz = next(iter(spec.couplings.values())) if spec.couplings else 0.0
    j_ppm = j_hz / spec.hz_per_ppm
    centers_ppm = []
    for delta in spec.delta_ppm:
        centers_ppm.extend([delta - j_ppm / 2.0, delta + j_ppm / 2.0])
    centers = [ppm_to_angular(p, spec) for p in sorted(centers_ppm)]
    peaks = PeakSet.build([0.25] * 4, centers, spec)
    if j_hz == 0.0:
        peaks = peaks.merged(1e-12)
    return peaks


def fid_dft_baseline(
    spec: SpinSystemSpec,
    eta: float,
    dt: float,
    n_points: int,
    interaction: str = "full",
) -> SpectrumGrid:
    """Classical route: uniformly sampled damped FID, discrete Fourier transform.

    Returns the real part on a ppm axis (full, frequency-shifted).  Raises
    NyquistError when the fastest transition exceeds pi/dt, naming the peak.
    """
    if eta <= 0:
        raise ValueError("the DFT baseline needs eta > 0 for a resolvable spectrum")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if n_points < 2 or (n_points & (n_points - 1)) != 0:
        raise ValueError("n_points must be a power of two")
    oracle_peaks = exact_transition_peaks(spec, interaction)
    limit = math.pi / dt
    for peak in oracle_peaks.peaks:
        if abs(peak.center) > limit:
            raise NyquistError(
                f"peak at {peak.center_ppm:.6g} ppm ({peak.center:.6g} rad/s) exceeds "
                f"the Nyquist limit {limit:.6g} rad/s for dt={dt}"
            )
    times = np.arange(n_points) * dt
    fid = magnetization_signal(spec, times, eta=eta, interaction=interaction).values
    transform = dt * np.fft.fft(fid)
    freq_hz = np.fft.fftfreq(n_points, dt)
    order = np.argsort(freq_hz)
    f_ppm = centers_to_ppm(2.0 * math.pi * freq_hz[order], spec)
    return SpectrumGrid(f_ppm, transform.real[order], eta)


def dft_bin_width_ppm(spec: SpinSystemSpec, dt: float, n_points: int) -> float:
    return centers_to_ppm(2.0 * math.pi / (n_points * dt), spec)


def dft_peak_localization(
    spec: SpinSystemSpec,
    reference_ppm,
    eta: float,
    dt: float,
    n_points: int,
    interaction: str = "full",
) -> dict:
    """Locate reference peaks in the DFT baseline; report offsets in bins.

    Used to quote the classical sample budget next to the fitting budget: the
    result records the bin width and, per reference center, the distance to
    the nearest local maximum in bins.
    """
    grid = fid_dft_baseline(spec, eta, dt, n_points, interaction)
    maxima = np.array([f for f, _ in grid.local_maxima()])
    bin_width = dft_bin_width_ppm(spec, dt, n_points)
    offsets = []
    for ref in np.asarray(reference_ppm, dtype=float):
        if len(maxima) == 0:
            offsets.append(math.inf)
            continue
        offsets.append(float(np.min(np.abs(maxima - ref)) / bin_width))
    return {
        "n_samples": n_points,
        "dt": dt,
        "eta": eta,
        "bin_width_ppm": bin_width,
        "offset_bins": offsets,
        "localized_within_one_bin": bool(all(o <= 1.0 for o in offsets)),
    }
