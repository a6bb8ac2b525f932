"""Peak lists: amplitude/center pairs with unit bookkeeping.

Centers are carried both in the internal rescaled angular unit (rad/s, what
the fit optimizes) and in ppm (what spectra display).  Amplitude normalization
is explicit: "raw" keeps the fitted values (they sum to n_spins/2 at t=0 for
an undamped signal), "unit_sum" rescales to a unit total, and "unit_norm"
rescales to a unit Euclidean norm, the convention used when quoting relative
peak heights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import SpinSystemSpec, centers_to_ppm

NORMALIZATIONS = ("raw", "unit_sum", "unit_norm")


@dataclass(frozen=True)
class PeakEstimate:
    amplitude: float
    center: float  # internal rescaled angular frequency, rad/s
    center_ppm: float

    def __post_init__(self):
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "center", float(self.center))
        object.__setattr__(self, "center_ppm", float(self.center_ppm))
        if self.amplitude < 0:
            raise ValueError("peak amplitude must be >= 0")


@dataclass(frozen=True)
class PeakSet:
    peaks: tuple[PeakEstimate, ...]
    normalization: str = "raw"

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        ordered = tuple(sorted(self.peaks, key=lambda p: p.center))
        object.__setattr__(self, "peaks", ordered)

    def __len__(self) -> int:
        return len(self.peaks)

    @classmethod
    def build(cls, amplitudes, centers_rad_s, spec: SpinSystemSpec,
              normalization: str = "raw") -> "PeakSet":
        amplitudes = np.asarray(amplitudes, dtype=float)
        centers = np.asarray(centers_rad_s, dtype=float)
        ppm = centers_to_ppm(centers, spec)
        ppm = np.atleast_1d(ppm)
        peaks = tuple(
            PeakEstimate(float(a), float(c), float(p))
            for a, c, p in zip(amplitudes, centers, ppm)
        )
        return cls(peaks, "raw").normalized(normalization)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude for p in self.peaks])

    @property
    def centers(self) -> np.ndarray:
        return np.array([p.center for p in self.peaks])

    @property
    def centers_ppm(self) -> np.ndarray:
        return np.array([p.center_ppm for p in self.peaks])

    def normalized(self, mode: str) -> "PeakSet":
        if mode not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {mode!r}")
        if mode == self.normalization:
            return self
        if self.normalization != "raw":
            raise ValueError("renormalization is only defined from raw amplitudes")
        amps = self.amplitudes
        if mode == "unit_sum":
            scale = amps.sum()
        else:
            scale = np.linalg.norm(amps)
        if scale <= 0:
            raise ValueError("cannot normalize an all-zero peak set")
        peaks = tuple(
            PeakEstimate(p.amplitude / scale, p.center, p.center_ppm) for p in self.peaks
        )
        return PeakSet(peaks, mode)

    def merged(self, min_separation_ppm: float) -> "PeakSet":
        """Coalesce peaks closer than min_separation_ppm (amplitude-weighted centers)."""
        if not self.peaks:
            return self
        groups: list[list[PeakEstimate]] = [[self.peaks[0]]]
        for peak in self.peaks[1:]:
            if abs(peak.center_ppm - groups[-1][-1].center_ppm) < min_separation_ppm:
                groups[-1].append(peak)
            else:
                groups.append([peak])
        merged = []
        for group in groups:
            total = sum(p.amplitude for p in group)
            if total > 0:
                center = sum(p.amplitude * p.center for p in group) / total
                ppm = sum(p.amplitude * p.center_ppm for p in group) / total
            else:
                center = group[0].center
                ppm = group[0].center_ppm
            merged.append(PeakEstimate(total, center, ppm))
        return PeakSet(tuple(merged), self.normalization)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# normalization={self.normalization}\n")
            fh.write("k,amplitude,center_ppm,center_rad_s\n")
            for k, p in enumerate(self.peaks):
                fh.write(f"{k},{p.amplitude!r},{p.center_ppm!r},{p.center!r}\n")

    @classmethod
    def from_csv(cls, path) -> "PeakSet":
        normalization = "raw"
        peaks = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].strip().partition("=")
                    if key.strip() == "normalization":
                        normalization = value.strip()
                    continue
                if line.startswith("k,"):
                    continue
                _, amp, ppm, rad = line.split(",")
                peaks.append(PeakEstimate(float(amp), float(rad), float(ppm)))
        return cls(tuple(peaks), normalization)
