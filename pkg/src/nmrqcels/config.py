"""Run-configuration loading and validation for the command-line tools.

Configurations are JSON with a versioned schema.  Validation happens before
any computation and errors always name the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .circuits import EvolutionMethod
from .hamiltonian import SpinSystemSpec, SpinSystemError

SCHEMA_VERSION = 1
DEFAULT_SEED = 1234

INTERACTIONS = ("full", "zz", "z")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the field."""


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing field '{where}.{key}'" if where else f"missing field '{key}'")
    return mapping[key]


def _positive(value, where: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{where}' must be a number") from None
    if not value > 0:
        raise ConfigError(f"field '{where}' must be positive")
    return value


def load_spin_system(section: dict) -> SpinSystemSpec:
    n_spins = _require(section, "n_spins", "spin_system")
    delta_ppm = _require(section, "delta_ppm", "spin_system")
    couplings_raw = section.get("couplings", [])
    couplings = {}
    for entry in couplings_raw:
        if len(entry) != 3:
            raise ConfigError("field 'spin_system.couplings' entries must be [i, j, J_hz]")
        i, j, j_hz = entry
        couplings[(int(i), int(j))] = float(j_hz)
    try:
        return SpinSystemSpec(
            n_spins=int(n_spins),
            delta_ppm=tuple(float(d) for d in delta_ppm),
            couplings=couplings,
            reference_freq_hz=_positive(
                section.get("reference_freq_hz", 1e6), "spin_system.reference_freq_hz"
            ),
            rescale=_positive(section.get("rescale", 1.0), "spin_system.rescale"),
        )
    except SpinSystemError as err:
        raise ConfigError(f"field 'spin_system': {err}") from err


def _load_evolution(section: dict | None, where: str) -> EvolutionMethod:
    if section is None:
        return EvolutionMethod.exact()
    kind = section.get("kind", "exact")
    if kind == "exact":
        return EvolutionMethod.exact()
    if kind == "trotter":
        order = int(_require(section, "order", where))
        steps = int(_require(section, "steps", where))
        try:
            return EvolutionMethod.trotter(order, steps)
        except ValueError as err:
            raise ConfigError(f"field '{where}': {err}") from err
    raise ConfigError(f"field '{where}.kind' must be 'exact' or 'trotter'")


@dataclass(frozen=True)
class QcelsSection:
    epsilon: float
    k_peaks: int
    t0: float | None
    source: str  # "exact" | "circuit"
    evolution: EvolutionMethod
    shots: int | None
    normalization: str
    baseline: dict | None


@dataclass(frozen=True)
class SimulateSection:
    t_max: float
    n_points: int
    eta: float
    source: str  # "simulator" | "circuit"
    shots: int | None
    evolution: EvolutionMethod


@dataclass(frozen=True)
class TrotterStudySection:
    orders: tuple[int, ...]
    steps: tuple[int, ...]
    n_samples: tuple[int, ...]
    t_scale: float


@dataclass(frozen=True)
class SpectrumSection:
    eta: float
    f_min: float
    f_max: float
    n_points: int
    peaks_csv: str | None
    peaks_inline: tuple[tuple[float, float], ...] | None  # (amplitude, center_ppm)


@dataclass(frozen=True)
class RunConfig:
    spin_system: SpinSystemSpec
    interaction: str = "full"
    seed: int = DEFAULT_SEED
    qcels: QcelsSection | None = None
    simulate: SimulateSection | None = None
    trotter_study: TrotterStudySection | None = None
    spectrum: SpectrumSection | None = None
    raw: dict = field(default_factory=dict)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file '{path}' does not exist")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file '{path}' is not valid JSON: {err}") from err
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"field 'schema_version' must be {SCHEMA_VERSION}, got {version}")
    spin = load_spin_system(_require(raw, "spin_system", ""))
    interaction = raw.get("interaction", "full")
    if interaction not in INTERACTIONS:
        raise ConfigError(f"field 'interaction' must be one of {INTERACTIONS}")
    seed = int(raw.get("seed", DEFAULT_SEED))

    qcels = None
    if "qcels" in raw:
        section = raw["qcels"]
        epsilon = _positive(_require(section, "epsilon", "qcels"), "qcels.epsilon")
        if not epsilon < 1:
            raise ConfigError("field 'qcels.epsilon' must be < 1")
        k_peaks = int(_require(section, "k_peaks", "qcels"))
        if k_peaks < 1:
            raise ConfigError("field 'qcels.k_peaks' must be >= 1")
        t0 = section.get("t0")
        if t0 is not None:
            t0 = _positive(t0, "qcels.t0")
        source = section.get("source", "exact")
        if source not in ("exact", "circuit"):
            raise ConfigError("field 'qcels.source' must be 'exact' or 'circuit'")
        shots = section.get("shots")
        if shots is not None:
            shots = int(shots)
            if shots < 1:
                raise ConfigError("field 'qcels.shots' must be >= 1")
        normalization = section.get("normalization", "unit_norm")
        if normalization not in ("raw", "unit_sum", "unit_norm"):
            raise ConfigError("field 'qcels.normalization' must be raw, unit_sum or unit_norm")
        baseline = section.get("baseline")
        if baseline is not None:
            _positive(_require(baseline, "eta", "qcels.baseline"), "qcels.baseline.eta")
            _positive(_require(baseline, "dt", "qcels.baseline"), "qcels.baseline.dt")
            n_pts = int(_require(baseline, "n_points", "qcels.baseline"))
            if n_pts < 2 or n_pts & (n_pts - 1):
                raise ConfigError("field 'qcels.baseline.n_points' must be a power of two")
        qcels = QcelsSection(
            epsilon=epsilon,
            k_peaks=k_peaks,
            t0=t0,
            source=source,
            evolution=_load_evolution(section.get("evolution"), "qcels.evolution"),
            shots=shots,
            normalization=normalization,
            baseline=baseline,
        )

    simulate = None
    if "simulate" in raw:
        section = raw["simulate"]
        n_points = int(section.get("n_points", 256))
        if n_points < 1:
            raise ConfigError("field 'simulate.n_points' must be >= 1")
        eta = float(section.get("eta", 0.0))
        if eta < 0:
            raise ConfigError("field 'simulate.eta' must be >= 0")
        source = section.get("source", "simulator")
        if source not in ("simulator", "circuit"):
            raise ConfigError("field 'simulate.source' must be 'simulator' or 'circuit'")
        shots = section.get("shots")
        if shots is not None:
            shots = int(shots)
            if shots < 1:
                raise ConfigError("field 'simulate.shots' must be >= 1")
        simulate = SimulateSection(
            t_max=_positive(section.get("t_max", 20.0), "simulate.t_max"),
            n_points=n_points,
            eta=eta,
            source=source,
            shots=shots,
            evolution=_load_evolution(section.get("evolution"), "simulate.evolution"),
        )

    trotter_study = None
    if "trotter_study" in raw:
        section = raw["trotter_study"]
        orders = tuple(int(o) for o in section.get("orders", (1, 2, 4, 6)))
        for order in orders:
            if order not in (1, 2, 4, 6):
                raise ConfigError("field 'trotter_study.orders' entries must be in {1, 2, 4, 6}")
        steps = tuple(int(s) for s in section.get("steps", (2, 10, 50)))
        if any(s < 1 for s in steps):
            raise ConfigError("field 'trotter_study.steps' entries must be >= 1")
        if "n_samples" in section:
            n_samples = tuple(int(n) for n in section["n_samples"])
        else:
            max_pow = int(section.get("max_pow2", 10))
            n_samples = tuple(2**p for p in range(1, max_pow + 1))
        if any(n < 1 for n in n_samples):
            raise ConfigError("field 'trotter_study.n_samples' entries must be >= 1")
        trotter_study = TrotterStudySection(
            orders=orders,
            steps=steps,
            n_samples=n_samples,
            t_scale=_positive(section.get("t_scale", 20.0), "trotter_study.t_scale"),
        )

    spectrum = None
    if "spectrum" in raw:
        section = raw["spectrum"]
        peaks_inline = None
        if "peaks" in section:
            peaks_inline = tuple(
                (float(a), float(c)) for a, c in section["peaks"]
            )
            if not peaks_inline:
                raise ConfigError("field 'spectrum.peaks' must not be empty")
        n_points = int(section.get("n_points", 2000))
        if n_points < 2:
            raise ConfigError("field 'spectrum.n_points' must be >= 2")
        f_min = float(_require(section, "f_min", "spectrum"))
        f_max = float(_require(section, "f_max", "spectrum"))
        if not f_min < f_max:
            raise ConfigError("field 'spectrum.f_min' must be < 'spectrum.f_max'")
        spectrum = SpectrumSection(
            eta=_positive(_require(section, "eta", "spectrum"), "spectrum.eta"),
            f_min=f_min,
            f_max=f_max,
            n_points=n_points,
            peaks_csv=section.get("peaks_csv"),
            peaks_inline=peaks_inline,
        )

    return RunConfig(
        spin_system=spin,
        interaction=interaction,
        seed=seed,
        qcels=qcels,
        simulate=simulate,
        trotter_study=trotter_study,
        spectrum=spectrum,
        raw=raw,
    )


def bundled_config_path(name: str) -> Path:
    """Path of a configuration shipped with the package (no extension needed)."""
    here = Path(__file__).parent / "configs"
    candidate = here / (name if name.endswith(".json") else f"{name}.json")
    if not candidate.exists():
        available = sorted(p.stem for p in here.glob("*.json"))
        raise ConfigError(f"no bundled config '{name}'; available: {available}")
    return candidate
