"""Command-line interface: simulate, estimate, trotter-study, spectrum.

Each command reads a JSON run configuration, writes CSV/JSON artifacts and a
PNG rendering into the output directory, and is deterministic for a fixed
seed.  Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 optimizer failure (partial trace still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import plots
from .circuits import ShotConfig, generate_dataset
from .config import ConfigError, RunConfig, bundled_config_path, load_config
from .hamiltonian import ppm_to_angular
from .peaks import PeakSet
from .qcels import (
    PipelineError,
    circuit_source,
    compute_hyperparams,
    exact_source,
    run_pipeline,
)
from .simulator import magnetization_signal
from .spectrum import NyquistError, dft_peak_localization, lorentzian_render
from .trotter import signal_error_study

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_OPTIMIZER = 4


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args, config: RunConfig) -> int:
    return args.seed if args.seed is not None else config.seed


def cmd_simulate(args, config: RunConfig) -> int:
    section = config.simulate
    if section is None:
        raise ConfigError("missing field 'simulate'")
    out = _outdir(args)
    times = np.linspace(0.0, section.t_max, section.n_points)
    if section.source == "simulator":
        dataset = magnetization_signal(
            config.spin_system, times, eta=section.eta,
            interaction=config.interaction, max_workers=args.threads,
        )
    else:
        shots = (ShotConfig.sampled(section.shots, _seed(args, config))
                 if section.shots else ShotConfig.exact())
        dataset = generate_dataset(
            config.spin_system, times, evolution=section.evolution, shots=shots,
            interaction=config.interaction, max_workers=args.threads,
        )
        if section.eta > 0:
            damped = dataset.values * np.exp(-section.eta * times)
            dataset = type(dataset)(times, damped, dataset.provenance,
                                    dataset.fingerprint,
                                    {**dataset.metadata, "eta": section.eta})
    dataset.to_csv(out / "signal.csv")
    plots.save_signal(dataset, out / "signal.png")
    print(f"wrote {out / 'signal.csv'} ({len(dataset)} rows)")
    return EXIT_OK


def cmd_estimate(args, config: RunConfig) -> int:
    section = config.qcels
    if section is None:
        raise ConfigError("missing field 'qcels'")
    out = _outdir(args)
    seed = _seed(args, config)
    spec = config.spin_system
    hyper = compute_hyperparams(section.epsilon, section.k_peaks, t0_override=section.t0)
    if section.source == "exact":
        source = exact_source(spec, config.interaction, max_workers=args.threads)
    else:
        shots = (ShotConfig.sampled(section.shots, seed)
                 if section.shots else ShotConfig.exact())
        source = circuit_source(spec, section.evolution, shots,
                                config.interaction, max_workers=args.threads)
    try:
        peaks, trace = run_pipeline(
            spec, hyper, source=source, seed=seed,
            interaction=config.interaction, normalization=section.normalization,
        )
    except PipelineError as err:
        if err.trace is not None:
            err.trace.to_csv(out / "trace.csv", spec)
        print(f"optimizer failure: {err}", file=sys.stderr)
        return EXIT_OPTIMIZER
    peaks.to_csv(out / "peaks.csv")
    trace.to_csv(out / "trace.csv", spec)
    plots.save_convergence(trace, spec, out / "convergence.png", peaks)
    metadata = {
        "hyperparameters": {
            "epsilon": hyper.epsilon,
            "n_samples": hyper.n_samples,
            "n_iterations": hyper.n_iterations,
            "t0": hyper.t0,
            "k_peaks": hyper.k_peaks,
        },
        "seed": seed,
        "source": source.provenance.label(),
        "interaction": config.interaction,
        "signal_evaluations": trace.evaluations,
        "normalization": peaks.normalization,
        "peaks": [
            {"amplitude": p.amplitude, "center_ppm": p.center_ppm, "center_rad_s": p.center}
            for p in peaks.peaks
        ],
    }
    if section.baseline is not None:
        baseline = dft_peak_localization(
            spec,
            [p.center_ppm for p in peaks.peaks],
            eta=section.baseline["eta"],
            dt=section.baseline["dt"],
            n_points=int(section.baseline["n_points"]),
            interaction=config.interaction,
        )
        metadata["dft_baseline"] = baseline
        print(
            f"budget: {trace.evaluations} fit evaluations vs "
            f"{baseline['n_samples']} DFT samples "
            f"(localized within one bin: {baseline['localized_within_one_bin']})"
        )
    (out / "run.json").write_text(json.dumps(metadata, indent=2))
    print(f"wrote {out / 'peaks.csv'} ({len(peaks)} peaks, {trace.evaluations} evaluations)")
    return EXIT_OK


def cmd_trotter_study(args, config: RunConfig) -> int:
    section = config.trotter_study
    if section is None:
        raise ConfigError("missing field 'trotter_study'")
    out = _outdir(args)
    rows = signal_error_study(
        config.spin_system,
        orders=section.orders,
        steps_list=section.steps,
        n_samples_list=section.n_samples,
        t_scale=section.t_scale,
        seed=_seed(args, config),
        interaction=config.interaction,
    )
    with open(out / "study.csv", "w", encoding="utf-8") as fh:
        fh.write("order,steps,n_samples,R,stages_per_step\n")
        for row in rows:
            fh.write(f"{row['order']},{row['steps']},{row['n_samples']},"
                     f"{row['R']!r},{row['stages_per_step']}\n")
    plots.save_trotter_study(rows, out / "study.png")
    print(f"wrote {out / 'study.csv'} ({len(rows)} rows)")
    return EXIT_OK


def cmd_spectrum(args, config: RunConfig) -> int:
    section = config.spectrum
    if section is None:
        raise ConfigError("missing field 'spectrum'")
    out = _outdir(args)
    spec = config.spin_system
    if section.peaks_inline is not None:
        amplitudes = [a for a, _ in section.peaks_inline]
        centers = [ppm_to_angular(c, spec) for _, c in section.peaks_inline]
        peaks = PeakSet.build(amplitudes, centers, spec)
    elif section.peaks_csv is not None:
        csv_path = Path(section.peaks_csv)
        if not csv_path.is_absolute():
            csv_path = out / csv_path
        if not csv_path.exists():
            raise ConfigError(f"field 'spectrum.peaks_csv': file '{csv_path}' does not exist")
        peaks = PeakSet.from_csv(csv_path)
    else:
        raise ConfigError("field 'spectrum' needs either 'peaks' or 'peaks_csv'")
    if len(peaks) == 0:
        raise ConfigError("field 'spectrum': peak list is empty")
    grid = lorentzian_render(
        peaks, section.eta, section.f_min, section.f_max, section.n_points,
        hz_per_ppm=spec.hz_per_ppm,
    )
    grid.to_csv(out / "spectrum.csv")
    plots.save_spectrum(grid, out / "spectrum.png")
    print(f"wrote {out / 'spectrum.csv'} ({section.n_points} points, {len(peaks)} peaks)")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "trotter-study": cmd_trotter_study,
    "spectrum": cmd_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nmrqcels",
        description="Spin-system NMR simulation and iterative spectral peak estimation.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True,
                        help="path to a JSON run configuration, or the name of a bundled one")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed (default: config value or 1234)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap for parallel signal evaluation (default: 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config_path = Path(args.config)
        if not config_path.exists():
            config_path = bundled_config_path(args.config)
        config = load_config(config_path)
        return COMMANDS[args.command](args, config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NyquistError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except PipelineError as err:
        print(f"optimizer failure: {err}", file=sys.stderr)
        return EXIT_OPTIMIZER
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
