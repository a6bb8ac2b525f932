"""Matplotlib renderings written next to the delimited outputs.

Every report command saves a PNG beside its CSV so runs are reviewable at a
glance; the CSVs stay the canonical data.  The Agg backend keeps rendering
headless-safe.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .hamiltonian import SpinSystemSpec, centers_to_ppm
from .peaks import PeakSet
from .qcels import IterationTrace
from .simulator import SignalDataset
from .spectrum import SpectrumGrid

plt.rcParams.update({
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
})


def save_signal(dataset: SignalDataset, path) -> None:
    fig, ax = plt.subplots()
    ax.plot(dataset.times, dataset.values.real, label="Re", lw=0.9)
    ax.plot(dataset.times, dataset.values.imag, label="Im", lw=0.9, alpha=0.8)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("magnetization")
    ax.set_title(f"signal [{dataset.provenance.label()}]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_convergence(trace: IterationTrace, spec: SpinSystemSpec, path,
                     final_peaks: PeakSet | None = None) -> None:
    fig, ax = plt.subplots()
    if trace.entries:
        iters = [e.j for e in trace.entries]
        thetas = np.array([centers_to_ppm(e.theta_opt, spec) for e in trace.entries])
        for component in range(thetas.shape[1]):
            ax.plot(iters, thetas[:, component], marker="o", ms=2.5, lw=0.9)
    if final_peaks is not None:
        for peak in final_peaks.peaks:
            ax.axhline(peak.center_ppm, color="k", lw=0.5, ls="--", alpha=0.4)
    ax.set_xlabel("iteration")
    ax.set_ylabel("peak center (ppm)")
    ax.set_title("convergence of fitted peak centers")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_spectrum(grid: SpectrumGrid, path) -> None:
    fig, ax = plt.subplots()
    for i, component in enumerate(grid.components):
        ax.plot(grid.f_ppm, component, lw=0.8, alpha=0.7, label=f"peak {i}")
    style = "--" if grid.components else "-"
    ax.plot(grid.f_ppm, grid.total, style, color="k", lw=1.1, label="sum")
    ax.set_xlabel("chemical shift (ppm)")
    ax.set_ylabel("intensity")
    ax.invert_xaxis()  # NMR convention: shift decreases to the right
    if len(grid.components) <= 8:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_trotter_study(rows: list[dict], path) -> None:
    steps_values = sorted({row["steps"] for row in rows})
    orders = sorted({row["order"] for row in rows})
    fig, axes = plt.subplots(1, len(steps_values), figsize=(4.0 * len(steps_values), 3.6),
                             sharey=True)
    if len(steps_values) == 1:
        axes = [axes]
    for ax, steps in zip(axes, steps_values):
        for order in orders:
            pts = [(r["n_samples"], r["R"]) for r in rows
                   if r["steps"] == steps and r["order"] == order]
            pts.sort()
            ax.loglog([p[0] for p in pts], [max(p[1], 1e-18) for p in pts],
                      marker="o", ms=3, label=f"order {order}")
        ax.set_title(f"{steps} steps")
        ax.set_xlabel("samples N")
        ax.grid(True, which="both", alpha=0.3)
    axes[0].set_ylabel("signal error R")
    axes[0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
