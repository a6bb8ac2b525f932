"""Iterative multi-level complex-exponential least-squares peak extraction.

The pipeline fits a magnetization time series to sum_k r_k exp(-i theta_k t).
Each level j doubles the sampling time scale T_j = 2^j * t0, draws fresh
truncated-Gaussian times, and re-minimizes the least-squares cost warm-started
at the previous optimum with the frequency box shrunk to
theta_prev +/- pi/T_j, so the frequency resolution doubles per level while the
fit can never alias outside its window.  Amplitudes are box-constrained to be
non-negative throughout.

The per-level landscapes are treacherous once the time scale starts to resolve
the peak splittings: the non-uniform sampling creates deep sidelobe minima
that trap quasi-Newton descent, and the valley around the true parameters is
so ill-conditioned that first-order methods stall orders of magnitude above
the attainable cost.  The level solver therefore layers three stages, all
reusing the level's dataset (the signal-evaluation budget is never touched):

1. box-constrained L-BFGS-B from the warm start;
2. a Gauss-Newton polish, whose quadratic local convergence walks down the
   degenerate valley the quasi-Newton step cannot;
3. when the cost still exceeds the exact-fit floor, a global grid search over
   frequency tuples within the active windows (amplitudes eliminated by
   linear least squares, Gram matrices shared across tuples), zoomed and
   re-polished until the floor is reached or the attempts are exhausted.

Components are grouped into well-separated frequency blocks and the grid runs
per block, which keeps the tuple count polynomial for larger peak budgets.

Signal sources evaluate the magnetization in the frame of the fitted model:
the propagation sign is chosen so that a transition at angular frequency
omega > 0 appears as exp(-i*omega*t) in the dataset and the fitted centers
come out positive.  Sampled times cover the full symmetric window [-T, T];
negative times are backward evolution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .circuits import EvolutionMethod, ShotConfig, generate_dataset
from .hamiltonian import SpinSystemSpec, build_nmr_hamiltonian, centers_to_ppm
from .optimizer import BoxBounds, OptimizerConfig, OptResult, minimize
from .peaks import PeakSet
from .sampling import sample_times
from .simulator import EvolutionOracle, Provenance, SignalDataset, magnetization_signal
from .spectrum import exact_transition_peaks


class PipelineError(RuntimeError):
    """Fitting failed; carries the partial iteration trace."""

    def __init__(self, message: str, trace: "IterationTrace | None" = None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class QcelsHyperParams:
    """Resolution-driven settings of the iterative fit."""

    epsilon: float
    n_samples: int
    t0: float
    n_iterations: int
    k_peaks: int
    delta_param: float = 1.0
    overlap_p: float = 0.1

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.n_samples < 1 or self.n_iterations < 1 or self.k_peaks < 1:
            raise ValueError("n_samples, n_iterations and k_peaks must be >= 1")
        if self.t0 <= 0:
            raise ValueError("t0 must be positive")


def t0_from_formula(epsilon: float, delta_param: float = 1.0) -> float:
    """Closed-form initial time scale 2^(-(1 + log2(1/eps)) * delta / (N*eps)).

    Kept behind an explicit opt-in: for small epsilon the exponent is huge and
    the value collapses to an impractically small number, so callers normally
    pass an explicit t0 instead.
    """
    n_samples = int(round(1.0 / math.sqrt(epsilon)))
    exponent = -(1.0 + math.log2(1.0 / epsilon)) * delta_param / (n_samples * epsilon)
    return 2.0**exponent


def compute_hyperparams(
    epsilon: float,
    k_peaks: int,
    t0_override: float | None = None,
    delta_param: float = 1.0,
    overlap_p: float = 0.1,
) -> QcelsHyperParams:
    """Hyperparameters from the target peak resolution epsilon (ppm).

    N = round(1/sqrt(eps)) and J = ceil(log2(1/eps)) + 2.  t0 comes from the
    override when given (the normal route), else from t0_from_formula.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    n_samples = int(round(1.0 / math.sqrt(epsilon)))
    n_iterations = int(math.ceil(math.log2(1.0 / epsilon))) + 2
    t0 = float(t0_override) if t0_override is not None else t0_from_formula(epsilon, delta_param)
    return QcelsHyperParams(
        epsilon=epsilon,
        n_samples=n_samples,
        t0=t0,
        n_iterations=n_iterations,
        k_peaks=k_peaks,
        delta_param=delta_param,
        overlap_p=overlap_p,
    )


def cost_and_grad(r, theta, dataset: SignalDataset):
    """Least-squares cost of the exponential model and its analytic gradient.

    L = (1/N) sum_n |data_n - sum_k r_k exp(-i theta_k t_n)|^2; returns
    (L, (dL/dr, dL/dtheta)).
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if r.shape != theta.shape:
        raise ValueError("r and theta must have the same length")
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    times = dataset.times
    basis = np.exp(-1j * np.outer(times, theta))  # (N, K)
    residual = dataset.values - basis @ r
    n = len(times)
    value = float(np.mean(np.abs(residual) ** 2))
    conj_res = residual.conj()
    grad_r = -(2.0 / n) * (basis.T @ conj_res).real
    grad_theta = -(2.0 / n) * r * (basis.T @ (times * conj_res)).imag
    return value, (grad_r, grad_theta)


# L-BFGS-B settings used by the pipeline: the f-decrease test is effectively
# disabled (it fires thousands of iterations too early in the flat valleys)
# and stopping is left to the projected gradient and the iteration cap.
PIPELINE_OPT_CFG = OptimizerConfig(
    memory=10, grad_tol=1e-12, step_tol=1e-18, max_iters=1500
)


class SignalSource:
    """Evaluates the magnetization in the model frame and counts evaluations."""

    def __init__(self, fn, provenance: Provenance):
        self._fn = fn
        self.provenance = provenance
        self.evaluations = 0

    def evaluate(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        self.evaluations += len(times)
        return self._fn(times)


def exact_source(spec: SpinSystemSpec, interaction: str = "full", max_workers: int = 1) -> SignalSource:
    """Exact-diagonalization source (eigensystem built once, reused per level)."""
    oracle = EvolutionOracle.build(build_nmr_hamiltonian(spec, interaction))

    def fn(times):
        return magnetization_signal(
            spec, -times, interaction=interaction, max_workers=max_workers, oracle=oracle
        ).values

    return SignalSource(fn, Provenance("exact", {}))


def circuit_source(
    spec: SpinSystemSpec,
    evolution: EvolutionMethod = EvolutionMethod.exact(),
    shots: ShotConfig = ShotConfig.exact(),
    interaction: str = "full",
    max_workers: int = 1,
) -> SignalSource:
    """Hadamard-test source; sampled mode re-seeds per call so levels are independent."""
    call_index = 0

    def fn(times):
        nonlocal call_index
        cfg = shots
        if shots.mode == "sampled":
            derived = int(np.random.SeedSequence(shots.seed, spawn_key=(call_index,)).generate_state(1)[0])
            cfg = ShotConfig.sampled(shots.shots, derived)
        call_index += 1
        return generate_dataset(
            spec, -times, evolution=evolution, shots=cfg,
            interaction=interaction, max_workers=max_workers,
        ).values

    detail = {"evolution": evolution.label(), "mode": shots.mode}
    if shots.mode == "sampled":
        detail["shots"] = shots.shots
        detail["seed"] = shots.seed
    return SignalSource(fn, Provenance("circuit", detail))


@dataclass(frozen=True)
class IterationEntry:
    j: int
    t_scale: float
    times: np.ndarray
    values: np.ndarray
    r_opt: np.ndarray
    theta_opt: np.ndarray
    cost: float
    initial_cost: float
    optimizer_status: str
    optimizer_iterations: int


@dataclass(frozen=True)
class IterationTrace:
    entries: tuple[IterationEntry, ...]
    evaluations: int = 0
    seed: int = 0

    def to_csv(self, path, spec: SpinSystemSpec) -> None:
        """Columns: iter, T_j, cost, theta_0..theta_{K-1} (in ppm)."""
        with open(path, "w", encoding="utf-8") as fh:
            if self.entries:
                k = len(self.entries[0].theta_opt)
                header = "iter,T_j,cost" + "".join(f",theta_{i}" for i in range(k))
                fh.write(header + "\n")
            for entry in self.entries:
                ppm = centers_to_ppm(entry.theta_opt, spec)
                row = [str(entry.j), repr(entry.t_scale), repr(entry.cost)]
                row += [repr(float(p)) for p in np.atleast_1d(ppm)]
                fh.write(",".join(row) + "\n")


def _initial_guess(hyper: QcelsHyperParams, n_spins: int, lo: float, hi: float):
    k = hyper.k_peaks
    width = hi - lo
    theta0 = lo + (2.0 * np.arange(k) + 1.0) / (2.0 * k) * width
    r0 = np.full(k, (n_spins / 2.0) / k)  # |signal(0)| = n_spins/2 for the ansatz
    return r0, theta0


def _break_duplicates(theta: np.ndarray, half_width: float) -> np.ndarray:
    """Nudge near-coincident warm-start frequencies apart.

    Coincident components receive identical gradients and move in lockstep, so
    an optimizer can never separate them; a small deterministic stagger breaks
    the symmetry without leaving the basin.
    """
    theta = theta.copy()
    order = np.argsort(theta)
    tol = 0.01 * half_width
    for rank, (a, b) in enumerate(zip(order[:-1], order[1:])):
        if theta[b] - theta[a] < tol:
            nudge = 0.02 * half_width * (1.0 + 0.1 * rank)
            theta[a] -= nudge
            theta[b] += nudge
    return theta


def _respread_dead(
    r: np.ndarray,
    theta: np.ndarray,
    next_half_width: float,
    times: np.ndarray,
    values: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Re-seed dead components at the residual's strongest lines between levels.

    A component parked far from the signal with a vanishing amplitude can
    never rejoin once its frequency window has shrunk around the stray
    position; before the next level such components are placed, one at a
    time, at the argmax of the current residual periodogram (peeling each
    placement off the residual), so the next level's windows open exactly
    where the model is still missing signal.  When the residual carries no
    positive line the remaining components fall back to equal spacing across
    the live span.  Deterministic, and free of signal evaluations.
    """
    r = r.copy()
    theta = theta.copy()
    max_r = float(np.max(r)) if len(r) else 0.0
    if max_r <= 0:
        return r, theta
    dead = np.flatnonzero(r < 0.02 * max_r)
    if len(dead) == 0 or len(dead) == len(r):
        return r, theta
    live = np.setdiff1d(np.arange(len(r)), dead)
    basis_live = np.exp(-1j * np.outer(times, theta[live]))
    residual = values - basis_live @ r[live]
    span_lo = float(np.min(theta[live])) - 2.0 * next_half_width
    span_hi = float(np.max(theta[live])) + 2.0 * next_half_width
    seed_amp = 0.1 * float(np.mean(r[live]))
    leftover = []
    for d in dead:
        theta_new, r_new = _periodogram_peak(times, residual, span_lo, span_hi)
        if r_new <= 1e-12 * max_r:
            leftover.append(d)
            continue
        theta[d] = theta_new
        r[d] = r_new
        residual = residual - r_new * np.exp(-1j * theta_new * times)
    if leftover:
        slots = span_lo + (2.0 * np.arange(len(leftover)) + 1.0) / (2.0 * len(leftover)) * (span_hi - span_lo)
        for d, slot in zip(leftover, slots):
            theta[d] = slot
            r[d] = seed_amp
    return r, theta


def _periodogram_peak(times: np.ndarray, residual: np.ndarray,
                      lo: float, hi: float, n_grid: int = 512) -> tuple[float, float]:
    """Best single-component (theta, amplitude >= 0) for the residual on [lo, hi].

    The least-squares amplitude of amplitude*exp(-i theta t) at fixed theta is
    Re[(1/N) sum_n residual_n exp(+i theta t_n)]; the grid argmax gets one
    parabolic refinement.  Deterministic; ties resolve to the lowest index.
    """
    thetas = np.linspace(lo, hi, n_grid)
    proj = np.exp(1j * np.outer(thetas, times)) @ residual / len(times)
    scores = proj.real
    best = int(np.argmax(scores))
    theta_best = float(thetas[best])
    if 0 < best < n_grid - 1:
        y0, y1, y2 = scores[best - 1], scores[best], scores[best + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom < 0:
            theta_best += 0.5 * (y0 - y2) / denom * (thetas[1] - thetas[0])
    amp = float((np.exp(1j * theta_best * times) @ residual).real / len(times))
    return theta_best, max(amp, 0.0)


def _rescue_dead_components(
    times: np.ndarray,
    values: np.ndarray,
    x: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    r_max: float,
    half: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """Move zero-amplitude components to the residual's strongest lines.

    Each dead component is placed at the current residual periodogram argmax
    over the live span (its frequency window re-centered there) and the
    residual re-peeled, so several missing peaks are claimed in one pass.
    Returns (x, lo, hi, moved).
    """
    k = len(x) // 2
    r_cur, theta_cur = x[:k], x[k:]
    max_r = float(np.max(r_cur)) if k else 0.0
    if max_r <= 0:
        return x, lo, hi, False
    dead = np.flatnonzero(r_cur < 0.02 * max_r)
    if len(dead) == 0 or len(dead) == k:
        return x, lo, hi, False
    live = np.setdiff1d(np.arange(k), dead)
    basis_live = np.exp(-1j * np.outer(times, theta_cur[live]))
    residual = values - basis_live @ r_cur[live]
    span_lo = float(np.min(theta_cur[live])) - half
    span_hi = float(np.max(theta_cur[live])) + half
    x = x.copy()
    lo = lo.copy()
    hi = hi.copy()
    for d in dead:
        theta_new, r_new = _periodogram_peak(times, residual, span_lo, span_hi)
        x[d] = min(r_new, r_max)
        x[k + d] = theta_new
        lo[d] = theta_new - half
        hi[d] = theta_new + half
        residual = residual - x[d] * np.exp(-1j * theta_new * times)
    return x, lo, hi, True


def _gauss_newton(
    times: np.ndarray,
    values: np.ndarray,
    r: np.ndarray,
    theta: np.ndarray,
    lo_full: np.ndarray,
    hi_full: np.ndarray,
    iters: int = 40,
) -> tuple[np.ndarray, float]:
    """Projected Gauss-Newton on the stacked (r, theta) vector.

    The residual is linear in r and analytic in theta, so the Gauss-Newton
    step costs one thin least-squares solve per iteration and converges
    quadratically inside the valley; steps are backtracked and projected onto
    the box.  Returns (x, cost).
    """
    k = len(r)
    n = len(times)
    x = np.clip(np.concatenate([r, theta]), lo_full, hi_full)

    def residual(x):
        basis = np.exp(-1j * np.outer(times, x[k:]))
        return values - basis @ x[:k], basis

    rho, basis = residual(x)
    cost = float(np.mean(np.abs(rho) ** 2))
    for _ in range(iters):
        jac_r = basis
        jac_t = -1j * times[:, None] * x[:k][None, :] * basis
        jac = np.hstack([jac_r, jac_t])
        a = np.vstack([jac.real, jac.imag])
        b = np.concatenate([rho.real, rho.imag])
        step, *_ = np.linalg.lstsq(a, b, rcond=None)
        alpha = 1.0
        accepted = False
        for _ in range(30):
            x_new = np.clip(x + alpha * step, lo_full, hi_full)
            rho_new, basis_new = residual(x_new)
            cost_new = float(np.mean(np.abs(rho_new) ** 2))
            if cost_new < cost:
                x, rho, basis, cost = x_new, rho_new, basis_new, cost_new
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
    return x, cost


def _grid_candidates(
    times: np.ndarray,
    values: np.ndarray,
    span_lo: float,
    span_hi: float,
    spacing: float,
    k: int,
    r_max: float,
    top: int = 6,
    max_tuples: int = 300_000,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Best frequency k-tuples on a 1-D grid, amplitudes eliminated exactly.

    Every ordered tuple of grid frequencies is scored by the least-squares
    cost with its amplitudes solved in closed form; the Gram matrix of the
    grid basis is computed once, so each tuple costs a k x k solve.  Returns
    the ``top`` (theta, r) candidates, best first.
    """
    if span_hi <= span_lo:
        return []
    n = len(times)
    n_pts = int(np.ceil((span_hi - span_lo) / spacing)) + 1
    n_pts = max(n_pts, k + 2)
    while n_pts > k + 2 and math.comb(n_pts, k) > max_tuples:
        n_pts -= 1
    cand = np.linspace(span_lo, span_hi, n_pts)
    basis = np.exp(-1j * np.outer(times, cand))
    gram = (basis.conj().T @ basis).real / n
    proj = (basis.conj().T @ values).real / n
    power = float(np.mean(np.abs(values) ** 2))
    tuples = np.fromiter(
        (i for combo in combinations(range(n_pts), k) for i in combo),
        dtype=np.int64,
    ).reshape(-1, k)
    gram_batch = gram[tuples[:, :, None], tuples[:, None, :]]
    proj_batch = proj[tuples]
    jitter = 1e-13 * np.eye(k)
    r_batch = np.linalg.solve(gram_batch + jitter[None], proj_batch[..., None])[..., 0]
    r_batch = np.clip(r_batch, 0.0, r_max)
    costs = (
        power
        - 2.0 * np.einsum("bk,bk->b", proj_batch, r_batch)
        + np.einsum("bk,bkl,bl->b", r_batch, gram_batch, r_batch)
    )
    order = np.argsort(costs)[:top]
    return [(cand[tuples[i]], r_batch[i]) for i in order]


def _frequency_blocks(theta: np.ndarray, gap: float) -> list[np.ndarray]:
    """Indices of components grouped into frequency clusters separated by ``gap``.

    Oversized blocks are skipped by the caller (the tuple grid would be
    combinatorial); they only occur while the spectrum is still unresolved,
    where the local stages suffice.
    """
    order = np.argsort(theta)
    blocks: list[list[int]] = [[int(order[0])]]
    for idx in order[1:]:
        if theta[idx] - theta[blocks[-1][-1]] <= gap:
            blocks[-1].append(int(idx))
        else:
            blocks.append([int(idx)])
    return [np.array(block) for block in blocks]


def _global_block_refine(
    times: np.ndarray,
    values: np.ndarray,
    x: np.ndarray,
    cost: float,
    lo: np.ndarray,
    hi: np.ndarray,
    r_max: float,
    t_scale: float,
    floor: float,
    max_zoom: int = 3,
) -> tuple[np.ndarray, float]:
    """Global grid + Gauss-Newton rescue, block by block.

    For each well-separated frequency block, candidate tuples from the grid
    replace the block's components (the rest of the model is subtracted from
    the data first) and the full parameter vector is re-polished; grids are
    then zoomed around the best solution while the cost stays above the
    exact-fit floor.
    """
    k = len(x) // 2
    lo_full = np.concatenate([np.zeros(k), lo])
    hi_full = np.concatenate([np.full(k, r_max), hi])
    base_spacing = 1.0 / (4.0 * t_scale)
    blocks = _frequency_blocks(x[k:], gap=4.0 * math.pi / t_scale)
    for block in blocks:
        if len(block) > 6:
            continue
        for zoom in range(max_zoom + 1):
            if cost <= floor:
                return x, cost
            spacing = base_spacing / (4.0**zoom)
            theta_cur = x[k:]
            if zoom == 0:
                span_lo = float(np.min(lo[block]))
                span_hi = float(np.max(hi[block]))
            else:
                span_lo = float(np.min(theta_cur[block])) - 8.0 * spacing
                span_hi = float(np.max(theta_cur[block])) + 8.0 * spacing
            others = np.setdiff1d(np.arange(k), block)
            basis_others = np.exp(-1j * np.outer(times, theta_cur[others]))
            values_eff = values - basis_others @ x[:k][others]
            improved = False
            for theta_c, r_c in _grid_candidates(
                times, values_eff, span_lo, span_hi, spacing, len(block), r_max
            ):
                x_try = x.copy()
                x_try[block] = r_c
                x_try[k + block] = np.sort(theta_c)
                x_new, cost_new = _gauss_newton(
                    times, values, x_try[:k], x_try[k:], lo_full, hi_full
                )
                if cost_new < cost:
                    x, cost = x_new, cost_new
                    improved = True
            if not improved and zoom > 0:
                break
    return x, cost


def expected_peak_count(n_spins: int) -> int:
    return n_spins * 2 ** (n_spins - 1)


def run_iteration(
    j: int,
    prev: tuple[np.ndarray, np.ndarray] | None,
    hyper: QcelsHyperParams,
    source: SignalSource,
    seed: int,
    n_spins: int,
    r_max: float | None,
    opt_cfg: OptimizerConfig = PIPELINE_OPT_CFG,
    rescue: bool = True,
) -> tuple[np.ndarray, np.ndarray, float, IterationEntry]:
    """One level: sample times at T_j, evaluate the source, refit within shrunk bounds.

    The refit runs the staged solver described in the module docstring; every
    restart reuses the level's dataset, so the signal-evaluation budget is
    exactly n_samples per level.
    """
    t_scale = (2.0**j) * hyper.t0
    times = sample_times(t_scale, hyper.n_samples, seed, stream_key=(j,))
    try:
        values = source.evaluate(times)
        dataset = SignalDataset(times, values, source.provenance)
    except ValueError as err:
        raise PipelineError(f"signal source failed at iteration {j}: {err}") from err
    k = hyper.k_peaks
    half = math.pi / t_scale
    if j == 0:
        if prev is not None:
            raise ValueError("iteration 0 takes no previous optimum")
        lo = np.full(k, -half)
        hi = np.full(k, half)
        r_max = max(2.0 * float(np.max(np.abs(values))), 1e-12)
        r0, theta0 = _initial_guess(hyper, n_spins, -half, half)
    else:
        if prev is None:
            raise ValueError(f"iteration {j} requires the previous optimum")
        r_prev, theta_prev = prev
        if r_max is None:
            raise ValueError("r_max must persist from iteration 0")
        theta_prev = _break_duplicates(theta_prev, half)
        lo = theta_prev - half
        hi = theta_prev + half
        r0, theta0 = r_prev, theta_prev

    lo_full = np.concatenate([np.zeros(k), lo])
    hi_full = np.concatenate([np.full(k, r_max), hi])

    def objective(x):
        value, (grad_r, grad_theta) = cost_and_grad(x[:k], x[k:], dataset)
        return value, np.concatenate([grad_r, grad_theta])

    x0 = np.clip(np.concatenate([r0, theta0]), lo_full, hi_full)
    initial_cost, _ = objective(x0)
    result: OptResult = minimize(objective, x0, BoxBounds(tuple(lo_full), tuple(hi_full)), opt_cfg)
    if not np.isfinite(result.f):
        raise PipelineError(f"optimizer failed at iteration {j} (status {result.status})")
    x_best, cost_best = result.x, result.f
    status = result.status
    if rescue:
        x_gn, cost_gn = _gauss_newton(times, values, x_best[:k], x_best[k:], lo_full, hi_full)
        if cost_gn < cost_best:
            x_best, cost_best = x_gn, cost_gn
        floor = 1e-13 * (1.0 + float(np.mean(np.abs(values) ** 2)))
        if cost_best > floor:
            x_try, lo_try, hi_try, moved = _rescue_dead_components(
                times, values, x_best, lo, hi, r_max, half
            )
            if moved:
                lo_full_try = np.concatenate([np.zeros(k), lo_try])
                hi_full_try = np.concatenate([np.full(k, r_max), hi_try])
                x_new, cost_new = _gauss_newton(
                    times, values, x_try[:k], x_try[k:], lo_full_try, hi_full_try
                )
                if cost_new < cost_best:
                    x_best, cost_best = x_new, cost_new
                    lo, hi = lo_try, hi_try
        if cost_best > floor:
            x_best, cost_best = _global_block_refine(
                times, values, x_best, cost_best, lo, hi, r_max, t_scale, floor
            )
        if cost_best <= floor:
            status = "converged"
    entry = IterationEntry(
        j=j,
        t_scale=t_scale,
        times=times,
        values=values,
        r_opt=x_best[:k],
        theta_opt=x_best[k:],
        cost=cost_best,
        initial_cost=initial_cost,
        optimizer_status=status,
        optimizer_iterations=result.iterations,
    )
    return x_best[:k], x_best[k:], r_max, entry


def validate_initial_window(spec: SpinSystemSpec, hyper: QcelsHyperParams, interaction: str) -> float:
    """Check |theta|*t0 < pi for every true transition; returns the max product."""
    oracle_peaks = exact_transition_peaks(spec, interaction)
    if len(oracle_peaks) == 0:
        return 0.0
    worst = float(np.max(np.abs(oracle_peaks.centers))) * hyper.t0
    if worst >= math.pi:
        raise PipelineError(
            f"initial window too wide: max |theta|*t0 = {worst:.3g} >= pi; "
            "increase the Hamiltonian rescale factor or decrease t0"
        )
    return worst


def run_pipeline(
    spec: SpinSystemSpec,
    hyper: QcelsHyperParams,
    source: SignalSource | None = None,
    seed: int = 0,
    interaction: str = "full",
    opt_cfg: OptimizerConfig = PIPELINE_OPT_CFG,
    normalization: str = "unit_norm",
    merge_close: bool = True,
    rescue: bool = True,
) -> tuple[PeakSet, IterationTrace]:
    """Full iterative fit: J levels, J*N signal evaluations, sorted peak list.

    The returned PeakSet is normalized per ``normalization`` ("unit_norm" by
    default, matching the convention of quoting amplitudes relative to a unit
    Euclidean norm); the raw amplitudes remain available via the trace entries.
    """
    if hyper.k_peaks < expected_peak_count(spec.n_spins):
        warnings.warn(
            f"k_peaks={hyper.k_peaks} is below the dense-spectrum count "
            f"{expected_peak_count(spec.n_spins)} for {spec.n_spins} spins; "
            "some peaks may be missed",
            stacklevel=2,
        )
    validate_initial_window(spec, hyper, interaction)
    if source is None:
        source = exact_source(spec, interaction)
    entries: list[IterationEntry] = []
    prev = None
    r_max = None
    for j in range(hyper.n_iterations):
        try:
            r_opt, theta_opt, r_max, entry = run_iteration(
                j, prev, hyper, source, seed, spec.n_spins, r_max, opt_cfg,
                rescue=rescue,
            )
        except PipelineError as err:
            raise PipelineError(
                str(err), IterationTrace(tuple(entries), source.evaluations, seed)
            ) from err
        entries.append(entry)
        if rescue and j + 1 < hyper.n_iterations:
            next_half = math.pi / ((2.0 ** (j + 1)) * hyper.t0)
            r_opt, theta_opt = _respread_dead(
                r_opt, theta_opt, next_half, entry.times, entry.values
            )
        prev = (r_opt, theta_opt)
    trace = IterationTrace(tuple(entries), source.evaluations, seed)
    peaks = PeakSet.build(entries[-1].r_opt, entries[-1].theta_opt, spec)
    if merge_close:
        peaks = peaks.merged(hyper.epsilon / 2.0)
    return peaks.normalized(normalization), trace
