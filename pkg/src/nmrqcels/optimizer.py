"""Box-constrained quasi-Newton minimization for the least-squares fits.

The default path delegates to the L-BFGS-B implementation shipped with scipy
(the standard limited-memory active-set method); a small self-contained
projected L-BFGS is available behind ``algorithm="projected"`` for robustness
comparisons.  Both paths share the same contract: objectives return
(value, gradient), every reported iterate is feasible, and non-finite values
abort cleanly with the best feasible point seen so far.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as _scipy_minimize


class _NonFiniteObjective(RuntimeError):
    pass


@dataclass(frozen=True)
class BoxBounds:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper):
            raise ValueError("lower and upper bounds differ in length")
        for lo, hi in zip(lower, upper):
            if lo > hi:
                raise ValueError(f"infeasible bound pair ({lo}, {hi})")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def unbounded(cls, n: int) -> "BoxBounds":
        return cls((-np.inf,) * n, (np.inf,) * n)

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.lower, self.upper))


@dataclass(frozen=True)
class OptimizerConfig:
    memory: int = 10
    grad_tol: float = 1e-10
    step_tol: float = 1e-12
    max_iters: int = 2000
    algorithm: str = "lbfgsb"  # or "projected"

    def __post_init__(self):
        if self.memory < 1 or self.grad_tol <= 0 or self.step_tol <= 0 or self.max_iters < 1:
            raise ValueError("optimizer settings must be positive")
        if self.algorithm not in ("lbfgsb", "projected"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")


@dataclass(frozen=True)
class OptResult:
    x: np.ndarray
    f: float
    grad_norm: float
    iterations: int
    status: str  # converged | max_iters | line_search_failure
    history: tuple[float, ...] = ()


def _projected_gradient_norm(x: np.ndarray, grad: np.ndarray, bounds: BoxBounds) -> float:
    return float(np.max(np.abs(x - bounds.clip(x - grad)))) if len(x) else 0.0


class _TrackedObjective:
    """Wraps (value, gradient) callables: feasibility clip, best-so-far, finiteness."""

    def __init__(self, fn, bounds: BoxBounds):
        self.fn = fn
        self.bounds = bounds
        self.best_x: np.ndarray | None = None
        self.best_f = np.inf
        self.best_grad: np.ndarray | None = None
        self.n_evals = 0

    def __call__(self, x: np.ndarray):
        x = self.bounds.clip(np.asarray(x, dtype=float))
        value, grad = self.fn(x)
        grad = np.asarray(grad, dtype=float)
        self.n_evals += 1
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise _NonFiniteObjective()
        if value < self.best_f:
            self.best_f = float(value)
            self.best_x = x.copy()
            self.best_grad = grad.copy()
        return float(value), grad


def minimize(fn, x0, bounds: BoxBounds, cfg: OptimizerConfig = OptimizerConfig()) -> OptResult:
    """Minimize fn(x) -> (value, grad) over the box; returns a feasible point.

    Guarantees f(result.x) <= f(x0) (x0 projected into the box first).  A
    non-finite objective or gradient at any evaluated point terminates with
    status "line_search_failure" at the best feasible iterate seen.
    """
    x0 = bounds.clip(np.asarray(x0, dtype=float))
    tracked = _TrackedObjective(fn, bounds)
    if cfg.algorithm == "projected":
        return _projected_lbfgs(tracked, x0, bounds, cfg)
    history: list[float] = []

    def callback(xk):
        history.append(tracked.best_f)

    try:
        res = _scipy_minimize(
            tracked,
            x0,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds.pairs(),
            callback=callback,
            options={
                "maxcor": cfg.memory,
                "ftol": cfg.step_tol,
                "gtol": cfg.grad_tol,
                "maxiter": cfg.max_iters,
                "maxfun": 50 * cfg.max_iters,
            },
        )
    except _NonFiniteObjective:
        x = tracked.best_x if tracked.best_x is not None else x0
        grad = tracked.best_grad if tracked.best_grad is not None else np.zeros_like(x0)
        return OptResult(x, tracked.best_f, _projected_gradient_norm(x, grad, bounds),
                         len(history), "line_search_failure", tuple(history))
    x = bounds.clip(res.x)
    f_val = float(res.fun)
    grad = np.asarray(res.jac, dtype=float)
    # scipy can end a failed line search at a point worse than the best seen
    if tracked.best_f < f_val and tracked.best_x is not None:
        x, f_val, grad = tracked.best_x, tracked.best_f, tracked.best_grad
    status = {0: "converged", 1: "max_iters"}.get(res.status, "line_search_failure")
    return OptResult(x, f_val, _projected_gradient_norm(x, grad, bounds),
                     int(res.nit), status, tuple(history))


def _projected_lbfgs(tracked: _TrackedObjective, x0, bounds: BoxBounds, cfg: OptimizerConfig) -> OptResult:
    """Projected-gradient L-BFGS with backtracking Armijo line search."""
    x = x0.copy()
    try:
        f_val, grad = tracked(x)
    except _NonFiniteObjective:
        return OptResult(x0, np.inf, np.inf, 0, "line_search_failure")
    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    history = [f_val]
    status = "max_iters"
    iteration = 0
    for iteration in range(1, cfg.max_iters + 1):
        pg = _projected_gradient_norm(x, grad, bounds)
        if pg <= cfg.grad_tol:
            status = "converged"
            break
        direction = _two_loop(grad, s_list, y_list)
        step = 1.0
        accepted = False
        for _ in range(60):
            candidate = bounds.clip(x + step * direction)
            delta = candidate - x
            if not np.any(delta):
                break
            try:
                f_new, grad_new = tracked(candidate)
            except _NonFiniteObjective:
                status = "line_search_failure"
                x = tracked.best_x if tracked.best_x is not None else x
                f_val = tracked.best_f
                grad = tracked.best_grad if tracked.best_grad is not None else grad
                return OptResult(x, f_val, _projected_gradient_norm(x, grad, bounds),
                                 iteration, status, tuple(history))
            if f_new <= f_val + 1e-4 * float(grad @ delta):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            status = "line_search_failure"
            break
        s = candidate - x
        y = grad_new - grad
        if float(s @ y) > 1e-12 * np.linalg.norm(s) * max(np.linalg.norm(y), 1e-300):
            s_list.append(s)
            y_list.append(y)
            if len(s_list) > cfg.memory:
                s_list.pop(0)
                y_list.pop(0)
        converged_step = abs(f_val - f_new) <= cfg.step_tol * max(abs(f_val), abs(f_new), 1.0)
        x, f_val, grad = candidate, f_new, grad_new
        history.append(f_val)
        if converged_step:
            status = "converged"
            break
    return OptResult(x, f_val, _projected_gradient_norm(x, grad, bounds),
                     iteration, status, tuple(history))


def _two_loop(grad: np.ndarray, s_list, y_list) -> np.ndarray:
    q = -grad.copy()
    alphas = []
    for s, y in zip(reversed(s_list), reversed(y_list)):
        rho = 1.0 / float(y @ s)
        alpha = rho * float(s @ q)
        alphas.append(alpha)
        q -= alpha * y
    if s_list:
        s, y = s_list[-1], y_list[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y), alpha in zip(zip(s_list, y_list), reversed(alphas)):
        rho = 1.0 / float(y @ s)
        beta = rho * float(y @ q)
        q += (alpha - beta) * s
    return q


def check_gradient(fn, x, step: float = 1e-6, guard: float = 1e-8) -> float:
    """Max relative discrepancy between the analytic gradient and central differences."""
    x = np.asarray(x, dtype=float)
    _, grad = fn(x)
    grad = np.asarray(grad, dtype=float)
    worst = 0.0
    for i in range(len(x)):
        bump = np.zeros_like(x)
        bump[i] = step
        f_plus, _ = fn(x + bump)
        f_minus, _ = fn(x - bump)
        fd = (f_plus - f_minus) / (2.0 * step)
        denom = max(abs(grad[i]), abs(fd), guard)
        worst = max(worst, abs(grad[i] - fd) / denom)
    return worst
