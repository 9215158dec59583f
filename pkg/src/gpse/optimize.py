"""Gradient ascent with a backtracking line search.

One optimizer serves model training and per-frame latent inference. Only
improving steps are accepted, so the objective trace is non-decreasing by
construction; non-finite trial objectives count as rejections.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FactorizationError
from .kernels import KernelParams


@dataclass(frozen=True)
class OptimizerConfig:
    max_iter: int = 500
    ftol: float = 1e-6  # relative objective change
    gtol: float = 1e-5  # gradient norm
    step0: float = 1.0
    max_halvings: int = 40
    step_growth: float = 2.0


@dataclass(frozen=True)
class TrainConfig:
    """Model-training knobs; init_params overrides the data-driven heuristic."""

    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    init_params: KernelParams | None = None


@dataclass(frozen=True)
class InferConfig:
    """Per-frame latent inference: multi-start count and optimizer budget."""

    n_starts: int = 5
    optimizer: OptimizerConfig = field(
        default_factory=lambda: OptimizerConfig(max_iter=60, ftol=1e-6, gtol=1e-5)
    )


@dataclass
class MaximizeResult:
    solution: np.ndarray
    value: float
    trace: list  # rows (iteration, objective, gradient norm, step size)
    converged: bool
    degraded: bool
    iterations: int


def _try_eval(fun_and_grad, x):
    """Evaluate a trial point; any failure counts as a rejected step."""
    try:
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            value, grad = fun_and_grad(x)
    except (ValueError, FloatingPointError, FactorizationError, np.linalg.LinAlgError):
        return -np.inf, None
    if not np.isfinite(value):
        return -np.inf, None
    return value, grad


def maximize(fun_and_grad, init: np.ndarray, cfg: OptimizerConfig | None = None) -> MaximizeResult:
    """Ascend fun_and_grad from init; returns best point found.

    Stops on relative objective change < ftol, gradient norm < gtol, or
    max_iter. If every trial step of an iteration fails to improve, returns
    the best-so-far with the degraded flag set.
    """
    cfg = cfg or OptimizerConfig()
    x = np.array(init, dtype=np.float64)
    value, grad = fun_and_grad(x)
    if not np.isfinite(value):
        raise ValueError("objective is non-finite at the initial point")
    # normalize the first trial step so badly scaled gradients start sane
    step = cfg.step0 / (1.0 + float(np.linalg.norm(grad)))
    trace = [(0, value, float(np.linalg.norm(grad)), step)]
    converged = False
    degraded = False
    iteration = 0
    for iteration in range(1, cfg.max_iter + 1):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < cfg.gtol:
            converged = True
            break
        improved = False
        for _ in range(cfg.max_halvings):
            candidate = x + step * grad
            cand_value, cand_grad = _try_eval(fun_and_grad, candidate)
            if cand_value > value:
                improved = True
                break
            step *= 0.5
        if not improved:
            degraded = True
            break
        rel_change = (cand_value - value) / max(1.0, abs(value))
        x, value, grad = candidate, cand_value, cand_grad
        trace.append((iteration, value, float(np.linalg.norm(grad)), step))
        step *= cfg.step_growth
        if rel_change < cfg.ftol:
            converged = True
            break
    return MaximizeResult(
        solution=x,
        value=value,
        trace=trace,
        converged=converged,
        degraded=degraded,
        iterations=iteration,
    )


def write_trace_csv(trace, path) -> None:
    """Optimizer trace dump: iteration, objective, gradient norm, step size."""
    with open(path, "w") as fh:
        fh.write("iteration,objective,grad_norm,step\n")
        for it, value, gnorm, step in trace:
            fh.write(f"{it},{value:.12g},{gnorm:.12g},{step:.12g}\n")
