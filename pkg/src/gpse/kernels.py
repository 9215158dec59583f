"""Kernel functions and Gram-matrix construction shared by both latent models.

Two kernel families over latent points:

  real latents:    k(a, b) = signal_var * exp(-decay * ||a - b||^2)          (+ bias)
  complex latents: k(a, b) = signal_var * exp(-(a-b)^H (a-b) / decay) + bias

Note the different role of `decay` (multiplier vs divisor of the squared
distance). Both kernels are real-valued, so every Gram matrix here is real
symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import FactorizationError

JITTER_START = 1e-8  # times mean diagonal
JITTER_GROWTH = 10.0
JITTER_ATTEMPTS = 6


@dataclass(frozen=True)
class KernelParams:
    signal_var: float  # multiplicative variance of the exponential term
    decay: float  # distance scaling, see module docstring
    noise_precision: float  # observation noise precision (variance 1/noise_precision)
    bias: float = 0.0  # additive kernel offset

    def __post_init__(self):
        if self.signal_var <= 0 or self.decay <= 0 or self.noise_precision <= 0:
            raise ValueError("signal_var, decay and noise_precision must be positive")
        if self.bias < 0:
            raise ValueError("bias must be >= 0")

    @property
    def noise_var(self) -> float:
        return 1.0 / self.noise_precision


def rbf_kernel(z_n: np.ndarray, z_m: np.ndarray, params: KernelParams) -> float:
    """signal_var * exp(-decay * ||z_n - z_m||^2); in (0, signal_var]."""
    z_n = np.asarray(z_n, dtype=np.float64)
    z_m = np.asarray(z_m, dtype=np.float64)
    if z_n.shape != z_m.shape:
        raise ValueError("latent vectors must have equal dimension")
    d2 = float(np.sum((z_n - z_m) ** 2))
    return params.signal_var * float(np.exp(-params.decay * d2))


def real_kernel(z_n: np.ndarray, z_m: np.ndarray, params: KernelParams) -> float:
    """RBF term plus the additive bias; the real model's full kernel."""
    return rbf_kernel(z_n, z_m, params) + params.bias


def cplx_kernel(v_n: np.ndarray, v_m: np.ndarray, params: KernelParams) -> float:
    """Exponentiated quadratic over the Hermitian squared distance, plus bias.

    The Hermitian distance (v_n - v_m)^H (v_n - v_m) is real and >= 0, so the
    kernel value is real.
    """
    v_n = np.asarray(v_n, dtype=np.complex128)
    v_m = np.asarray(v_m, dtype=np.complex128)
    if v_n.shape != v_m.shape:
        raise ValueError("latent vectors must have equal dimension")
    d2 = float(np.sum(np.abs(v_n - v_m) ** 2))
    return params.signal_var * float(np.exp(-d2 / params.decay)) + params.bias


def sq_distances(points: np.ndarray) -> np.ndarray:
    """Pairwise squared distances between columns (Hermitian for complex)."""
    if np.iscomplexobj(points):
        re, im = points.real, points.imag
        return _sq_dist_real(re) + _sq_dist_real(im)
    return _sq_dist_real(np.asarray(points, dtype=np.float64))


def _sq_dist_real(points: np.ndarray) -> np.ndarray:
    sq = np.sum(points**2, axis=0)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points.T @ points)
    return np.maximum(d2, 0.0)


def kernel_exponential(points: np.ndarray, params: KernelParams) -> np.ndarray:
    """The exponential part of the Gram matrix (no bias, no noise)."""
    d2 = sq_distances(points)
    if np.iscomplexobj(points):
        return params.signal_var * np.exp(-d2 / params.decay)
    return params.signal_var * np.exp(-params.decay * d2)


@dataclass(frozen=True)
class GramMatrix:
    matrix: np.ndarray = field(repr=False)
    with_noise: bool
    chol: np.ndarray | None = field(default=None, repr=False)  # lower triangular
    jitter: float = 0.0


def cholesky_with_jitter(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor, escalating diagonal jitter on failure.

    Jitter starts at 1e-8 times the mean diagonal and grows tenfold, at most
    six attempts; masked spectra can yield near-duplicate latent points.
    """
    base = float(np.mean(np.diag(matrix)))
    jitter = 0.0
    for attempt in range(JITTER_ATTEMPTS + 1):
        try:
            chol = scipy.linalg.cholesky(
                matrix + jitter * np.eye(matrix.shape[0]), lower=True
            )
            return chol, jitter
        except scipy.linalg.LinAlgError:
            jitter = JITTER_START * base * JITTER_GROWTH**attempt if base > 0 else np.nan
            if not np.isfinite(jitter):
                break
    raise FactorizationError(
        "Gram matrix not positive definite after jitter schedule; "
        "hyperparameters are ill-conditioned"
    )


def kernel_matrix(points: np.ndarray, params: KernelParams, add_noise: bool) -> GramMatrix:
    """Pairwise kernel values over latent columns, plus bias.

    With add_noise, 1/noise_precision is added to the diagonal and the matrix
    is Cholesky-factorized (jitter schedule applies).
    """
    points = np.asarray(points)
    if points.ndim != 2 or points.shape[1] < 1:
        raise ValueError("points must be a (dims x count) matrix with count >= 1")
    mat = kernel_exponential(points, params) + params.bias
    if add_noise:
        mat = mat + params.noise_var * np.eye(points.shape[1])
        chol, jitter = cholesky_with_jitter(mat)
        return GramMatrix(matrix=mat, with_noise=True, chol=chol, jitter=jitter)
    return GramMatrix(matrix=mat, with_noise=False)


def cross_kernel(points: np.ndarray, query: np.ndarray, params: KernelParams) -> np.ndarray:
    """Kernel values between each latent column and a single query point."""
    diff = points - np.asarray(query).reshape(-1, 1)
    d2 = np.sum(np.abs(diff) ** 2, axis=0)
    if np.iscomplexobj(points) or np.iscomplexobj(query):
        return params.signal_var * np.exp(-d2 / params.decay) + params.bias
    return params.signal_var * np.exp(-params.decay * d2) + params.bias
