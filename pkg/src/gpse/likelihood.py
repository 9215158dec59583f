"""Log marginal likelihoods and analytic gradients for both latent models.

Each frequency band is an independent GP over the shared latent points, so the
real-data likelihood is a sum of F zero-mean Gaussian log densities with the
common covariance C = K + I/noise_precision, and the complex-data likelihood is
the analogous sum of proper complex Gaussian log densities:

    real:     sum_f [ -(M/2) ln 2pi - (1/2) ln|C| - (1/2) y_f C^-1 y_f^T ]
    complex:  sum_f [ -M ln pi     -       ln|C| -       u_f C^-1 u_f^H ]

C is real symmetric in both cases (the complex kernel is real-valued), and all
quadratic forms reduce to real numbers. Gradients follow from
d ln|C| = tr(C^-1 dC) and d(C^-1) = -C^-1 dC C^-1; hyperparameters are handled
in the log domain so positivity never needs explicit constraints.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .kernels import KernelParams, cholesky_with_jitter, sq_distances

LOG_2PI = float(np.log(2.0 * np.pi))
LOG_PI = float(np.log(np.pi))

# order of the log-hyperparameter block in packed vectors and gradients
LOG_PARAM_NAMES = ("log_signal_var", "log_decay", "log_bias", "log_noise_precision")


def _covariance(latents: np.ndarray, params: KernelParams):
    """Returns (C, chol, exp_part, sq_dists) for C = kernel + bias + noise."""
    d2 = sq_distances(latents)
    if np.iscomplexobj(latents):
        exp_part = params.signal_var * np.exp(-d2 / params.decay)
    else:
        exp_part = params.signal_var * np.exp(-params.decay * d2)
    cov = exp_part + params.bias + params.noise_var * np.eye(latents.shape[1])
    chol, _ = cholesky_with_jitter(cov)
    return cov, chol, exp_part, d2


def log_marginal_real(data: np.ndarray, latents: np.ndarray, params: KernelParams) -> float:
    """Sum over rows of data of ln N(row | 0, C); data is F x M, latents K x M."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != latents.shape[1]:
        raise ValueError("data and latents disagree on the number of frames")
    _, chol, _, _ = _covariance(latents, params)
    num_bands, count = data.shape
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    half = solve_triangular(chol, data.T, lower=True)
    quad = float(np.sum(half**2))
    return -0.5 * (num_bands * count * LOG_2PI + num_bands * logdet + quad)


def log_marginal_complex(data: np.ndarray, latents: np.ndarray, params: KernelParams) -> float:
    """Sum over rows of ln CN(row | 0, C, 0); data is F x M complex."""
    data = np.asarray(data, dtype=np.complex128)
    if data.ndim != 2 or data.shape[1] != latents.shape[1]:
        raise ValueError("data and latents disagree on the number of frames")
    _, chol, _, _ = _covariance(latents, params)
    num_bands, count = data.shape
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    half = solve_triangular(chol, data.T, lower=True)
    quad = float(np.sum(np.abs(half) ** 2))
    return -(num_bands * count * LOG_PI + num_bands * logdet + quad)


def grad_log_marginal_real(data: np.ndarray, latents: np.ndarray, params: KernelParams):
    """Value plus gradients w.r.t. latents and the four log-hyperparameters.

    Returns (value, grad_latents [K x M], grad_log_params [4]).
    """
    data = np.asarray(data, dtype=np.float64)
    cov, chol, exp_part, d2 = _covariance(latents, params)
    num_bands, count = data.shape
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    alpha = cho_solve((chol, True), data.T)  # C^-1 Y^T, M x F
    quad = float(np.sum(data.T * alpha))
    value = -0.5 * (num_bands * count * LOG_2PI + num_bands * logdet + quad)

    cov_inv = cho_solve((chol, True), np.eye(count))
    sens = 0.5 * (alpha @ alpha.T - num_bands * cov_inv)  # dL = tr(sens dC)

    grad_log = np.array(
        [
            float(np.sum(sens * exp_part)),
            -params.decay * float(np.sum(sens * d2 * exp_part)),
            params.bias * float(np.sum(sens)),
            -params.noise_var * float(np.trace(sens)),
        ]
    )
    weights = sens * exp_part
    col_sums = weights.sum(axis=0)
    grad_latents = -4.0 * params.decay * (latents * col_sums[None, :] - latents @ weights)
    return value, grad_latents, grad_log


def grad_log_marginal_complex(data: np.ndarray, latents: np.ndarray, params: KernelParams):
    """Value plus gradients w.r.t. real/imag latent parts and log-hyperparameters.

    Returns (value, grad_re [K x M], grad_im [K x M], grad_log_params [4]).
    """
    data = np.asarray(data, dtype=np.complex128)
    cov, chol, exp_part, d2 = _covariance(latents, params)
    num_bands, count = data.shape
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    bmat = cho_solve((chol, True), data.conj().T)  # C^-1 U^H, M x F
    quad = float(np.real(np.sum(data.T * bmat)))
    value = -(num_bands * count * LOG_PI + num_bands * logdet + quad)

    cov_inv = cho_solve((chol, True), np.eye(count))
    sens = (bmat.real @ bmat.real.T + bmat.imag @ bmat.imag.T) - num_bands * cov_inv

    grad_log = np.array(
        [
            float(np.sum(sens * exp_part)),
            float(np.sum(sens * d2 * exp_part)) / params.decay,
            params.bias * float(np.sum(sens)),
            -params.noise_var * float(np.trace(sens)),
        ]
    )
    weights = sens * exp_part
    col_sums = weights.sum(axis=0)
    factor = -4.0 / params.decay
    grad_re = factor * (latents.real * col_sums[None, :] - latents.real @ weights)
    grad_im = factor * (latents.imag * col_sums[None, :] - latents.imag @ weights)
    return value, grad_re, grad_im, grad_log


def pack_params(params: KernelParams) -> np.ndarray:
    return np.log(
        [params.signal_var, params.decay, params.bias, params.noise_precision]
    )


def unpack_params(log_params: np.ndarray) -> KernelParams:
    sv, decay, bias, beta = np.exp(log_params)
    return KernelParams(signal_var=sv, decay=decay, noise_precision=beta, bias=bias)


def real_training_objective(data: np.ndarray, latent_dim: int):
    """Closure mapping [latents.ravel, log params] -> (value, gradient)."""
    data = np.asarray(data, dtype=np.float64)
    count = data.shape[1]

    def objective(vec: np.ndarray):
        latents = vec[: latent_dim * count].reshape(latent_dim, count)
        params = unpack_params(vec[latent_dim * count :])
        value, grad_latents, grad_log = grad_log_marginal_real(data, latents, params)
        return value, np.concatenate([grad_latents.ravel(), grad_log])

    return objective


def complex_training_objective(data: np.ndarray, latent_dim: int):
    """Closure mapping [re.ravel, im.ravel, log params] -> (value, gradient)."""
    data = np.asarray(data, dtype=np.complex128)
    count = data.shape[1]
    block = latent_dim * count

    def objective(vec: np.ndarray):
        latents = (
            vec[:block].reshape(latent_dim, count)
            + 1j * vec[block : 2 * block].reshape(latent_dim, count)
        )
        params = unpack_params(vec[2 * block :])
        value, grad_re, grad_im, grad_log = grad_log_marginal_complex(data, latents, params)
        return value, np.concatenate([grad_re.ravel(), grad_im.ravel(), grad_log])

    return objective
