"""Real-valued GP latent variable model over magnitude spectra.

Training maximizes the marginal likelihood of the magnitude rows jointly over
latent points and log-hyperparameters. Enhancement infers a latent point per
frame from the reliable bins only (bands are independent GPs, so unreliable
rows simply drop out of the likelihood), reconstructs the full magnitude frame
by GP posterior mean, and reattaches the noisy phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve

from .kernels import KernelParams, cross_kernel, kernel_matrix, sq_distances
from .likelihood import (
    LOG_2PI,
    log_marginal_real,
    pack_params,
    real_training_objective,
    unpack_params,
)
from .masking import BinaryMask
from .optimize import InferConfig, TrainConfig, maximize
from .stft import Spectrogram

MODEL_VERSION = 1


@dataclass
class GplvmModel:
    latents: np.ndarray = field(repr=False)  # latent_dim x num_frames
    params: KernelParams
    train_mags: np.ndarray = field(repr=False)  # num_bands x num_frames, >= 0
    chol: np.ndarray = field(repr=False)  # lower Cholesky of the noisy Gram
    alpha: np.ndarray = field(repr=False)  # (K + noise I)^-1 Y^T, solve cache
    final_objective: float = np.nan
    trace: list = field(default_factory=list, repr=False)
    degraded: bool = False

    @property
    def latent_dim(self) -> int:
        return self.latents.shape[0]

    @property
    def num_bands(self) -> int:
        return self.train_mags.shape[0]

    @property
    def num_frames(self) -> int:
        return self.train_mags.shape[1]


def build_gplvm_model(latents, params: KernelParams, train_mags, **extra) -> GplvmModel:
    """Assemble a model (and its solve caches) from explicit parts."""
    latents = np.asarray(latents, dtype=np.float64)
    train_mags = np.asarray(train_mags, dtype=np.float64)
    if np.any(train_mags < 0):
        raise ValueError("training magnitudes must be non-negative")
    gram = kernel_matrix(latents, params, add_noise=True)
    alpha = cho_solve((gram.chol, True), train_mags.T)
    return GplvmModel(
        latents=latents,
        params=params,
        train_mags=train_mags,
        chol=gram.chol,
        alpha=alpha,
        **extra,
    )


def pca_init_real(data: np.ndarray, latent_dim: int) -> np.ndarray:
    """Top principal-component scores of the frames, unit variance per row."""
    centered = data - data.mean(axis=1, keepdims=True)
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    scores = svals[:latent_dim, None] * vt[:latent_dim, :]
    std = scores.std(axis=1, keepdims=True)
    return np.divide(scores, std, out=scores.copy(), where=std > 1e-12)


def _heuristic_params(data: np.ndarray, latents: np.ndarray, complex_kind: bool) -> KernelParams:
    total_var = float(np.mean(np.abs(data) ** 2))
    if total_var <= 0:
        raise ValueError("degenerate training data: all zeros")
    d2 = sq_distances(latents)
    med = float(np.median(d2[np.triu_indices_from(d2, k=1)])) if latents.shape[1] > 1 else 1.0
    med = med if med > 1e-12 else 1.0
    decay = med if complex_kind else 1.0 / med
    return KernelParams(
        signal_var=0.9 * total_var,
        decay=decay,
        noise_precision=20.0 / total_var,
        bias=0.05 * total_var,
    )


def train_gplvm(magnitudes: np.ndarray, latent_dim: int, cfg: TrainConfig | None = None) -> GplvmModel:
    """Fit latents and hyperparameters by gradient ascent from a PCA start."""
    cfg = cfg or TrainConfig()
    data = np.asarray(magnitudes, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("magnitudes must be a bands x frames matrix")
    num_bands, count = data.shape
    if count < 2:
        raise ValueError("need at least 2 training frames")
    if not 1 <= latent_dim < min(num_bands, count):
        raise ValueError(
            f"latent_dim must satisfy 1 <= K < min(bands, frames) = {min(num_bands, count)}"
        )
    if not np.all(np.isfinite(data)) or np.any(data < 0):
        raise ValueError("magnitudes must be finite and non-negative")
    if not np.any(data > 0):
        raise ValueError("degenerate training data: all zeros")

    init_latents = pca_init_real(data, latent_dim)
    init_params = cfg.init_params or _heuristic_params(data, init_latents, complex_kind=False)
    init = np.concatenate([init_latents.ravel(), pack_params(init_params)])
    result = maximize(real_training_objective(data, latent_dim), init, cfg.optimizer)
    latents = result.solution[: latent_dim * count].reshape(latent_dim, count)
    params = unpack_params(result.solution[latent_dim * count :])
    return build_gplvm_model(
        latents,
        params,
        data,
        final_objective=result.value,
        trace=result.trace,
        degraded=result.degraded,
    )


def _inference_problem(model: GplvmModel, frame: np.ndarray, mask_col: np.ndarray):
    """Closure for the per-frame latent objective restricted to reliable rows."""
    reliable = np.asarray(mask_col).astype(bool)
    if reliable.shape != (model.num_bands,):
        raise ValueError("mask column and model band count disagree")
    if not reliable.any():
        raise ValueError("no reliable evidence: mask column is all zeros")
    observed = np.asarray(frame, dtype=np.float64)[reliable]
    count = observed.size
    alpha_r = model.alpha[:, reliable]  # M x R
    params = model.params
    kappa = params.signal_var + params.bias + params.noise_var
    noise_floor = 1e-3 * params.noise_var

    def objective(z: np.ndarray):
        k = cross_kernel(model.latents, z, params)
        w = cho_solve((model.chol, True), k)
        sigma2 = max(kappa - float(k @ w), noise_floor)
        mean = k @ alpha_r
        resid = observed - mean
        sse = float(resid @ resid)
        value = -0.5 * count * LOG_2PI - 0.5 * count * np.log(sigma2) - sse / (2.0 * sigma2)
        gamma = w * (count / sigma2 - sse / sigma2**2) + (alpha_r @ resid) / sigma2
        weights = gamma * (k - params.bias)  # bias is constant in z
        grad = -2.0 * params.decay * (z * weights.sum() - model.latents @ weights)
        return value, grad

    return objective, reliable, observed


def latent_objective(model: GplvmModel, frame, mask_col, z) -> float:
    """Reliable-rows log-likelihood of a candidate latent (tests, diagnostics)."""
    objective, _, _ = _inference_problem(model, frame, mask_col)
    return objective(np.asarray(z, dtype=np.float64))[0]


def _start_points(distances: np.ndarray, latents: np.ndarray, n_starts: int) -> np.ndarray:
    order = np.argsort(distances, kind="stable")[: max(1, min(n_starts, distances.size))]
    return latents[:, order]


def infer_latent(model: GplvmModel, frame, mask_col, cfg: InferConfig | None = None) -> np.ndarray:
    """Best latent over multi-start ascent; starts are the training latents
    nearest to the frame under the masked-magnitude distance."""
    cfg = cfg or InferConfig()
    objective, reliable, observed = _inference_problem(model, frame, mask_col)
    distances = np.sum((model.train_mags[reliable, :] - observed[:, None]) ** 2, axis=0)
    starts = _start_points(distances, model.latents, cfg.n_starts)
    best = None
    for idx in range(starts.shape[1]):
        result = maximize(objective, starts[:, idx], cfg.optimizer)
        if best is None or result.value > best.value:
            best = result
    return best.solution


def reconstruct_magnitude(model: GplvmModel, z) -> np.ndarray:
    """GP posterior mean per band, floored at zero (magnitudes)."""
    k = cross_kernel(model.latents, np.asarray(z, dtype=np.float64), model.params)
    return np.maximum(k @ model.alpha, 0.0)


def enhance_gplvm(
    model: GplvmModel,
    noisy_spec: Spectrogram,
    mask: BinaryMask,
    cfg: InferConfig | None = None,
) -> tuple[Spectrogram, int]:
    """Per-frame latent inference + magnitude reconstruction + noisy phase.

    Frames with empty mask columns fall back to the masked (zero) observation;
    the count of such frames is returned alongside the spectrogram.
    """
    if mask.mask.shape != noisy_spec.bins.shape:
        raise ValueError("mask and spectrogram shapes disagree")
    if noisy_spec.bins.shape[0] != model.num_bands:
        raise ValueError("model band count and spectrogram disagree")
    magnitudes = np.abs(noisy_spec.bins)
    phase = np.exp(1j * np.angle(noisy_spec.bins))
    out = np.zeros_like(noisy_spec.bins)
    fallback = 0
    for t in range(noisy_spec.num_frames):
        col_mask = mask.mask[:, t]
        if not col_mask.any():
            fallback += 1
            continue  # masked observation is identically zero
        z = infer_latent(model, magnitudes[:, t] * col_mask, col_mask, cfg)
        out[:, t] = reconstruct_magnitude(model, z) * phase[:, t]
    return noisy_spec.replace_bins(out), fallback


def save_gplvm(model: GplvmModel, path, extra_meta: dict | None = None) -> None:
    from . import modelio

    modelio.save_model(
        path,
        kind="gplvm",
        version=MODEL_VERSION,
        params={
            "signal_var": model.params.signal_var,
            "decay": model.params.decay,
            "noise_precision": model.params.noise_precision,
            "bias": model.params.bias,
        },
        dims={
            "latent_dim": model.latent_dim,
            "num_bands": model.num_bands,
            "num_frames": model.num_frames,
            **(extra_meta or {}),
        },
        arrays={"latents": model.latents, "train_mags": model.train_mags},
    )


def load_gplvm(path) -> tuple[GplvmModel, dict]:
    from . import modelio

    record = modelio.load_model(path, expect_kind="gplvm", expect_version=MODEL_VERSION)
    params = KernelParams(**record.params)
    model = build_gplvm_model(record.arrays["latents"], params, record.arrays["train_mags"])
    return model, record.dims
