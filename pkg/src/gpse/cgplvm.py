"""Complex-valued GP latent variable model over complex STFT coefficients.

Each frequency band's coefficient trajectory is a proper complex GP over
shared complex latent points; the kernel is real-valued, so predictions are
real-weighted combinations of the training spectra and both magnitude and
phase are estimated jointly. No noisy-phase substitution happens anywhere in
this path.

The predictive orientation is fixed by interpolation consistency: predicting
at training latent m with negligible noise returns training column m.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve

from .kernels import KernelParams, cross_kernel, kernel_matrix, sq_distances
from .likelihood import (
    LOG_PI,
    complex_training_objective,
    log_marginal_complex,
    pack_params,
    unpack_params,
)
from .masking import MaskedSpectrogram
from .optimize import InferConfig, TrainConfig, maximize
from .stft import Spectrogram

MODEL_VERSION = 1


@dataclass
class CgplvmModel:
    latents: np.ndarray = field(repr=False)  # latent_dim x num_frames, complex
    params: KernelParams
    train_spectra: np.ndarray = field(repr=False)  # num_bands x num_frames, complex
    chol: np.ndarray = field(repr=False)
    solve_cache: np.ndarray = field(repr=False)  # (K_c + noise I)^-1 U^T, M x F complex
    final_objective: float = np.nan
    trace: list = field(default_factory=list, repr=False)
    degraded: bool = False

    @property
    def latent_dim(self) -> int:
        return self.latents.shape[0]

    @property
    def num_bands(self) -> int:
        return self.train_spectra.shape[0]

    @property
    def num_frames(self) -> int:
        return self.train_spectra.shape[1]


def build_cgplvm_model(latents, params: KernelParams, train_spectra, **extra) -> CgplvmModel:
    """Assemble a model (and its solve cache) from explicit parts."""
    latents = np.asarray(latents, dtype=np.complex128)
    train_spectra = np.asarray(train_spectra, dtype=np.complex128)
    if not np.all(np.isfinite(train_spectra)):
        raise ValueError("training spectra must be finite")
    gram = kernel_matrix(latents, params, add_noise=True)
    solve_cache = cho_solve((gram.chol, True), train_spectra.T)
    return CgplvmModel(
        latents=latents,
        params=params,
        train_spectra=train_spectra,
        chol=gram.chol,
        solve_cache=solve_cache,
        **extra,
    )


def pca_init_complex(data: np.ndarray, latent_dim: int) -> np.ndarray:
    """Leading complex principal-component scores, unit mean squared modulus."""
    centered = data - data.mean(axis=1, keepdims=True)
    _, svals, vh = np.linalg.svd(centered, full_matrices=False)
    scores = svals[:latent_dim, None] * vh[:latent_dim, :]
    rms = np.sqrt(np.mean(np.abs(scores) ** 2, axis=1, keepdims=True))
    return np.divide(scores, rms, out=scores.copy(), where=rms > 1e-12)


def _heuristic_params(data: np.ndarray, latents: np.ndarray) -> KernelParams:
    total_var = float(np.mean(np.abs(data) ** 2))
    if total_var <= 0:
        raise ValueError("degenerate training data: all zeros")
    d2 = sq_distances(latents)
    med = float(np.median(d2[np.triu_indices_from(d2, k=1)])) if latents.shape[1] > 1 else 1.0
    med = med if med > 1e-12 else 1.0
    return KernelParams(
        signal_var=0.9 * total_var,
        decay=med,
        noise_precision=20.0 / total_var,
        bias=0.05 * total_var,
    )


def train_cgplvm(spectra: np.ndarray, latent_dim: int, cfg: TrainConfig | None = None) -> CgplvmModel:
    """Fit complex latents and hyperparameters from a complex-PCA start."""
    cfg = cfg or TrainConfig()
    data = np.asarray(spectra, dtype=np.complex128)
    if data.ndim != 2:
        raise ValueError("spectra must be a bands x frames matrix")
    num_bands, count = data.shape
    if count < 2:
        raise ValueError("need at least 2 training frames")
    if not 1 <= latent_dim < min(num_bands, count):
        raise ValueError(
            f"latent_dim must satisfy 1 <= K < min(bands, frames) = {min(num_bands, count)}"
        )
    if not np.all(np.isfinite(data)):
        raise ValueError("spectra must be finite")
    if not np.any(np.abs(data) > 0):
        raise ValueError("degenerate training data: all zeros")

    init_latents = pca_init_complex(data, latent_dim)
    init_params = cfg.init_params or _heuristic_params(data, init_latents)
    block = latent_dim * count
    init = np.concatenate(
        [init_latents.real.ravel(), init_latents.imag.ravel(), pack_params(init_params)]
    )
    result = maximize(complex_training_objective(data, latent_dim), init, cfg.optimizer)
    latents = (
        result.solution[:block].reshape(latent_dim, count)
        + 1j * result.solution[block : 2 * block].reshape(latent_dim, count)
    )
    params = unpack_params(result.solution[2 * block :])
    return build_cgplvm_model(
        latents,
        params,
        data,
        final_objective=result.value,
        trace=result.trace,
        degraded=result.degraded,
    )


def _inference_problem(model: CgplvmModel, frame: np.ndarray, mask_col: np.ndarray):
    """Joint-likelihood objective over the 2K real latent coordinates."""
    reliable = np.asarray(mask_col).astype(bool)
    if reliable.shape != (model.num_bands,):
        raise ValueError("mask column and model band count disagree")
    if not reliable.any():
        raise ValueError("no reliable evidence: mask column is all zeros")
    observed = np.asarray(frame, dtype=np.complex128)[reliable]
    count = observed.size
    cache_r = model.solve_cache[:, reliable]  # M x R complex
    params = model.params
    latent_dim = model.latent_dim
    re_train, im_train = model.latents.real, model.latents.imag
    kappa = params.signal_var + params.bias + params.noise_var
    noise_floor = 1e-3 * params.noise_var

    def objective(vec: np.ndarray):
        v = vec[:latent_dim] + 1j * vec[latent_dim:]
        k = cross_kernel(model.latents, v, params)
        w = cho_solve((model.chol, True), k)
        sigma2 = max(kappa - float(k @ w), noise_floor)
        mean = k @ cache_r
        resid = observed - mean
        sse = float(np.sum(np.abs(resid) ** 2))
        value = -count * LOG_PI - count * np.log(sigma2) - sse / sigma2
        gamma = 2.0 * w * (count / sigma2 - sse / sigma2**2) + (
            2.0 / sigma2
        ) * np.real(cache_r @ resid.conj())
        weights = gamma * (k - params.bias)
        factor = -2.0 / params.decay
        grad_re = factor * (vec[:latent_dim] * weights.sum() - re_train @ weights)
        grad_im = factor * (vec[latent_dim:] * weights.sum() - im_train @ weights)
        return value, np.concatenate([grad_re, grad_im])

    return objective, reliable, observed


def latent_objective(model: CgplvmModel, frame, mask_col, v) -> float:
    """Reliable-rows joint log-likelihood of a candidate complex latent."""
    objective, _, _ = _inference_problem(model, frame, mask_col)
    v = np.asarray(v, dtype=np.complex128)
    return objective(np.concatenate([v.real, v.imag]))[0]


def infer_latent(model: CgplvmModel, frame, mask_col, cfg: InferConfig | None = None) -> np.ndarray:
    """Best complex latent over multi-start ascent; starts are the training
    latents nearest under the masked-spectrum distance."""
    cfg = cfg or InferConfig()
    objective, reliable, observed = _inference_problem(model, frame, mask_col)
    distances = np.sum(
        np.abs(model.train_spectra[reliable, :] - observed[:, None]) ** 2, axis=0
    )
    order = np.argsort(distances, kind="stable")[: max(1, min(cfg.n_starts, distances.size))]
    best = None
    for idx in order:
        start = np.concatenate([model.latents.real[:, idx], model.latents.imag[:, idx]])
        result = maximize(objective, start, cfg.optimizer)
        if best is None or result.value > best.value:
            best = result
    dim = model.latent_dim
    return best.solution[:dim] + 1j * best.solution[dim:]


def predict_frame(model: CgplvmModel, v) -> np.ndarray:
    """Posterior-mean complex frame at a latent point.

    Weights are real (the kernel is real-valued), so the prediction is a real
    combination of training spectra; predicting at a training latent with
    negligible noise returns that training column.
    """
    k = cross_kernel(model.latents, np.asarray(v, dtype=np.complex128), model.params)
    return k @ model.solve_cache


def enhance_cgplvm(
    model: CgplvmModel, masked: MaskedSpectrogram, cfg: InferConfig | None = None
) -> tuple[Spectrogram, int]:
    """Frame-by-frame latent inference and complex prediction.

    Frames with empty mask columns fall back to the masked (zero) observation;
    the count of such frames is returned alongside the spectrogram.
    """
    bins = masked.complex_bins
    if bins.shape[0] != model.num_bands:
        raise ValueError("model band count and masked spectrogram disagree")
    out = np.array(bins, dtype=np.complex128, copy=True)
    fallback = 0
    for t in range(bins.shape[1]):
        col_mask = masked.mask.mask[:, t]
        if not col_mask.any():
            fallback += 1
            continue  # keep the masked observation (zeros)
        v = infer_latent(model, bins[:, t], col_mask, cfg)
        out[:, t] = predict_frame(model, v)
    return masked.source.replace_bins(out), fallback


def save_cgplvm(model: CgplvmModel, path, extra_meta: dict | None = None) -> None:
    from . import modelio

    modelio.save_model(
        path,
        kind="cgplvm",
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
        arrays={"latents": model.latents, "train_spectra": model.train_spectra},
    )


def load_cgplvm(path) -> tuple[CgplvmModel, dict]:
    from . import modelio

    record = modelio.load_model(path, expect_kind="cgplvm", expect_version=MODEL_VERSION)
    params = KernelParams(**record.params)
    model = build_cgplvm_model(
        record.arrays["latents"], params, record.arrays["train_spectra"]
    )
    return model, record.dims
