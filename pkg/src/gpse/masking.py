"""Training-free binary masking of noisy spectra.

A minimum-statistics noise PSD estimate drives a per-bin reliability decision:
bins whose estimated speech fraction clears a threshold are kept, the rest are
zeroed and treated as missing observations for the reconstruction stage.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .stft import Spectrogram


@dataclass(frozen=True)
class PsdConfig:
    smoothing: float = 0.85  # recursive periodogram smoothing factor
    window_seconds: float = 0.75  # minimum-search window length
    bias: float = 1.5  # compensation for the minimum's downward bias

    def __post_init__(self):
        if not 0.0 <= self.smoothing < 1.0:
            raise ValueError("smoothing must be in [0, 1)")
        if self.window_seconds <= 0 or self.bias <= 0:
            raise ValueError("window_seconds and bias must be positive")

    def window_frames(self, sample_rate: int, hop: int) -> int:
        return max(1, round(self.window_seconds * sample_rate / hop))


@dataclass(frozen=True)
class NoisePsd:
    """Per-bin, per-frame noise power estimate (linear scale, >= 0)."""

    psd: np.ndarray = field(repr=False)

    def __post_init__(self):
        psd = np.asarray(self.psd, dtype=np.float64)
        object.__setattr__(self, "psd", psd)
        if not np.all(np.isfinite(psd)) or np.any(psd < 0):
            raise ValueError("noise PSD entries must be finite and >= 0")


@dataclass(frozen=True)
class BinaryMask:
    mask: np.ndarray = field(repr=False)
    threshold: float

    def __post_init__(self):
        mask = np.asarray(self.mask)
        if not np.all((mask == 0) | (mask == 1)):
            raise ValueError("mask entries must be exactly 0 or 1")
        object.__setattr__(self, "mask", mask.astype(np.uint8))
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")

    @property
    def reliable_count(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class MaskedSpectrogram:
    """Masked complex spectra and the matching masked magnitudes.

    `source` keeps the unmasked spectrogram (geometry and noisy phase) for the
    reconstruction stage.
    """

    complex_bins: np.ndarray = field(repr=False)
    magnitude_bins: np.ndarray = field(repr=False)
    mask: BinaryMask
    source: Spectrogram


def estimate_noise_psd(spec: Spectrogram, cfg: PsdConfig | None = None) -> NoisePsd:
    """Minimum statistics over a recursively smoothed periodogram.

    Per bin: P(f,t) = eta*P(f,t-1) + (1-eta)*|X(f,t)|^2 with P(f,0) = |X(f,0)|^2,
    then the noise power at frame t is the minimum of P over the trailing
    window times the bias compensation factor.
    """
    cfg = cfg or PsdConfig()
    power = np.abs(spec.bins) ** 2
    num_bins, frames = power.shape
    window = cfg.window_frames(spec.sample_rate, spec.config.hop)
    if frames < window:
        raise ValueError(
            f"too few frames for noise tracking: {frames} < search window {window}"
        )
    smoothed = np.empty_like(power)
    smoothed[:, 0] = power[:, 0]
    for t in range(1, frames):
        smoothed[:, t] = cfg.smoothing * smoothed[:, t - 1] + (1.0 - cfg.smoothing) * power[:, t]
    padded = np.concatenate(
        [np.full((num_bins, window - 1), np.inf), smoothed], axis=1
    )
    rolled = np.lib.stride_tricks.sliding_window_view(padded, window, axis=1)
    floor = rolled.min(axis=-1)
    floor = np.where(np.isfinite(floor), floor, 0.0)
    return NoisePsd(psd=cfg.bias * floor)


def estimate_components(spec: Spectrogram, psd: NoisePsd) -> tuple[np.ndarray, np.ndarray]:
    """Speech/noise magnitude estimates by power spectral subtraction.

    n_hat = sqrt(psd); s_hat = sqrt(max(|X|^2 - psd, 0)).
    """
    power = np.abs(spec.bins) ** 2
    if power.shape != psd.psd.shape:
        raise ValueError("spectrogram and PSD shapes disagree")
    n_hat = np.sqrt(psd.psd)
    s_hat = np.sqrt(np.maximum(power - psd.psd, 0.0))
    return s_hat, n_hat


def compute_mask(s_hat: np.ndarray, n_hat: np.ndarray, threshold: float) -> BinaryMask:
    """Keep bins where s_hat / (s_hat + n_hat) >= threshold.

    A 0/0 ratio counts as 0 (unreliable): a bin with no evidence of speech is
    left to the model.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    if s_hat.shape != n_hat.shape:
        raise ValueError("component shapes disagree")
    denom = s_hat + n_hat
    ratio = np.divide(s_hat, denom, out=np.zeros_like(s_hat), where=denom > 0)
    return BinaryMask(mask=(ratio >= threshold).astype(np.uint8), threshold=threshold)


def apply_mask(spec: Spectrogram, mask: BinaryMask) -> MaskedSpectrogram:
    """Elementwise product of the mask with the complex and magnitude views."""
    if mask.mask.shape != spec.bins.shape:
        raise ValueError("mask and spectrogram shapes disagree")
    m = mask.mask.astype(np.float64)
    return MaskedSpectrogram(
        complex_bins=spec.bins * m,
        magnitude_bins=np.abs(spec.bins) * m,
        mask=mask,
        source=spec,
    )


def dump_mask_csv(mask: BinaryMask, path, spec: Spectrogram) -> None:
    """0/1 dump in the same layout as the spectrogram dumps."""
    header = (
        f"# fft_size={spec.config.fft_size},hop={spec.config.hop},"
        f"sample_rate={spec.sample_rate},kind=mask,threshold={mask.threshold}"
    )
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        writer = csv.writer(fh)
        for row in mask.mask:
            writer.writerow([int(v) for v in row])
