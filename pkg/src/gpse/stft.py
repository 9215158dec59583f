"""Forward/inverse short-time Fourier transform with exact overlap-add resynthesis.

Analysis uses a periodic (DFT-even) window so that 50% overlap gives a constant
window sum (1.08 for Hamming); synthesis divides the overlap-added frames by
the accumulated window envelope, which makes istft(stft(x)) exact to double
precision everywhere, not just on the interior.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .audio import AudioSignal

_WINDOWS = ("hamming", "hann")


@dataclass(frozen=True)
class StftConfig:
    fft_size: int = 512
    hop: int = 256
    window: str = "hamming"

    def __post_init__(self):
        if self.fft_size < 2 or (self.fft_size & (self.fft_size - 1)) != 0:
            raise ValueError("fft_size must be a power of two >= 2")
        if not 0 < self.hop <= self.fft_size:
            raise ValueError("hop must be in (0, fft_size]")
        if self.window not in _WINDOWS:
            raise ValueError(f"window must be one of {_WINDOWS}")

    @property
    def num_bins(self) -> int:
        return self.fft_size // 2 + 1


@dataclass(frozen=True)
class Spectrogram:
    """Complex STFT coefficients, num_bins rows x frames columns."""

    bins: np.ndarray = field(repr=False)
    config: StftConfig
    sample_rate: int
    num_samples: int  # original signal length, used to trim resynthesis

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        object.__setattr__(self, "bins", bins)
        if bins.ndim != 2 or bins.shape[0] != self.config.num_bins:
            raise ValueError(
                f"expected {self.config.num_bins} frequency rows, got shape {bins.shape}"
            )
        if not np.all(np.isfinite(bins)):
            raise ValueError("spectrogram entries must be finite")

    @property
    def num_frames(self) -> int:
        return self.bins.shape[1]

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.bins)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.bins)

    def replace_bins(self, bins: np.ndarray) -> "Spectrogram":
        """Same geometry, new coefficients."""
        return Spectrogram(
            bins=bins,
            config=self.config,
            sample_rate=self.sample_rate,
            num_samples=self.num_samples,
        )


def analysis_window(config: StftConfig) -> np.ndarray:
    """Periodic analysis window of length fft_size.

    Hamming: w[n] = 0.54 - 0.46*cos(2*pi*n/L). The periodic form sums to a
    constant (1.08) across 50%-overlapped partitions, which the resynthesis
    relies on.
    """
    n = np.arange(config.fft_size)
    if config.window == "hamming":
        return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / config.fft_size)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / config.fft_size)


def _frame_count(num_samples: int, config: StftConfig) -> int:
    full = 1 + (num_samples - config.fft_size) // config.hop
    covered = config.fft_size + (full - 1) * config.hop
    return full + (1 if covered < num_samples else 0)


def stft(signal: AudioSignal, config: StftConfig | None = None) -> Spectrogram:
    """Windowed DFT frames; frame t covers samples [t*hop, t*hop + fft_size).

    Only the fft_size/2 + 1 non-negative-frequency bins are retained. A final
    partial frame is zero-padded.
    """
    config = config or StftConfig()
    x = signal.samples
    if x.size < config.fft_size:
        raise ValueError(
            f"signal ({x.size} samples) shorter than one frame ({config.fft_size})"
        )
    frames = _frame_count(x.size, config)
    padded = np.zeros(config.fft_size + (frames - 1) * config.hop)
    padded[: x.size] = x
    window = analysis_window(config)
    idx = np.arange(config.fft_size)[None, :] + config.hop * np.arange(frames)[:, None]
    segments = padded[idx] * window[None, :]
    bins = np.fft.rfft(segments, n=config.fft_size, axis=1).T
    return Spectrogram(
        bins=bins, config=config, sample_rate=signal.sample_rate, num_samples=x.size
    )


def istft(spec: Spectrogram, config: StftConfig | None = None) -> AudioSignal:
    """Overlap-add resynthesis, normalized by the accumulated window envelope.

    The full symmetric spectrum is rebuilt from the retained bins by conjugate
    symmetry; any imaginary part of the DC and Nyquist bins is discarded. The
    output is trimmed to the length recorded in the spectrogram.
    """
    if config is not None and config != spec.config:
        raise ValueError("config mismatch between spectrogram and istft request")
    config = spec.config
    frames = spec.num_frames
    window = analysis_window(config)
    bins = spec.bins.T.copy()
    bins[:, 0] = bins[:, 0].real
    bins[:, -1] = bins[:, -1].real
    segments = np.fft.irfft(bins, n=config.fft_size, axis=1)
    total = config.fft_size + (frames - 1) * config.hop
    acc = np.zeros(total)
    env = np.zeros(total)
    for t in range(frames):
        start = t * config.hop
        acc[start : start + config.fft_size] += segments[t]
        env[start : start + config.fft_size] += window
    out = np.divide(acc, env, out=np.zeros_like(acc), where=env > 1e-12)
    return AudioSignal(samples=out[: spec.num_samples], sample_rate=spec.sample_rate)


def _write_matrix_csv(path, matrix: np.ndarray, header: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        writer = csv.writer(fh)
        for row in matrix:
            writer.writerow([f"{v:.12g}" for v in row])


def dump_spectrogram_csv(spec: Spectrogram, magnitude_path, phase_path) -> None:
    """Plain-text dumps for plotting: rows = bins, columns = frames.

    The header line records fft_size/hop/sample_rate so the dump is
    self-describing.
    """
    header = (
        f"# fft_size={spec.config.fft_size},hop={spec.config.hop},"
        f"sample_rate={spec.sample_rate}"
    )
    _write_matrix_csv(magnitude_path, spec.magnitude, header + ",kind=magnitude")
    _write_matrix_csv(phase_path, spec.phase, header + ",kind=phase_rad")
