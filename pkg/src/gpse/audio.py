"""WAV ingestion/emission, white-noise generation and SNR-controlled mixing.

All signals are kept as double-precision arrays in [-1, 1] regardless of the
on-disk bit depth; files are 16-bit PCM mono little-endian.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field

import numpy as np

from .errors import AudioFormatError

PCM_SCALE = 32768  # one LSB of 16-bit PCM is 1/PCM_SCALE


@dataclass(frozen=True)
class AudioSignal:
    """A mono audio signal with its sample rate.

    samples are dimensionless amplitudes, nominally in [-1, 1].
    """

    samples: np.ndarray = field(repr=False)
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("signal must be a non-empty 1-D sample array")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be a positive integer")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def read_wav(path) -> AudioSignal:
    """Read a 16-bit PCM mono WAV file into a float64 AudioSignal.

    Integer samples are scaled by 1/32768, so 16384 maps to 0.5.

    Raises:
        FileNotFoundError: missing file.
        AudioFormatError: non-mono input or unsupported encoding.
    """
    with wave.open(str(path), "rb") as wf:
        if wf.getnchannels() != 1:
            raise AudioFormatError(f"non-mono input: {wf.getnchannels()} channels in {path}")
        if wf.getcomptype() != "NONE":
            raise AudioFormatError(f"unsupported encoding: compressed WAV ({wf.getcomptype()})")
        if wf.getsampwidth() != 2:
            raise AudioFormatError(
                f"unsupported encoding: {8 * wf.getsampwidth()}-bit samples (need 16-bit PCM)"
            )
        rate = wf.getframerate()
        raw = wf.readframes(wf.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / PCM_SCALE
    return AudioSignal(samples=samples, sample_rate=rate)


def write_wav(path, signal: AudioSignal) -> int:
    """Write a signal as 16-bit PCM mono WAV.

    Samples outside [-1, 1] are hard-clipped first. Returns the number of
    clipped samples. Round trip through read_wav is exact to within one
    quantization step (2**-15).
    """
    x = signal.samples
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot write non-finite samples")
    clipped = int(np.count_nonzero((x < -1.0) | (x > 1.0)))
    x = np.clip(x, -1.0, 1.0)
    pcm = np.clip(np.round(x * PCM_SCALE), -PCM_SCALE, PCM_SCALE - 1).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(signal.sample_rate)
        wf.writeframes(pcm.tobytes())
    return clipped


def generate_white_noise(
    length: int, seed, variance: float = 1.0, sample_rate: int = 8000
) -> AudioSignal:
    """Deterministic i.i.d. zero-mean Gaussian noise of the given variance.

    The same (length, seed, variance) always yields bit-identical samples.
    `seed` may be anything numpy.random.SeedSequence accepts (int or sequence
    of ints).
    """
    if length <= 0:
        raise ValueError("noise length must be positive")
    if variance <= 0:
        raise ValueError("noise variance must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    samples = rng.normal(0.0, np.sqrt(variance), size=length)
    return AudioSignal(samples=samples, sample_rate=sample_rate)


def mix_at_snr(clean: AudioSignal, noise: AudioSignal, snr_db: float) -> AudioSignal:
    """Add scaled noise to a clean signal at an exact empirical SNR.

    Powers are mean squared sample values over the full clean-signal support;
    noise longer than the clean signal is truncated to its leading segment.
    """
    if clean.sample_rate != noise.sample_rate:
        raise ValueError(
            f"sample-rate mismatch: clean {clean.sample_rate} Hz vs noise {noise.sample_rate} Hz"
        )
    n = len(clean)
    if len(noise) < n:
        raise ValueError("noise must be at least as long as the clean signal")
    noise_seg = noise.samples[:n]
    p_clean = float(np.mean(clean.samples**2))
    if p_clean == 0.0:
        raise ValueError("silent reference: clean signal has zero power")
    p_noise = float(np.mean(noise_seg**2))
    if p_noise == 0.0:
        raise ValueError("silent noise signal")
    alpha = np.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0)))
    return AudioSignal(samples=clean.samples + alpha * noise_seg, sample_rate=clean.sample_rate)
