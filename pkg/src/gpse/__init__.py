"""Speech enhancement by binary masking plus latent-variable reconstruction.

Two-stage pipeline: a training-free statistical binary mask marks unreliable
time-frequency bins, then a latent-variable model trained on clean speech
imputes the masked spectra - either a real-valued GP latent model over
magnitudes (noisy-phase resynthesis) or a complex-valued GP latent model that
re-estimates magnitude and phase jointly. NMF and sparse-coding baselines and
segmental-SNR / log-spectral-distance metrics round out the comparison
harness.
"""

from .audio import AudioSignal, generate_white_noise, mix_at_snr, read_wav, write_wav
from .kernels import KernelParams
from .masking import BinaryMask, MaskedSpectrogram, NoisePsd, PsdConfig
from .stft import Spectrogram, StftConfig, istft, stft

__version__ = "0.1.0"

__all__ = [
    "AudioSignal",
    "BinaryMask",
    "KernelParams",
    "MaskedSpectrogram",
    "NoisePsd",
    "PsdConfig",
    "Spectrogram",
    "StftConfig",
    "generate_white_noise",
    "istft",
    "mix_at_snr",
    "read_wav",
    "stft",
    "write_wav",
    "__version__",
]
