"""Objective quality measures: segmental SNR and log-spectral distance."""

from __future__ import annotations

import numpy as np

from .audio import AudioSignal
from .stft import StftConfig, stft

SSNR_FLOOR = -10.0
SSNR_CEIL = 35.0


def _frame_starts(length: int, frame_len: int, hop: int) -> range:
    if length < frame_len:
        return range(0, 1)
    return range(0, length - frame_len + 1, hop)


def ssnr(
    clean: AudioSignal,
    enhanced: AudioSignal,
    frame_len: int = 512,
    hop: int = 256,
) -> float:
    """Frame-averaged SNR, clamped per frame to [-10, 35] dB.

    Signals are trimmed to the shorter length. Frames with zero clean energy
    (silence) are excluded from the average; a frame with zero error clamps at
    the ceiling.
    """
    if clean.sample_rate != enhanced.sample_rate:
        raise ValueError("sample-rate mismatch")
    n = min(len(clean), len(enhanced))
    ref = clean.samples[:n]
    est = enhanced.samples[:n]
    values = []
    for start in _frame_starts(n, frame_len, hop):
        s = ref[start : start + frame_len]
        e = est[start : start + frame_len]
        energy = float(s @ s)
        if energy == 0.0:
            continue
        err = float((s - e) @ (s - e))
        if err == 0.0:
            values.append(SSNR_CEIL)
            continue
        values.append(min(max(10.0 * np.log10(energy / err), SSNR_FLOOR), SSNR_CEIL))
    if not values:
        raise ValueError("no frames with nonzero clean energy")
    return float(np.mean(values))


def log_spectral_distance(
    clean: AudioSignal,
    enhanced: AudioSignal,
    stft_cfg: StftConfig | None = None,
    eps: float = 1e-10,
) -> float:
    """Mean over frames of the RMS log-magnitude difference in dB."""
    if clean.sample_rate != enhanced.sample_rate:
        raise ValueError("sample-rate mismatch")
    cfg = stft_cfg or StftConfig()
    n = min(len(clean), len(enhanced))
    ref = AudioSignal(samples=clean.samples[:n], sample_rate=clean.sample_rate)
    est = AudioSignal(samples=enhanced.samples[:n], sample_rate=enhanced.sample_rate)
    ref_db = 20.0 * np.log10(stft(ref, cfg).magnitude + eps)
    est_db = 20.0 * np.log10(stft(est, cfg).magnitude + eps)
    per_frame = np.sqrt(np.mean((ref_db - est_db) ** 2, axis=0))
    return float(np.mean(per_frame))
