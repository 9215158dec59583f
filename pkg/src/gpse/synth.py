"""Deterministic synthetic speech-like corpus for end-to-end tests.

Utterances are sequences of harmonic "phones" (AM/FM sinusoid stacks shaped by
formant-style spectral envelopes) separated by exact-silence gaps. All
utterances draw from one shared phone library, so train and test material share
spectral patterns while differing in sequencing and timing. Phone periods are
integer sample counts and segment starts are snapped to period boundaries,
which keeps the set of distinct STFT frame patterns per phone small and
learnable at desk scale.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import AudioSignal, write_wav

RAMP_SECONDS = 0.016
PEAK = 0.45


@dataclass(frozen=True)
class SynthConfig:
    n_train: int = 4
    n_test: int = 12
    seed: int = 0
    sample_rate: int = 8000
    n_phones: int = 10
    train_duration: tuple = (3.2, 4.0)
    test_duration: tuple = (2.0, 3.0)


@dataclass(frozen=True)
class Phone:
    period: int  # fundamental period in samples
    harmonic_amps: np.ndarray = field(repr=False)
    harmonic_phases: np.ndarray = field(repr=False)

    @property
    def n_harmonics(self) -> int:
        return self.harmonic_amps.size


def build_phone_set(cfg: SynthConfig) -> list[Phone]:
    """Shared library; periods divide small multiples of the 256-sample hop.

    Each phone has one steep formant (two strong adjacent harmonics) over a
    weak broadband harmonic bed. The formant carries almost all the energy, so
    the reliable-bin detector keeps it even in heavy noise, while the bed
    exercises phase-sensitive reconstruction.
    """
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 999983]))
    periods = [64, 80, 96, 112, 128]
    phones = []
    for i in range(cfg.n_phones):
        period = periods[i % len(periods)]
        f0 = cfg.sample_rate / period
        n_harm = min(36, int(3400.0 / f0))
        # formant position cycles so dominant bins differ across phones
        peak = 1 + (i * 3 + int(rng.integers(0, 2))) % max(1, n_harm - 2)
        amps = rng.uniform(0.05, 0.09, size=n_harm)  # weak bed
        amps[peak - 1] = 1.0
        if peak < n_harm:
            amps[peak] = 0.7
        phases = rng.uniform(0.0, 2.0 * np.pi, size=n_harm)
        phones.append(Phone(period=period, harmonic_amps=amps, harmonic_phases=phases))
    return phones


def _render_segment(
    phone: Phone, n_samples: int, sample_rate: int, rng: np.random.Generator
) -> np.ndarray:
    t = np.arange(n_samples) / sample_rate
    f0 = sample_rate / phone.period
    vib_rate = rng.uniform(3.0, 6.0)
    vib_depth = 5e-5
    am_rate = rng.uniform(2.0, 5.0)
    am_depth = 0.03
    fund_phase = 2.0 * np.pi * f0 * t + (vib_depth * f0 / vib_rate) * np.sin(
        2.0 * np.pi * vib_rate * t + rng.uniform(0, 2 * np.pi)
    )
    x = np.zeros(n_samples)
    for h in range(1, phone.n_harmonics + 1):
        x += phone.harmonic_amps[h - 1] * np.sin(h * fund_phase + phone.harmonic_phases[h - 1])
    x *= 1.0 + am_depth * np.sin(2.0 * np.pi * am_rate * t + rng.uniform(0, 2 * np.pi))
    ramp = int(RAMP_SECONDS * sample_rate)
    if 2 * ramp < n_samples:
        edge = 0.5 * (1.0 - np.cos(np.pi * np.arange(ramp) / ramp))
        x[:ramp] *= edge
        x[-ramp:] *= edge[::-1]
    return x


def synth_utterance(
    phones: list[Phone],
    duration: float,
    sample_rate: int,
    rng: np.random.Generator,
    phone_sequence: list[int] | None = None,
) -> AudioSignal:
    """One utterance: silence-padded phone segments, peak-normalized.

    Segment starts are snapped forward to a multiple of the phone period so
    that every instance of a phone lands on the same STFT-grid phase orbit.
    """
    total = int(duration * sample_rate)
    x = np.zeros(total)
    cursor = int(rng.uniform(0.15, 0.22) * sample_rate)
    seg_idx = 0
    while True:
        seg_len = int(rng.uniform(0.35, 0.55) * sample_rate)
        if cursor + seg_len + int(0.15 * sample_rate) > total:
            break
        if phone_sequence is not None:
            phone = phones[phone_sequence[seg_idx % len(phone_sequence)]]
        else:
            phone = phones[rng.integers(0, len(phones))]
        cursor += (-cursor) % phone.period  # snap to the phone's period grid
        seg = _render_segment(phone, seg_len, sample_rate, rng)
        seg *= 0.12 / max(np.sqrt(np.mean(seg**2)), 1e-9)  # common loudness
        x[cursor : cursor + seg_len] = seg
        cursor += seg_len + int(rng.uniform(0.14, 0.24) * sample_rate)
        seg_idx += 1
    peak = np.abs(x).max()
    if peak > PEAK:
        x *= PEAK / peak
    return AudioSignal(samples=x, sample_rate=sample_rate)


def synth_corpus(out_dir, cfg: SynthConfig | None = None) -> list[dict]:
    """Write the corpus WAVs plus a train/test manifest; returns the manifest.

    Bit-identical for a fixed config. Training utterances cycle through the
    whole phone library so every phone is covered by the training split.
    """
    cfg = cfg or SynthConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    phones = build_phone_set(cfg)
    manifest = []
    order_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 424243]))
    coverage = list(order_rng.permutation(len(phones)))
    specs = [("train", i, cfg.train_duration) for i in range(cfg.n_train)] + [
        ("test", i, cfg.test_duration) for i in range(cfg.n_test)
    ]
    for utt_index, (split, i, dur_range) in enumerate(specs):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, utt_index]))
        duration = rng.uniform(*dur_range)
        if split == "train":
            # rotate the shuffled library per utterance so all phones appear
            offset = (i * 6) % len(coverage)
            sequence = coverage[offset:] + coverage[:offset]
        else:
            sequence = None
        signal = synth_utterance(phones, duration, cfg.sample_rate, rng, sequence)
        name = f"{split}_{i:02d}.wav"
        write_wav(out_dir / name, signal)
        manifest.append(
            {
                "file": name,
                "split": split,
                "index": utt_index,
                "duration_s": f"{signal.duration:.3f}",
            }
        )
    with open(out_dir / "manifest.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["file", "split", "index", "duration_s"])
        writer.writeheader()
        writer.writerows(manifest)
    return manifest


def read_manifest(corpus_dir) -> list[dict]:
    path = Path(corpus_dir) / "manifest.csv"
    if not path.exists():
        raise FileNotFoundError(f"no manifest.csv in {corpus_dir}")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        if row.get("split") not in ("train", "test"):
            raise ValueError(f"manifest split must be train/test, got {row.get('split')!r}")
    return rows
