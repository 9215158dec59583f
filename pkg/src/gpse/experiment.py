"""Batch harness: corpus loading, model training, and the evaluation grid.

The grid runs (utterance x SNR x threshold x latent dim x method) with
per-cell failure isolation, writes per-utterance results and aggregated
report CSVs, and renders summary figures next to the delimited output.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines, cgplvm, gplvm, metrics, plots
from .audio import AudioSignal, generate_white_noise, mix_at_snr, read_wav
from .config import ExperimentConfig
from .masking import apply_mask, compute_mask, estimate_components, estimate_noise_psd
from .optimize import InferConfig, OptimizerConfig, TrainConfig
from .stft import Spectrogram, istft, stft
from .synth import read_manifest

RESULT_FIELDS = (
    "method",
    "snr_db",
    "c",
    "K",
    "utterance",
    "ssnr",
    "lsd",
    "fallback_frames",
    "nmf_monotone",
    "omp_max_nnz",
    "error",
)
REPORT_FIELDS = ("method", "snr_db", "c", "K", "ssnr", "lsd", "n_utt", "ssnr_std", "lsd_std")


@dataclass(frozen=True)
class Utterance:
    name: str
    index: int
    signal: AudioSignal


@dataclass
class TrainedModels:
    gplvm_by_dim: dict = field(default_factory=dict)
    cgplvm_by_dim: dict = field(default_factory=dict)
    nmf_basis: baselines.NmfBasis | None = None
    dictionary: baselines.SparseDictionary | None = None
    train_frame_count: int = 0


@dataclass
class ExperimentOutput:
    results: list
    report: list
    out_dir: Path


def load_corpus(cfg: ExperimentConfig) -> tuple[list[Utterance], list[Utterance]]:
    corpus = Path(cfg.corpus_dir)
    rows = read_manifest(corpus)
    train, test = [], []
    for row in rows:
        utt = Utterance(
            name=row["file"], index=int(row["index"]), signal=read_wav(corpus / row["file"])
        )
        (train if row["split"] == "train" else test).append(utt)
    if not train or not test:
        raise ValueError("corpus must contain both train and test utterances")
    return train, test


def training_frames(
    train_utts: list[Utterance], cfg: ExperimentConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated clean training frames, energy-ranked and capped.

    Silence (zero-energy) frames carry no spectral pattern and are dropped
    before the cap. Returns (complex frames, magnitudes), both bands x frames.
    """
    columns = [stft(utt.signal, cfg.stft).bins for utt in train_utts]
    frames = np.concatenate(columns, axis=1)
    energy = np.sum(np.abs(frames) ** 2, axis=0)
    frames = frames[:, energy > 0]
    energy = energy[energy > 0]
    if frames.shape[1] > cfg.training_frame_cap:
        keep = np.argsort(-energy, kind="stable")[: cfg.training_frame_cap]
        frames = frames[:, np.sort(keep)]
    return frames, np.abs(frames)


def _train_config(cfg: ExperimentConfig) -> TrainConfig:
    return TrainConfig(optimizer=OptimizerConfig(max_iter=cfg.train.max_iters))


def _infer_config(cfg: ExperimentConfig) -> InferConfig:
    return InferConfig(
        n_starts=cfg.train.multi_starts,
        optimizer=OptimizerConfig(max_iter=cfg.train.infer_max_iters),
    )


def train_models(cfg: ExperimentConfig, train_utts: list[Utterance]) -> TrainedModels:
    frames, mags = training_frames(train_utts, cfg)
    models = TrainedModels(train_frame_count=frames.shape[1])
    tcfg = _train_config(cfg)
    if "gplvm" in cfg.methods:
        for dim in cfg.latent_dims:
            models.gplvm_by_dim[int(dim)] = gplvm.train_gplvm(mags, int(dim), tcfg)
    if "cgplvm" in cfg.methods:
        for dim in cfg.latent_dims:
            models.cgplvm_by_dim[int(dim)] = cgplvm.train_cgplvm(frames, int(dim), tcfg)
    if "nmf" in cfg.methods:
        models.nmf_basis = baselines.train_nmf_basis(
            mags, cfg.nmf.basis_size, cfg.nmf.train_iters, seed=cfg.seed
        )
    if "sr" in cfg.methods:
        models.dictionary = baselines.build_dictionary(mags)
    return models


def _is_non_increasing(trace) -> bool:
    return all(b <= a * (1 + 1e-9) + 1e-12 for a, b in zip(trace, trace[1:]))


def enhance_with_method(
    method: str,
    models: TrainedModels,
    latent_dim: int | None,
    noisy_spec: Spectrogram,
    masked,
    cfg: ExperimentConfig,
) -> tuple[Spectrogram, dict]:
    """Dispatch one method; returns the enhanced spectrogram and diagnostics."""
    diag: dict = {}
    if method == "masked":
        return noisy_spec.replace_bins(masked.complex_bins), diag
    if method == "nmf":
        acts, trace = baselines.nmf_activations(
            masked.magnitude_bins, models.nmf_basis, cfg.nmf.activation_iters
        )
        diag["nmf_monotone"] = _is_non_increasing(trace)
        recon = models.nmf_basis.basis @ acts
        return baselines.reconstruct_with_noisy_phase(recon, noisy_spec), diag
    if method == "sr":
        codes = baselines.omp_code(
            masked.magnitude_bins, models.dictionary, cfg.sparse.sparsity, cfg.sparse.max_iters
        )
        diag["omp_max_nnz"] = int(np.max(np.count_nonzero(codes, axis=0), initial=0))
        # sparse codes may go negative; magnitudes are floored at zero
        recon = np.maximum(models.dictionary.atoms @ codes, 0.0)
        return baselines.reconstruct_with_noisy_phase(recon, noisy_spec), diag
    infer_cfg = _infer_config(cfg)
    if method == "gplvm":
        spec, fallback = gplvm.enhance_gplvm(
            models.gplvm_by_dim[latent_dim], noisy_spec, masked.mask, infer_cfg
        )
        diag["fallback_frames"] = fallback
        return spec, diag
    if method == "cgplvm":
        spec, fallback = cgplvm.enhance_cgplvm(models.cgplvm_by_dim[latent_dim], masked, infer_cfg)
        diag["fallback_frames"] = fallback
        return spec, diag
    raise ValueError(f"unknown method {method!r}")


def _utterance_task(utt: Utterance, snr_db: float, cfg: ExperimentConfig, models: TrainedModels):
    """All grid cells for one (utterance, SNR): mask once per threshold,
    reuse non-latent results across latent dims."""
    rows = []
    clean = utt.signal
    noise = generate_white_noise(
        len(clean), seed=[cfg.seed, utt.index], sample_rate=clean.sample_rate
    )
    noisy = mix_at_snr(clean, noise, snr_db)
    spec = stft(noisy, cfg.stft)
    psd = estimate_noise_psd(spec, cfg.psd)
    s_hat, n_hat = estimate_components(spec, psd)
    for c in cfg.thresholds:
        mask = compute_mask(s_hat, n_hat, c)
        masked = apply_mask(spec, mask)
        shared_cache: dict = {}
        for method in cfg.methods:
            needs_dim = method in ("gplvm", "cgplvm")
            for dim in cfg.latent_dims:
                dim = int(dim)
                row = {
                    "method": method,
                    "snr_db": snr_db,
                    "c": c,
                    "K": dim,
                    "utterance": utt.name,
                    "error": "",
                }
                try:
                    if not needs_dim and method in shared_cache:
                        scored, diag = shared_cache[method]
                    else:
                        enhanced_spec, diag = enhance_with_method(
                            method, models, dim, spec, masked, cfg
                        )
                        enhanced = istft(enhanced_spec)
                        scored = (
                            metrics.ssnr(clean, enhanced, cfg.stft.fft_size, cfg.stft.hop),
                            metrics.log_spectral_distance(clean, enhanced, cfg.stft),
                        )
                        if not needs_dim:
                            shared_cache[method] = (scored, diag)
                    row["ssnr"], row["lsd"] = scored
                    row.update(diag)
                except Exception as exc:  # per-cell isolation: record and move on
                    row["error"] = f"{type(exc).__name__}: {exc}"
                rows.append(row)
    return rows


def aggregate(results: list) -> list:
    """Mean/std per (method, snr, c, K) over successful utterances."""
    cells: dict = {}
    for row in results:
        if row.get("error"):
            continue
        key = (row["method"], row["snr_db"], row["c"], row["K"])
        cells.setdefault(key, []).append((row["ssnr"], row["lsd"]))
    report = []
    for key in sorted(cells, key=lambda k: (str(k[0]), k[1], k[2], k[3])):
        vals = np.array(cells[key])
        report.append(
            {
                "method": key[0],
                "snr_db": key[1],
                "c": key[2],
                "K": key[3],
                "ssnr": float(vals[:, 0].mean()),
                "lsd": float(vals[:, 1].mean()),
                "n_utt": len(cells[key]),
                "ssnr_std": float(vals[:, 0].std(ddof=0)),
                "lsd_std": float(vals[:, 1].std(ddof=0)),
            }
        )
    return report


def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.6f}"
    return "" if value is None else str(value)


def write_rows_csv(path, rows: list, fields) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_fmt(row.get(f)) for f in fields])


def run_experiment(cfg: ExperimentConfig, out_dir, models: TrainedModels | None = None) -> ExperimentOutput:
    """Full grid: train (unless given), enhance, score, aggregate, render."""
    from .config import save_config

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_utts, test_utts = load_corpus(cfg)
    if models is None:
        models = train_models(cfg, train_utts)
    tasks = [(utt, float(snr)) for utt in test_utts for snr in cfg.snr_levels_db]
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(lambda a: _utterance_task(a[0], a[1], cfg, models), tasks))
    else:
        chunks = [_utterance_task(utt, snr, cfg, models) for utt, snr in tasks]
    results = [row for chunk in chunks for row in chunk]
    results.sort(key=lambda r: (r["utterance"], r["snr_db"], r["c"], str(r["method"]), r["K"]))
    report = aggregate(results)

    save_config(cfg, out_dir / "config.json")
    write_rows_csv(out_dir / "results.csv", results, RESULT_FIELDS)
    write_rows_csv(out_dir / "report.csv", report, REPORT_FIELDS)
    sweep = [r for r in report if r["method"] in ("gplvm", "cgplvm")]
    write_rows_csv(out_dir / "k_sweep.csv", sweep, ("snr_db", "method", "K", "ssnr"))

    fig_dir = out_dir / "figures"
    fig_dir.mkdir(exist_ok=True)
    plots.plot_ssnr_vs_snr(report, fig_dir / "ssnr_vs_snr.png")
    plots.plot_ssnr_vs_threshold(report, fig_dir / "ssnr_vs_threshold.png")
    if len(set(cfg.latent_dims)) > 1:
        plots.plot_latent_dim_sweep(report, fig_dir / "k_sweep.png")
    return ExperimentOutput(results=results, report=report, out_dir=out_dir)
