"""Command-line interface.

Subcommands: synth, train, enhance, evaluate, experiment. Exit code 0 on
success; on failure the last stderr line is machine-readable:
`error category=<category> message=<text>`.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import baselines, cgplvm, experiment, gplvm, modelio, plots
from .audio import read_wav, write_wav
from .config import ExperimentConfig, load_config
from .errors import AudioFormatError, ConfigError, FactorizationError
from .masking import apply_mask, compute_mask, dump_mask_csv, estimate_components, estimate_noise_psd
from .metrics import log_spectral_distance, ssnr
from .optimize import write_trace_csv
from .stft import dump_spectrogram_csv, istft, stft
from .synth import SynthConfig, synth_corpus

ERROR_CATEGORIES = (
    (ConfigError, "config", 4),
    (FactorizationError, "numerics", 6),
    (AudioFormatError, "io", 3),
    (FileNotFoundError, "io", 3),
    (OSError, "io", 3),
    (ValueError, "data", 5),
)


def cmd_synth(out_dir, seed: int = 0, n_train: int = 4, n_test: int = 12) -> list:
    cfg = SynthConfig(seed=seed, n_train=n_train, n_test=n_test)
    manifest = synth_corpus(out_dir, cfg)
    print(f"wrote {len(manifest)} utterances to {out_dir}")
    return manifest


def _model_meta(cfg: ExperimentConfig, sample_rate: int, extra: dict | None = None) -> dict:
    meta = {
        "sample_rate": sample_rate,
        "fft_size": cfg.stft.fft_size,
        "hop": cfg.stft.hop,
    }
    meta.update(extra or {})
    return meta


def cmd_train(cfg: ExperimentConfig, method: str, output, latent_dim: int | None = None,
              trace_path=None) -> float:
    """Train one model on the corpus train split; returns the printed objective."""
    train_utts, _ = experiment.load_corpus(cfg)
    frames, mags = experiment.training_frames(train_utts, cfg)
    rate = train_utts[0].signal.sample_rate
    tcfg = experiment._train_config(cfg)
    if method in ("gplvm", "cgplvm"):
        dim = int(latent_dim if latent_dim is not None else cfg.latent_dims[0])
        if method == "gplvm":
            model = gplvm.train_gplvm(mags, dim, tcfg)
            gplvm.save_gplvm(model, output, _model_meta(cfg, rate))
        else:
            model = cgplvm.train_cgplvm(frames, dim, tcfg)
            cgplvm.save_cgplvm(model, output, _model_meta(cfg, rate))
        if trace_path:
            write_trace_csv(model.trace, trace_path)
        print(f"trained {method} K={dim} on {frames.shape[1]} frames; "
              f"final objective {model.final_objective:.6f}")
        return model.final_objective
    if method == "nmf":
        basis = baselines.train_nmf_basis(mags, cfg.nmf.basis_size, cfg.nmf.train_iters, cfg.seed)
        baselines.save_nmf(basis, output, _model_meta(cfg, rate))
        final = basis.objective_trace[-1]
        print(f"trained nmf basis R={cfg.nmf.basis_size}; final reconstruction error {final:.6f}")
        return final
    if method == "sr":
        dictionary = baselines.build_dictionary(mags)
        baselines.save_dictionary(dictionary, output, _model_meta(cfg, rate))
        print(f"built dictionary with {dictionary.atoms.shape[1]} atoms "
              f"({dictionary.dropped_frames} zero frames dropped)")
        return float(dictionary.atoms.shape[1])
    raise ConfigError(f"unknown method {method!r}")


def _load_any_model(path) -> tuple[str, experiment.TrainedModels, int | None, dict]:
    record = modelio.load_model(path)
    models = experiment.TrainedModels()
    if record.kind == "gplvm":
        model, dims = gplvm.load_gplvm(path)
        models.gplvm_by_dim[model.latent_dim] = model
        return "gplvm", models, model.latent_dim, dims
    if record.kind == "cgplvm":
        model, dims = cgplvm.load_cgplvm(path)
        models.cgplvm_by_dim[model.latent_dim] = model
        return "cgplvm", models, model.latent_dim, dims
    if record.kind == "nmf":
        basis, dims = baselines.load_nmf(path)
        models.nmf_basis = basis
        return "nmf", models, None, dims
    if record.kind == "dict":
        dictionary, dims = baselines.load_dictionary(path)
        models.dictionary = dictionary
        return "sr", models, None, dims
    raise ValueError(f"unknown model kind {record.kind!r}")


def cmd_enhance(cfg: ExperimentConfig, model_path, input_wav, output_wav,
                method: str | None = None, threshold: float = 0.95,
                dump_dir=None) -> dict:
    """Mask + reconstruct + resynthesize one utterance."""
    signal = read_wav(input_wav)
    if model_path is not None:
        method, models, latent_dim, dims = _load_any_model(model_path)
        if dims.get("sample_rate") not in (None, signal.sample_rate):
            raise ValueError(
                f"sample-rate mismatch: model {dims['sample_rate']} Hz, "
                f"input {signal.sample_rate} Hz"
            )
        expected_bins = dims.get("num_bands")
        if expected_bins is not None and expected_bins != cfg.stft.num_bins:
            raise ValueError(
                f"bin-count mismatch: model has {expected_bins} bands, "
                f"config gives {cfg.stft.num_bins}"
            )
    elif method == "masked":
        models, latent_dim = experiment.TrainedModels(), None
    else:
        raise ConfigError("provide a model file, or --method masked for stage 1 only")

    spec = stft(signal, cfg.stft)
    if not np.any(np.abs(spec.bins) > 0):
        print("warning: all-zero input signal", file=sys.stderr)
    psd = estimate_noise_psd(spec, cfg.psd)
    s_hat, n_hat = estimate_components(spec, psd)
    mask = compute_mask(s_hat, n_hat, threshold)
    masked = apply_mask(spec, mask)
    enhanced_spec, diag = experiment.enhance_with_method(
        method, models, latent_dim, spec, masked, cfg
    )
    enhanced = istft(enhanced_spec)
    clipped = write_wav(output_wav, enhanced)
    if clipped:
        print(f"warning: {clipped} samples clipped on write", file=sys.stderr)
    if diag.get("fallback_frames"):
        print(f"note: {diag['fallback_frames']} empty-mask frames fell back to zeros",
              file=sys.stderr)
    if dump_dir is not None:
        dump_dir = Path(dump_dir)
        dump_dir.mkdir(parents=True, exist_ok=True)
        dump_spectrogram_csv(
            enhanced_spec, dump_dir / "enhanced_magnitude.csv", dump_dir / "enhanced_phase.csv"
        )
        dump_spectrogram_csv(spec, dump_dir / "noisy_magnitude.csv", dump_dir / "noisy_phase.csv")
        dump_mask_csv(mask, dump_dir / "mask.csv", spec)
        plots.plot_spectrogram(
            enhanced_spec.magnitude, dump_dir / "enhanced_spectrogram.png",
            spec.sample_rate, cfg.stft.hop, title=f"{method} reconstruction",
        )
        plots.plot_spectrogram(
            spec.magnitude, dump_dir / "noisy_spectrogram.png",
            spec.sample_rate, cfg.stft.hop, title="noisy input",
        )
        plots.plot_mask(mask.mask, dump_dir / "mask.png", spec.sample_rate, cfg.stft.hop)
    print(f"enhanced {input_wav} -> {output_wav} (method={method}, c={threshold})")
    return {"method": method, "clipped": clipped, **diag}


def cmd_evaluate(cfg: ExperimentConfig, clean_wav, enhanced_wav, output_csv=None) -> dict:
    clean = read_wav(clean_wav)
    enhanced = read_wav(enhanced_wav)
    scores = {
        "ssnr": ssnr(clean, enhanced, cfg.stft.fft_size, cfg.stft.hop),
        "lsd": log_spectral_distance(clean, enhanced, cfg.stft),
    }
    print(f"ssnr_db={scores['ssnr']:.4f} lsd_db={scores['lsd']:.4f}")
    if output_csv:
        with open(output_csv, "w") as fh:
            fh.write("ssnr,lsd\n")
            fh.write(f"{scores['ssnr']:.6f},{scores['lsd']:.6f}\n")
    return scores


def cmd_experiment(cfg: ExperimentConfig, out_dir) -> experiment.ExperimentOutput:
    output = experiment.run_experiment(cfg, out_dir)
    failures = sum(1 for r in output.results if r["error"])
    print(
        f"experiment complete: {len(output.results)} cells "
        f"({failures} failures), report at {Path(out_dir) / 'report.csv'}"
    )
    return output


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate the synthetic corpus")
    p_synth.add_argument("--out-dir", required=True)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--n-train", type=int, default=4)
    p_synth.add_argument("--n-test", type=int, default=12)

    p_train = sub.add_parser("train", help="train a model on the corpus train split")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--method", required=True,
                         choices=["gplvm", "cgplvm", "nmf", "sr"])
    p_train.add_argument("--output", required=True)
    p_train.add_argument("--latent-dim", type=int, default=None)
    p_train.add_argument("--trace", default=None, help="optimizer trace CSV path")

    p_enh = sub.add_parser("enhance", help="enhance one noisy WAV")
    p_enh.add_argument("--config", required=True)
    p_enh.add_argument("--model", default=None)
    p_enh.add_argument("--method", default=None, choices=["masked"],
                       help="only 'masked' runs without a model file")
    p_enh.add_argument("--input", required=True)
    p_enh.add_argument("--output", required=True)
    p_enh.add_argument("--threshold", type=float, default=0.95)
    p_enh.add_argument("--dump-dir", default=None,
                       help="write spectrogram/mask CSVs and PNGs here")

    p_eval = sub.add_parser("evaluate", help="score an enhanced WAV against the clean one")
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--clean", required=True)
    p_eval.add_argument("--enhanced", required=True)
    p_eval.add_argument("--output", default=None)

    p_exp = sub.add_parser("experiment", help="run the full evaluation grid")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--out-dir", required=True)
    p_exp.add_argument("--jobs", type=int, default=None)

    return parser


def _dispatch(args) -> None:
    if args.command == "synth":
        cmd_synth(args.out_dir, args.seed, args.n_train, args.n_test)
        return
    cfg = load_config(args.config)
    if args.command == "train":
        cmd_train(cfg, args.method, args.output, args.latent_dim, args.trace)
    elif args.command == "enhance":
        cmd_enhance(cfg, args.model, args.input, args.output,
                    method=args.method, threshold=args.threshold, dump_dir=args.dump_dir)
    elif args.command == "evaluate":
        cmd_evaluate(cfg, args.clean, args.enhanced, args.output)
    elif args.command == "experiment":
        if args.jobs is not None:
            from dataclasses import replace

            cfg = replace(cfg, jobs=args.jobs)
        cmd_experiment(cfg, args.out_dir)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except Exception as exc:
        for etype, category, code in ERROR_CATEGORIES:
            if isinstance(exc, etype):
                print(f"error category={category} message={exc}", file=sys.stderr)
                return code
        print(f"error category=internal message={exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
