"""Figure rendering for reports and spectrogram/mask dumps.

Everything is rendered to files (Agg backend); no interactive windows.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

METHOD_ORDER = ("masked", "sr", "nmf", "gplvm", "cgplvm")


def _method_sort(rows):
    return sorted(rows, key=lambda r: METHOD_ORDER.index(r["method"]))


def plot_ssnr_vs_snr(report: list, path, threshold: float | None = None) -> None:
    """Mean SSNR per method against the mixing SNR, at one threshold."""
    if not report:
        return
    c = threshold if threshold is not None else max(r["c"] for r in report)
    dims = sorted({r["K"] for r in report})
    dim = dims[len(dims) // 2] if dims else None
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in METHOD_ORDER:
        rows = [r for r in report if r["method"] == method and r["c"] == c and r["K"] == dim]
        if not rows:
            continue
        rows.sort(key=lambda r: r["snr_db"])
        ax.plot([r["snr_db"] for r in rows], [r["ssnr"] for r in rows], marker="o", label=method)
    ax.set_xlabel("noise level (dB SNR)")
    ax.set_ylabel("SSNR (dB)")
    ax.set_title(f"threshold c={c}, latent dim {dim}")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_ssnr_vs_threshold(report: list, path) -> None:
    """Mean SSNR per method against the mask threshold, averaged over SNRs."""
    if not report:
        return
    dims = sorted({r["K"] for r in report})
    dim = dims[len(dims) // 2] if dims else None
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in METHOD_ORDER:
        rows = [r for r in report if r["method"] == method and r["K"] == dim]
        if not rows:
            continue
        thresholds = sorted({r["c"] for r in rows})
        means = [
            np.mean([r["ssnr"] for r in rows if r["c"] == c]) for c in thresholds
        ]
        ax.plot(thresholds, means, marker="s", label=method)
    ax.set_xlabel("mask threshold c")
    ax.set_ylabel("SSNR (dB)")
    ax.set_title(f"latent dim {dim}, averaged over noise levels")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_latent_dim_sweep(report: list, path) -> None:
    """SSNR against latent dimension, one panel per noise level."""
    rows = [r for r in report if r["method"] in ("gplvm", "cgplvm")]
    if not rows:
        return
    c = max(r["c"] for r in rows)
    snrs = sorted({r["snr_db"] for r in rows})
    fig, axes = plt.subplots(
        1, len(snrs), figsize=(3.2 * len(snrs), 3.4), sharey=True, squeeze=False
    )
    for ax, snr in zip(axes[0], snrs):
        for method in ("gplvm", "cgplvm"):
            pts = [r for r in rows if r["method"] == method and r["snr_db"] == snr and r["c"] == c]
            pts.sort(key=lambda r: r["K"])
            ax.plot([r["K"] for r in pts], [r["ssnr"] for r in pts], marker="o", label=method)
        ax.set_title(f"{snr:g} dB")
        ax.set_xlabel("latent dim")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel("SSNR (dB)")
    axes[0][0].legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_spectrogram(magnitude: np.ndarray, path, sample_rate: int, hop: int, title: str = "") -> None:
    """Log-magnitude image, frequency upward."""
    fig, ax = plt.subplots(figsize=(6, 4))
    db = 20.0 * np.log10(magnitude + 1e-10)
    extent = (0, magnitude.shape[1] * hop / sample_rate, 0, sample_rate / 2 / 1000)
    im = ax.imshow(db, origin="lower", aspect="auto", extent=extent, cmap="magma")
    fig.colorbar(im, ax=ax, label="dB")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (kHz)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_mask(mask: np.ndarray, path, sample_rate: int, hop: int) -> None:
    """Binary reliability mask image."""
    fig, ax = plt.subplots(figsize=(6, 4))
    extent = (0, mask.shape[1] * hop / sample_rate, 0, sample_rate / 2 / 1000)
    ax.imshow(mask, origin="lower", aspect="auto", extent=extent, cmap="gray_r")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (kHz)")
    ax.set_title("reliable bins (black = 1)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
