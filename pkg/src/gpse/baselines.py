"""Magnitude-domain baselines: NMF and sparse coding, plus noisy-phase resynthesis.

Both baselines reconstruct masked magnitude spectra as nonnegative (NMF) or
sparse (OMP) combinations of clean-speech templates and reattach the noisy
phase for resynthesis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .stft import Spectrogram

EPS = 1e-12  # zero-division guard in multiplicative updates


@dataclass(frozen=True)
class NmfBasis:
    """Nonnegative basis with unit-norm columns; objective_trace is the
    Frobenius reconstruction error per training iteration."""

    basis: np.ndarray = field(repr=False)  # bands x n_basis
    objective_trace: tuple = ()

    def __post_init__(self):
        if np.any(self.basis < 0):
            raise ValueError("basis must be nonnegative")


@dataclass(frozen=True)
class SparseDictionary:
    """Unit-norm clean-magnitude frames as atoms; overcomplete (atoms >= bands)."""

    atoms: np.ndarray = field(repr=False)  # bands x n_atoms
    dropped_frames: int = 0

    def __post_init__(self):
        bands, count = self.atoms.shape
        if count < bands:
            raise ValueError(f"dictionary must be overcomplete: {count} atoms < {bands} bands")


def train_nmf_basis(
    magnitudes: np.ndarray, n_basis: int, iters: int = 200, seed: int = 0
) -> NmfBasis:
    """Multiplicative-update NMF under the Euclidean (Frobenius) objective.

    The objective is non-increasing per iteration. The returned basis has
    unit-norm columns (scales folded into the discarded activations).
    """
    data = np.asarray(magnitudes, dtype=np.float64)
    if np.any(data < 0):
        raise ValueError("magnitudes must be nonnegative")
    bands, count = data.shape
    if not 1 <= n_basis <= count:
        raise ValueError(f"n_basis must be in [1, {count}]")
    rng = np.random.default_rng(seed)
    scale = np.sqrt(max(data.mean(), EPS) / n_basis)
    basis = rng.uniform(0.1, 1.0, size=(bands, n_basis)) * scale
    acts = rng.uniform(0.1, 1.0, size=(n_basis, count)) * scale
    trace = []
    for _ in range(iters):
        acts *= (basis.T @ data) / (basis.T @ basis @ acts + EPS)
        basis *= (data @ acts.T) / (basis @ (acts @ acts.T) + EPS)
        trace.append(float(np.linalg.norm(data - basis @ acts)))
    norms = np.maximum(np.linalg.norm(basis, axis=0), EPS)
    return NmfBasis(basis=basis / norms, objective_trace=tuple(trace))


def nmf_activations(
    masked_mags: np.ndarray, basis: NmfBasis, iters: int = 40
) -> tuple[np.ndarray, tuple]:
    """Activations for a fixed basis; multiplicative updates on H only.

    Returns (activations, per-iteration objective trace).
    """
    data = np.asarray(masked_mags, dtype=np.float64)
    w = basis.basis
    if data.shape[0] != w.shape[0]:
        raise ValueError("band counts of data and basis disagree")
    acts = w.T @ data  # nonnegative, deterministic start
    gram = w.T @ w
    trace = []
    for _ in range(iters):
        acts *= (w.T @ data) / (gram @ acts + EPS)
        trace.append(float(np.linalg.norm(data - w @ acts)))
    return acts, tuple(trace)


def build_dictionary(magnitudes: np.ndarray) -> SparseDictionary:
    """Unit-normalized training frames as atoms; zero frames are dropped."""
    data = np.asarray(magnitudes, dtype=np.float64)
    if np.any(data < 0):
        raise ValueError("magnitudes must be nonnegative")
    bands, count = data.shape
    if count < bands:
        raise ValueError(f"need at least {bands} frames for an overcomplete dictionary")
    norms = np.linalg.norm(data, axis=0)
    keep = norms > 0
    dropped = int(np.count_nonzero(~keep))
    if np.count_nonzero(keep) < bands:
        raise ValueError(
            f"fewer than {bands} nonzero frames ({int(np.count_nonzero(keep))}) "
            "after dropping silence"
        )
    return SparseDictionary(atoms=data[:, keep] / norms[keep], dropped_frames=dropped)


def omp_single(
    target: np.ndarray, atoms: np.ndarray, sparsity: int, max_iters: int
) -> tuple[np.ndarray, list]:
    """Greedy orthogonal matching pursuit for one column.

    Selects the atom best correlated with the residual, refits least squares
    on the support, and stops at the sparsity budget, a residual below 1e-9,
    or the iteration cap. Returns (coefficients, residual-norm history).
    """
    count = atoms.shape[1]
    coef = np.zeros(count)
    residual = target.astype(np.float64).copy()
    support: list[int] = []
    history = [float(np.linalg.norm(residual))]
    for _ in range(max_iters):
        if len(support) >= sparsity or history[-1] < 1e-9:
            break
        corr = atoms.T @ residual
        corr[support] = 0.0
        pick = int(np.argmax(np.abs(corr)))
        if corr[pick] == 0.0:
            break
        support.append(pick)
        sub = atoms[:, support]
        sol, *_ = np.linalg.lstsq(sub, target, rcond=None)
        residual = target - sub @ sol
        history.append(float(np.linalg.norm(residual)))
    if support:
        coef[support] = sol
    return coef, history


def omp_code(
    masked_mags: np.ndarray, dictionary: SparseDictionary, sparsity: int = 5, max_iters: int = 50
) -> np.ndarray:
    """Per-frame sparse codes; every column has at most `sparsity` nonzeros."""
    if sparsity < 1:
        raise ValueError("sparsity must be >= 1")
    if max_iters < sparsity:
        raise ValueError("iteration cap must be >= sparsity")
    data = np.asarray(masked_mags, dtype=np.float64)
    atoms = dictionary.atoms
    if data.shape[0] != atoms.shape[0]:
        raise ValueError("band counts of data and dictionary disagree")
    codes = np.zeros((atoms.shape[1], data.shape[1]))
    for t in range(data.shape[1]):
        codes[:, t], _ = omp_single(data[:, t], atoms, sparsity, max_iters)
    return codes


def reconstruct_with_noisy_phase(magnitudes: np.ndarray, noisy_spec: Spectrogram) -> Spectrogram:
    """Combine reconstructed magnitudes with the noisy phase.

    Output magnitude equals the input magnitudes; output phase equals the
    noisy phase. Zero-magnitude noisy bins get phase 0.
    """
    mags = np.asarray(magnitudes, dtype=np.float64)
    if np.any(mags < 0):
        raise ValueError("magnitudes must be nonnegative")
    if mags.shape != noisy_spec.bins.shape:
        raise ValueError("magnitude and spectrogram shapes disagree")
    phase = np.exp(1j * np.angle(noisy_spec.bins))
    return noisy_spec.replace_bins(mags * phase)


def save_nmf(basis: NmfBasis, path, extra_meta: dict | None = None) -> None:
    from . import modelio

    modelio.save_model(
        path,
        kind="nmf",
        version=1,
        params={},
        dims={
            "num_bands": basis.basis.shape[0],
            "n_basis": basis.basis.shape[1],
            **(extra_meta or {}),
        },
        arrays={"basis": basis.basis},
    )


def load_nmf(path) -> tuple[NmfBasis, dict]:
    from . import modelio

    record = modelio.load_model(path, expect_kind="nmf", expect_version=1)
    return NmfBasis(basis=record.arrays["basis"]), record.dims


def save_dictionary(dictionary: SparseDictionary, path, extra_meta: dict | None = None) -> None:
    from . import modelio

    modelio.save_model(
        path,
        kind="dict",
        version=1,
        params={},
        dims={
            "num_bands": dictionary.atoms.shape[0],
            "n_atoms": dictionary.atoms.shape[1],
            **(extra_meta or {}),
        },
        arrays={"atoms": dictionary.atoms},
    )


def load_dictionary(path) -> tuple[SparseDictionary, dict]:
    from . import modelio

    record = modelio.load_model(path, expect_kind="dict", expect_version=1)
    return SparseDictionary(atoms=record.arrays["atoms"]), record.dims
