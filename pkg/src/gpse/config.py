"""Experiment configuration: a strict JSON document.

Unknown keys are rejected at every level so a stale or typo'd config fails
fast instead of silently running the wrong grid.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .errors import ConfigError
from .masking import PsdConfig
from .stft import StftConfig

METHODS = ("masked", "sr", "nmf", "gplvm", "cgplvm")


@dataclass(frozen=True)
class NmfSettings:
    basis_size: int = 80
    train_iters: int = 200
    activation_iters: int = 40


@dataclass(frozen=True)
class SparseSettings:
    sparsity: int = 5
    max_iters: int = 50


@dataclass(frozen=True)
class TrainSettings:
    max_iters: int = 500
    infer_max_iters: int = 60
    multi_starts: int = 5


@dataclass(frozen=True)
class ExperimentConfig:
    corpus_dir: str = ""
    snr_levels_db: tuple = (5.0, 10.0, 15.0, 20.0)
    thresholds: tuple = (0.75, 0.85, 0.95)
    latent_dims: tuple = (10, 20, 30, 40)
    methods: tuple = METHODS
    stft: StftConfig = field(default_factory=StftConfig)
    psd: PsdConfig = field(default_factory=PsdConfig)
    seed: int = 0
    training_frame_cap: int = 512
    nmf: NmfSettings = field(default_factory=NmfSettings)
    sparse: SparseSettings = field(default_factory=SparseSettings)
    train: TrainSettings = field(default_factory=TrainSettings)
    jobs: int = 1

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")
        for c in self.thresholds:
            if not 0.0 < c < 1.0:
                raise ConfigError(f"threshold {c} outside (0, 1)")
        for k in self.latent_dims:
            if int(k) < 1:
                raise ConfigError(f"latent dim {k} must be >= 1")
        if self.training_frame_cap < 2:
            raise ConfigError("training_frame_cap must be >= 2")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


_SECTION_TYPES = {
    "stft": StftConfig,
    "psd": PsdConfig,
    "nmf": NmfSettings,
    "sparse": SparseSettings,
    "train": TrainSettings,
}
_LIST_FIELDS = {"snr_levels_db", "thresholds", "latent_dims", "methods"}


def _build_section(cls, payload, name):
    if not isinstance(payload, dict):
        raise ConfigError(f"section '{name}' must be an object")
    allowed = set(cls.__dataclass_fields__)
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    try:
        return cls(**payload)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{name}' section: {exc}") from exc


def config_from_dict(payload: dict) -> ExperimentConfig:
    if not isinstance(payload, dict):
        raise ConfigError("config document must be a JSON object")
    allowed = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in payload.items():
        if key in _SECTION_TYPES:
            kwargs[key] = _build_section(_SECTION_TYPES[key], value, key)
        elif key in _LIST_FIELDS:
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"'{key}' must be a list")
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(payload)


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(asdict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
