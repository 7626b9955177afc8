"""Experiment configuration, read from a flat YAML (or JSON) mapping."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigurationError
from .features import FeatureBank
from .hdcore import DEFAULT_DIM, DEFAULT_LEVELS, check_dim
from .ingest import SyntheticSubjectConfig
from .reduction import ReductionConfig

VARIANTS = ("2C", "MC", "MCr", "MCc")
FACTORS = (1, 5, 10)


@dataclass
class ExperimentConfig:
    # data: either a manifest written by `mchd prepare` or synthetic subjects
    dataset: str | None = None
    synthetic: list[dict] = field(default_factory=list)
    subjects: list[str] | None = None
    factor: float = 10
    # model
    dim: int = DEFAULT_DIM
    n_levels: int = DEFAULT_LEVELS
    margin: float = 0.0
    variants: list[str] = field(default_factory=lambda: list(VARIANTS))
    # windows and smoothing
    wlen: float = 8.0
    wstep: float = 1.0
    sw_len: int = 5
    smoothing_mode: str = "causal"
    # reduction
    reduction_step: float = 0.10
    reduction_tolerance: float = 0.03
    features: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "results"
    threads: int = 1
    save_models: bool = True

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if (self.dataset is None) == (not self.synthetic):
            raise ConfigurationError("set exactly one of 'dataset' or 'synthetic'")
        if self.factor not in FACTORS:
            raise ConfigurationError(f"factor must be one of {FACTORS}, got {self.factor}")
        check_dim(self.dim)
        if self.n_levels < 2:
            raise ConfigurationError("n_levels must be >= 2")
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad or not self.variants:
            raise ConfigurationError(f"unknown variants {bad}; choose from {VARIANTS}")
        if self.wlen <= 0 or self.wstep <= 0:
            raise ConfigurationError("wlen and wstep must be positive")
        if self.sw_len < 1 or self.sw_len % 2 == 0:
            raise ConfigurationError("sw_len must be a positive odd integer")
        if self.smoothing_mode not in ("causal", "centered"):
            raise ConfigurationError("smoothing_mode must be 'causal' or 'centered'")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        if self.margin < 0:
            raise ConfigurationError("margin must be >= 0")
        self.reduction_config("removal")
        self.feature_bank()
        for s in self.synthetic:
            self.synthetic_config(s)

    def reduction_config(self, strategy: str) -> ReductionConfig:
        return ReductionConfig(self.reduction_step, self.reduction_tolerance, strategy, self.sw_len)

    def feature_bank(self) -> FeatureBank:
        try:
            return FeatureBank.from_dict(self.features)
        except TypeError as exc:
            raise ConfigurationError(f"bad feature bank override: {exc}") from None

    def synthetic_config(self, entry: dict) -> SyntheticSubjectConfig:
        entry = {"factor": self.factor, **entry}
        for key in ("seizure_duration", "regime_duration", "mode_weights"):
            if entry.get(key) is not None:
                entry[key] = tuple(entry[key])
        try:
            return SyntheticSubjectConfig(**entry)
        except TypeError as exc:
            raise ConfigurationError(f"bad synthetic subject entry: {exc}") from None

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=True))

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path, **overrides: Any) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: config must be a mapping")
        data.update({k: v for k, v in overrides.items() if v is not None})
        if data.get("dataset") and not Path(data["dataset"]).is_absolute():
            data["dataset"] = str(path.parent / data["dataset"])
        return cls.from_mapping(data)
