"""Glue between subject files, features, encoding and saved model bundles."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .encoder import EncoderContext, encode_windows
from .errors import UsageError
from .features import DEFAULT_BANK, Calibration, FeatureBank, discretize, extract_features, feature_names
from .ingest import SubjectFile
from .training import Model


@dataclass
class FileFeatures:
    """Features and window labels of one subject file, tagged with its id."""

    file_id: str
    features: np.ndarray  # (n_windows, n_channels, n_features)
    labels: np.ndarray
    times: np.ndarray  # window start, seconds


def featurize(sf: SubjectFile, wlen: float = 8.0, wstep: float = 1.0, bank: FeatureBank = DEFAULT_BANK) -> FileFeatures:
    feats = extract_features(sf.samples, sf.fs, wlen, wstep, bank)
    labels = sf.window_labels(wlen, wstep)
    times = np.arange(labels.size) * wstep
    return FileFeatures(sf.file_id, feats, labels, times)


def encode_file(ff: FileFeatures, cal: Calibration, ctx: EncoderContext) -> np.ndarray:
    return encode_windows(discretize(ff.features, cal, ctx.n_levels), ctx)


@dataclass
class ModelBundle:
    """A trained model plus everything needed to encode new data for it."""

    model: Model
    calibration: Calibration
    bank: FeatureBank = DEFAULT_BANK
    fs: float = 256.0
    channels: list[str] = field(default_factory=list)
    wlen: float = 8.0
    wstep: float = 1.0
    sw_len: int = 5
    train_files: list[str] = field(default_factory=list)

    def encoder(self) -> EncoderContext:
        m = self.model
        return EncoderContext.generate(m.n_channels, m.n_features, m.dim, m.n_levels, m.seed)

    def manifest(self) -> dict:
        m = self.model
        return {
            "variant": m.variant,
            "dim": m.dim,
            "n_levels": m.n_levels,
            "n_channels": m.n_channels,
            "n_features": m.n_features,
            "encoder_seed": m.seed,
            "feature_names": feature_names(self.bank),
            "feature_bank": self.bank.to_dict(),
            "calibration": self.calibration.to_dict(),
            "fs": self.fs,
            "channels": list(self.channels),
            "wlen": self.wlen,
            "wstep": self.wstep,
            "sw_len": self.sw_len,
            "train_files": list(self.train_files),
        }

    def save(self, path: str | Path) -> None:
        path = Path(path)
        self.model.save(path)
        manifest_path(path).write_text(json.dumps(self.manifest(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "ModelBundle":
        path = Path(path)
        model = Model.load(path)
        mpath = manifest_path(path)
        if not mpath.exists():
            raise UsageError(f"missing manifest {mpath} next to model {path}")
        meta = json.loads(mpath.read_text())
        return cls(
            model,
            Calibration.from_dict(meta["calibration"]),
            FeatureBank.from_dict(meta["feature_bank"]),
            meta["fs"],
            meta["channels"],
            meta["wlen"],
            meta["wstep"],
            meta["sw_len"],
            meta["train_files"],
        )


def manifest_path(model_path: str | Path) -> Path:
    p = Path(model_path)
    return p.with_name(p.name + ".manifest.json")


def check_compatible(bundle: ModelBundle, sf: SubjectFile) -> None:
    if sf.fs != bundle.fs or list(sf.channels) != list(bundle.channels):
        raise UsageError(
            f"{sf.file_id}: fs/channels ({sf.fs}, {len(sf.channels)} ch) do not match the model "
            f"({bundle.fs}, {len(bundle.channels)} ch)"
        )


def stack_training(encoded: Sequence[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    return np.concatenate([w for w, _ in encoded]), np.concatenate([y for _, y in encoded])
