"""Window classification and temporal smoothing of predicted labels."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import UsageError
from .hdcore import Hypervector
from .metrics import ScoreSet, aggregate_subject, score_sequences
from .training import GlobalLabel, Model, nearest_indices

DEFAULT_SMOOTHING = 5


def classify_window(model: Model, hv: Hypervector) -> tuple[GlobalLabel, int, float]:
    """Label, sub-class id and normalized distance of the nearest prototype."""
    labels, ids, dist = classify_windows(model, hv.words[None])
    return GlobalLabel(int(labels[0])), int(ids[0]), float(dist[0])


def classify_windows(model: Model, words: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx, dist = nearest_indices(model, words, prefer=GlobalLabel.NON_SEIZURE)
    return model.labels[idx], model.ids[idx], dist / model.dim


def smooth_labels(labels, sw_len: int = DEFAULT_SMOOTHING, mode: str = "causal") -> np.ndarray:
    """Majority vote over a sliding window of ``sw_len`` labels; ties become non-seizure.

    ``causal`` uses the trailing window ending at each step (shorter at the
    start); ``centered`` uses the window around it, clipped at both ends.
    """
    x = np.asarray(labels).astype(np.int64)
    if x.ndim != 1 or x.size == 0:
        raise UsageError("smoothing needs a non-empty 1-D label sequence")
    if sw_len < 1 or sw_len % 2 == 0:
        raise UsageError(f"smoothing window must be a positive odd count, got {sw_len}")
    csum = np.concatenate([[0], np.cumsum(x)])
    t = np.arange(x.size)
    if mode == "causal":
        lo, hi = np.maximum(0, t - sw_len + 1), t + 1
    elif mode == "centered":
        half = sw_len // 2
        lo, hi = np.maximum(0, t - half), np.minimum(x.size, t + half + 1)
    else:
        raise UsageError(f"unknown smoothing mode {mode!r}")
    ones = csum[hi] - csum[lo]
    return (2 * ones > hi - lo).astype(np.int64)


@dataclass
class Prediction:
    """Per-window output for one file."""

    times: np.ndarray
    raw: np.ndarray
    smoothed: np.ndarray
    subclass_ids: np.ndarray
    distances: np.ndarray

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "rawLabel", "smoothedLabel", "subclassId", "distance"])
            for row in zip(self.times, self.raw, self.smoothed, self.subclass_ids, self.distances):
                w.writerow([f"{row[0]:g}", int(row[1]), int(row[2]), int(row[3]), f"{row[4]:.6f}"])


def predict(
    model: Model,
    words: np.ndarray,
    sw_len: int = DEFAULT_SMOOTHING,
    times: np.ndarray | None = None,
    mode: str = "causal",
) -> Prediction:
    labels, ids, dist = classify_windows(model, words)
    if times is None:
        times = np.arange(labels.size, dtype=float)
    return Prediction(times, labels, smooth_labels(labels, sw_len, mode), ids, dist)


def evaluate_sequences(
    model: Model,
    sequences: Sequence[tuple[np.ndarray, np.ndarray]],
    sw_len: int = DEFAULT_SMOOTHING,
    smoothed: bool = True,
    mode: str = "causal",
) -> ScoreSet:
    """Mean score over independently scored ``(words, truth)`` files."""
    if not sequences:
        raise UsageError("no sequences to evaluate")
    scores = []
    for words, truth in sequences:
        pred = predict(model, words, sw_len, mode=mode)
        scores.append(score_sequences(pred.smoothed if smoothed else pred.raw, truth))
    return aggregate_subject(scores)
