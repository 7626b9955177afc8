"""Duration-level and episode-level seizure detection scores."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np

from .errors import UsageError


@dataclass(frozen=True)
class ScoreSet:
    tpr_d: float = 0.0
    ppv_d: float = 0.0
    f1_d: float = 0.0
    tpr_e: float = 0.0
    ppv_e: float = 0.0
    f1_e: float = 0.0
    f1de_gmean: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def f1_score(tpr: float, ppv: float) -> float:
    return 2 * tpr * ppv / (tpr + ppv) if tpr + ppv > 0 else 0.0


def f1de_gmean(f1d: float, f1e: float) -> float:
    return math.sqrt(f1d * f1e)


def _as_pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred).astype(bool)
    truth = np.asarray(truth).astype(bool)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise UsageError(f"label sequences differ in shape: {pred.shape} vs {truth.shape}")
    return pred, truth


def duration_scores(pred, truth) -> tuple[float, float, float]:
    """Sample-wise TPR, PPV, F1 with seizure as the positive class."""
    pred, truth = _as_pair(pred, truth)
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    tpr = tp / (tp + fn) if tp + fn else 0.0
    ppv = tp / (tp + fp) if tp + fp else 0.0
    return tpr, ppv, f1_score(tpr, ppv)


def episodes(labels) -> np.ndarray:
    """Maximal runs of positive labels as ``(start, stop)`` half-open rows."""
    x = np.asarray(labels).astype(np.int8)
    edges = np.diff(np.concatenate([[0], x, [0]]))
    return np.stack([np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)], axis=1)


def _overlapping(runs: np.ndarray, mask: np.ndarray) -> int:
    if len(runs) == 0:
        return 0
    csum = np.concatenate([[0], np.cumsum(mask)])
    return int(np.sum(csum[runs[:, 1]] - csum[runs[:, 0]] > 0))


def episode_scores(pred, truth) -> tuple[float, float, float]:
    """Any-overlap episode matching.

    A true episode is detected if any of its samples is predicted positive; a
    predicted episode is correct if it touches any true positive sample.
    """
    pred, truth = _as_pair(pred, truth)
    true_runs, pred_runs = episodes(truth), episodes(pred)
    tpr = _overlapping(true_runs, pred) / len(true_runs) if len(true_runs) else 0.0
    ppv = _overlapping(pred_runs, truth) / len(pred_runs) if len(pred_runs) else 0.0
    return tpr, ppv, f1_score(tpr, ppv)


def score_sequences(pred, truth) -> ScoreSet:
    d = duration_scores(pred, truth)
    e = episode_scores(pred, truth)
    return ScoreSet(*d, *e, f1de_gmean(d[2], e[2]))


def aggregate_subject(scores: Sequence[ScoreSet]) -> ScoreSet:
    """Field-wise mean over folds (the per-fold gmeans are averaged as well)."""
    if len(scores) == 0:
        raise UsageError("nothing to aggregate")
    names = ScoreSet.field_names()
    return ScoreSet(**{k: float(np.mean([getattr(s, k) for s in scores])) for k in names})
