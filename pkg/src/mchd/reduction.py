"""Post-training reduction of sub-class count by removal or same-label merging."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import hdcore
from .errors import ConfigurationError, UsageError
from .inference import DEFAULT_SMOOTHING, evaluate_sequences
from .training import GlobalLabel, Model, SubClass

STRATEGIES = ("removal", "clustering")


@dataclass(frozen=True)
class ReductionConfig:
    step_fraction: float = 0.10
    tolerance: float = 0.03
    strategy: str = "removal"
    sw_len: int = DEFAULT_SMOOTHING

    def __post_init__(self) -> None:
        if not 0 < self.step_fraction < 1:
            raise ConfigurationError(f"step_fraction must be in (0, 1), got {self.step_fraction}")
        if self.tolerance < 0:
            raise ConfigurationError(f"tolerance must be >= 0, got {self.tolerance}")
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")


@dataclass(frozen=True)
class TraceRow:
    step: int
    strategy: str
    n_seizure: int
    n_nonseizure: int
    retained_fraction: float
    train_f1de_gmean: float
    accepted: bool


TRACE_FIELDS = [
    "step",
    "strategy",
    "n_seizure",
    "n_nonseizure",
    "retained_fraction",
    "train_f1de_gmean",
    "accepted",
]


@dataclass
class ReductionResult:
    model: Model
    baseline: float
    score: float
    trace: list[TraceRow] = field(default_factory=list)

    def write_trace(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_FIELDS)
            for row in self.trace:
                w.writerow([getattr(row, k) for k in TRACE_FIELDS])


def select_least_populated(model: Model, fraction: float) -> list[SubClass]:
    """Smallest-count sub-classes (younger first on ties), never a label's last one."""
    k = math.ceil(fraction * len(model))
    remaining = model.counts_per_label()
    chosen = []
    for s in sorted(model.subclasses, key=lambda s: (s.count, -s.id)):
        if len(chosen) == k:
            break
        if remaining[s.label] <= 1:
            continue
        chosen.append(s)
        remaining[s.label] -= 1
    return chosen


def _apply_step(model: Model, chosen: list[SubClass], strategy: str) -> Model:
    out = model.copy()
    drop = {s.id for s in chosen}
    survivors = [s for s in out.subclasses if s.id not in drop]
    if strategy == "clustering":
        by_id = {s.id: s for s in out.subclasses}
        touched = set()
        for victim in chosen:
            v = by_id[victim.id]
            pool = [s for s in survivors if s.label == v.label]
            dists = [hdcore.hamming(v.prototype, s.prototype) for s in pool]
            best = min(range(len(pool)), key=lambda i: (dists[i], pool[i].id))
            pool[best].acc.merge(v.acc)
            touched.add(pool[best].id)
        for s in survivors:
            if s.id in touched:
                s.prototype = hdcore.binarize(s.acc, out.tiebreak)
    out.subclasses = survivors
    return out


def _trace_row(step, model, strategy, total, score, accepted) -> TraceRow:
    per = model.counts_per_label()
    return TraceRow(
        step,
        strategy,
        per[GlobalLabel.SEIZURE],
        per[GlobalLabel.NON_SEIZURE],
        float(model.counts.sum() / total) if total else 0.0,
        float(score),
        accepted,
    )


def reduce(
    model: Model,
    train: Sequence[tuple[np.ndarray, np.ndarray]],
    cfg: ReductionConfig = ReductionConfig(),
) -> ReductionResult:
    """Shrink ``model`` step by step while the smoothed training F1DEgmean holds.

    ``train`` is a list of per-file ``(words, labels)`` pairs so smoothing and
    episodes never straddle file boundaries. A step whose score falls below
    ``(1 - tolerance) * baseline`` is reverted and ends the procedure.
    """
    if not train:
        raise UsageError("reduction needs training data")
    present = set(np.concatenate([np.asarray(lab) for _, lab in train]).astype(int).tolist())
    if present != {0, 1}:
        raise UsageError("training data must contain both labels")
    baseline = evaluate_sequences(model, train, cfg.sw_len).f1de_gmean
    floor = (1 - cfg.tolerance) * baseline
    total = int(model.counts.sum())
    current = model.copy()
    current.variant = "MCr" if cfg.strategy == "removal" else "MCc"
    result = ReductionResult(current, baseline, baseline)
    result.trace.append(_trace_row(0, current, cfg.strategy, total, baseline, True))

    step = 0
    while True:
        chosen = select_least_populated(current, cfg.step_fraction)
        if not chosen:
            break
        step += 1
        candidate = _apply_step(current, chosen, cfg.strategy)
        score = evaluate_sequences(candidate, train, cfg.sw_len).f1de_gmean
        ok = score >= floor
        result.trace.append(_trace_row(step, candidate, cfg.strategy, total, score, ok))
        if not ok:
            break
        current = candidate
        result.score = score
    result.model = current
    return result
