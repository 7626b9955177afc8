"""Leave-one-seizure-out cross-validation over model variants and CSV reporting."""
from __future__ import annotations

import csv
import hashlib
import logging
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .config import VARIANTS, ExperimentConfig
from .encoder import EncoderContext
from .errors import IngestionError
from .features import fit_calibration, feature_names
from .inference import predict
from .ingest import SubjectFile, build_subject_files, generate_synthetic_subject, read_dataset_manifest
from .metrics import ScoreSet, score_sequences
from .pipeline import FileFeatures, ModelBundle, encode_file, featurize, stack_training
from .reduction import TRACE_FIELDS, reduce
from .training import GlobalLabel, Model, train_multicentroid, train_two_class

log = logging.getLogger(__name__)

SCORE_FIELDS = ["subject", "factor", "fold", "test_file", "variant", "smoothing", *ScoreSet.field_names(),
                "n_sub_seizure", "n_sub_nonseizure", "train_files"]
SUBCLASS_FIELDS = ["subject", "factor", "fold", "variant", "subclass_id", "label", "count", "data_fraction"]
REDUCTION_FIELDS = ["subject", "factor", "fold", *TRACE_FIELDS]
SUMMARY_FIELDS = ["level", "subject", "factor", "variant", "smoothing", *ScoreSet.field_names(),
                  "n_sub_seizure", "n_sub_nonseizure", "n_sub_total"]
SMOOTHING_STATES = ("raw", "smoothed")


def derive_seed(master: int, subject: str, fold: int) -> int:
    digest = hashlib.sha256(f"{master}|{subject}|{fold}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


@dataclass
class Report:
    factor: float
    scores: list[dict] = field(default_factory=list)
    subclasses: list[dict] = field(default_factory=list)
    reduction: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def summary(self) -> list[dict]:
        """Per-subject fold means, then an equally weighted mean over subjects."""
        rows = []
        metric_names = [*ScoreSet.field_names(), "n_sub_seizure", "n_sub_nonseizure"]
        keys = []
        for r in self.scores:
            k = (r["variant"], r["smoothing"])
            if k not in keys:
                keys.append(k)
        keys.sort(key=lambda k: (VARIANTS.index(k[0]), SMOOTHING_STATES.index(k[1])))
        subjects = sorted({r["subject"] for r in self.scores})
        for variant, smoothing in keys:
            per_subject = []
            for subj in subjects:
                sel = [r for r in self.scores
                       if r["subject"] == subj and r["variant"] == variant and r["smoothing"] == smoothing]
                if not sel:
                    continue
                means = {m: float(np.mean([r[m] for r in sel])) for m in metric_names}
                per_subject.append(means)
                rows.append(self._summary_row("subject", subj, variant, smoothing, means))
            overall = {m: float(np.mean([s[m] for s in per_subject])) for m in metric_names}
            rows.append(self._summary_row("overall", "ALL", variant, smoothing, overall))
        return rows

    def _summary_row(self, level, subject, variant, smoothing, means) -> dict:
        row = {"level": level, "subject": subject, "factor": self.factor, "variant": variant,
               "smoothing": smoothing, **means}
        row["n_sub_total"] = means["n_sub_seizure"] + means["n_sub_nonseizure"]
        return row


@dataclass
class SubjectData:
    subject: str
    files: list[SubjectFile]


def load_subjects(cfg: ExperimentConfig) -> list[SubjectData]:
    out = []
    if cfg.synthetic:
        for entry in cfg.synthetic:
            scfg = cfg.synthetic_config(entry)
            recs, anns = generate_synthetic_subject(scfg)
            files = build_subject_files(recs, anns, cfg.factor, seed=scfg.seed)
            out.append(SubjectData(scfg.subject, files))
    else:
        for subject, paths in read_dataset_manifest(cfg.dataset).items():
            files = [SubjectFile.load(p) for p in paths]
            bad = [f.file_id for f in files if f.factor != cfg.factor]
            if bad:
                raise IngestionError(f"files {bad} were prepared with a different factor than {cfg.factor}")
            out.append(SubjectData(subject, files))
    if cfg.subjects is not None:
        wanted = set(cfg.subjects)
        out = [s for s in out if s.subject in wanted]
    return out


def _subclass_rows(base: dict, model: Model) -> list[dict]:
    totals = {lab: sum(s.count for s in model.subclasses if s.label == lab) for lab in GlobalLabel}
    return [
        {**base, "variant": model.variant, "subclass_id": s.id, "label": int(s.label), "count": s.count,
         "data_fraction": s.count / totals[s.label]}
        for s in model.subclasses
    ]


def run_fold(
    cfg: ExperimentConfig,
    subject: str,
    fold: int,
    feats: Sequence[FileFeatures],
    files: Sequence[SubjectFile],
    out_dir: Path | None = None,
) -> dict:
    """Train every requested variant without the held-out file and score it."""
    test = feats[fold]
    train = [f for i, f in enumerate(feats) if i != fold]
    train_ids = [f.file_id for f in train]
    assert test.file_id not in train_ids, "test file leaked into training"

    seed = derive_seed(cfg.seed, subject, fold)
    bank = cfg.feature_bank()
    cal = fit_calibration([f.features for f in train])
    n_ch = test.features.shape[1]
    ctx = EncoderContext.generate(n_ch, len(feature_names(bank)), cfg.dim, cfg.n_levels, seed)
    train_enc = [(encode_file(f, cal, ctx), f.labels) for f in train]
    test_words = encode_file(test, cal, ctx)
    words, labels = stack_training(train_enc)

    models: dict[str, Model] = {}
    traces = []
    if "2C" in cfg.variants:
        models["2C"] = train_two_class(words, labels, ctx.tiebreak)
    if {"MC", "MCr", "MCc"} & set(cfg.variants):
        mc = train_multicentroid(words, labels, ctx.tiebreak, cfg.margin)
        if "MC" in cfg.variants:
            models["MC"] = mc
        for variant, strategy in (("MCr", "removal"), ("MCc", "clustering")):
            if variant in cfg.variants:
                res = reduce(mc, train_enc, cfg.reduction_config(strategy))
                models[variant] = res.model
                traces.extend(res.trace)

    base = {"subject": subject, "factor": cfg.factor, "fold": fold}
    scores, subclasses = [], []
    for variant in [v for v in VARIANTS if v in models]:
        model = models[variant]
        model.n_levels, model.n_channels, model.n_features, model.seed = ctx.n_levels, n_ch, ctx.shape[1], seed
        pred = predict(model, test_words, cfg.sw_len, test.times, cfg.smoothing_mode)
        per = model.counts_per_label()
        for smoothing, seq in zip(SMOOTHING_STATES, (pred.raw, pred.smoothed)):
            s = score_sequences(seq, test.labels)
            scores.append({**base, "test_file": test.file_id, "variant": variant, "smoothing": smoothing,
                           **s.as_dict(), "n_sub_seizure": per[GlobalLabel.SEIZURE],
                           "n_sub_nonseizure": per[GlobalLabel.NON_SEIZURE], "train_files": " ".join(train_ids)})
        subclasses.extend(_subclass_rows(base, model))
        if out_dir is not None and cfg.save_models:
            sf = files[fold]
            bundle = ModelBundle(model, cal, bank, sf.fs, list(sf.channels), cfg.wlen, cfg.wstep, cfg.sw_len, train_ids)
            bundle.save(out_dir / "models" / f"{test.file_id}_{variant}.mchd")
    reduction = [{**base, **{k: getattr(t, k) for k in TRACE_FIELDS}} for t in traces]
    return {"scores": scores, "subclasses": subclasses, "reduction": reduction}


def run_crossvalidation(
    cfg: ExperimentConfig,
    out_dir: str | Path | None = None,
    progress: Callable[[str], None] | None = None,
) -> Report:
    """Leave-one-seizure-out over every subject; results merge in (subject, fold) order."""
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None and cfg.save_models:
        (out_dir / "models").mkdir(parents=True, exist_ok=True)
    report = Report(cfg.factor)
    bank = cfg.feature_bank()
    tasks = []
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        for subj in load_subjects(cfg):
            if len(subj.files) < 2:
                msg = f"subject {subj.subject} skipped: {len(subj.files)} seizure file(s), need >= 2"
                log.warning(msg)
                report.warnings.append(msg)
                continue
            if progress:
                progress(f"{subj.subject}: extracting features of {len(subj.files)} files")
            feats = list(pool.map(lambda sf: featurize(sf, cfg.wlen, cfg.wstep, bank), subj.files))
            for fold in range(len(subj.files)):
                tasks.append((subj.subject, fold, feats, subj.files))
        results = list(pool.map(lambda t: run_fold(cfg, *t, out_dir=out_dir), tasks))
    for (subject, fold, *_), res in zip(tasks, results):
        if progress:
            progress(f"{subject} fold {fold}: done")
        report.scores.extend(res["scores"])
        report.subclasses.extend(res["subclasses"])
        report.reduction.extend(res["reduction"])
    return report


def _write_csv(path: Path, header: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in header])


def emit_report(
    report: Report, out_dir: str | Path, cfg: ExperimentConfig | None = None, config_source: str | Path | None = None
) -> list[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, header, rows in (
            ("scores.csv", SCORE_FIELDS, report.scores),
            ("subclasses.csv", SUBCLASS_FIELDS, report.subclasses),
            ("reduction_trace.csv", REDUCTION_FIELDS, report.reduction),
            ("summary.csv", SUMMARY_FIELDS, report.summary()),
        ):
            _write_csv(out / name, header, rows)
            written.append(out / name)
        if report.warnings:
            (out / "warnings.txt").write_text("\n".join(report.warnings) + "\n")
            written.append(out / "warnings.txt")
        if cfg is not None:
            cfg.dump(out / "config.resolved.yaml")
            written.append(out / "config.resolved.yaml")
        if config_source is not None and Path(config_source).resolve() != (out / "config.yaml").resolve():
            shutil.copyfile(config_source, out / "config.yaml")
            written.append(out / "config.yaml")
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return written
