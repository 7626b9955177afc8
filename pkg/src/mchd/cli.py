"""Command-line entry point: ``mchd <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig
from .errors import ConfigurationError, IngestionError, TrainingError, UsageError
from .features import fit_calibration, feature_names
from .encoder import EncoderContext
from .experiment import emit_report, run_crossvalidation
from .inference import predict
from .ingest import (
    SubjectFile,
    SyntheticSubjectConfig,
    generate_synthetic_subject,
    prepare_dataset,
    load_montage,
    read_annotations,
    read_chbmit_summary,
    write_annotations,
    write_edf,
    write_text_signal,
)
from .metrics import score_sequences
from .pipeline import ModelBundle, check_compatible, encode_file, featurize, stack_training
from .reduction import ReductionConfig, reduce
from .training import LABEL_NAMES, GlobalLabel, train_multicentroid, train_two_class

log = logging.getLogger("mchd")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="experiment config (YAML/JSON)")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--out", type=Path, default=None, help="output file or directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="mchd", description=__doc__, parents=[common],
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic subjects")
    p.add_argument("--subjects", type=int, default=1)
    p.add_argument("--seizure-modes", type=int, default=2)
    p.add_argument("--nonseizure-modes", type=int, default=3)
    p.add_argument("--n-seizures", type=int, default=6)
    p.add_argument("--factor", type=float, default=10)
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--fs", type=float, default=128.0)
    p.add_argument("--format", choices=("edf", "txt"), default="edf")

    p = sub.add_parser("prepare", parents=[common], help="build per-seizure subject files")
    p.add_argument("--data", type=Path, required=True, help="directory of .edf/.txt recordings")
    p.add_argument("--annotations", type=Path, required=True,
                   help="annotation CSV or CHB-MIT *-summary.txt (repeatable)", action="append")
    p.add_argument("--factor", type=float, required=True, choices=(1, 5, 10))
    p.add_argument("--montage", default="18", help="'18' (default list), 'none', or a channel-list file")
    p.add_argument("--subject", action="append", help="restrict to these subjects")

    sub.add_parser("crossval", parents=[common], help="run leave-one-seizure-out from --config")

    p = sub.add_parser("train", parents=[common], help="train a model on subject files")
    p.add_argument("files", nargs="+", type=Path)
    p.add_argument("--variant", choices=("2C", "MC"), default="MC")
    p.add_argument("--dim", type=int, default=10240)
    p.add_argument("--levels", type=int, default=20)
    p.add_argument("--margin", type=float, default=0.0)

    p = sub.add_parser("reduce", parents=[common], help="apply MCr/MCc to a saved model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--train", type=Path, nargs="+", required=True, help="training subject files")
    p.add_argument("--strategy", choices=("removal", "clustering"), default="removal")
    p.add_argument("--step", type=float, default=0.10)
    p.add_argument("--tolerance", type=float, default=0.03)
    p.add_argument("--trace", type=Path, default=None, help="reduction trace CSV")

    p = sub.add_parser("classify", parents=[common], help="score one subject file with a saved model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--file", type=Path, required=True)

    p = sub.add_parser("inspect", parents=[common], help="dump model sub-class statistics")
    p.add_argument("--model", type=Path, required=True)
    return parser


def _cmd_synth(args) -> None:
    out = args.out or Path("synthetic")
    out.mkdir(parents=True, exist_ok=True)
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        configs = [cfg.synthetic_config(e) for e in cfg.synthetic]
    else:
        seed = args.seed or 0
        configs = [
            SyntheticSubjectConfig(
                subject=f"synth{i + 1:02d}", n_seizure_modes=args.seizure_modes,
                n_nonseizure_modes=args.nonseizure_modes, n_seizures=args.n_seizures,
                factor=args.factor, n_channels=args.channels, fs=args.fs, seed=seed + i,
            )
            for i in range(args.subjects)
        ]
    annotations = []
    for scfg in configs:
        recs, anns = generate_synthetic_subject(scfg)
        for rec in recs:
            if args.format == "edf":
                write_edf(out / f"{rec.name}.edf", rec)
            else:
                write_text_signal(out / f"{rec.name}.txt", rec)
        annotations.extend(anns)
    write_annotations(out / "annotations.csv", annotations)
    print(f"wrote {sum(c.n_seizures for c in configs)} recordings to {out}")


def _cmd_prepare(args) -> None:
    annotations = []
    for path in args.annotations:
        annotations += read_chbmit_summary(path) if path.name.endswith("summary.txt") else read_annotations(path)
    montage = None if args.montage == "none" else load_montage(None if args.montage == "18" else args.montage)
    manifest = prepare_dataset(args.data, annotations, args.factor, args.out or Path("prepared"),
                               seed=args.seed or 0, montage=montage, subjects=args.subject)
    print(manifest)


def _cmd_crossval(args) -> None:
    if args.config is None:
        raise ConfigurationError("crossval needs --config")
    cfg = ExperimentConfig.load(args.config, seed=args.seed, threads=args.threads,
                                out=str(args.out) if args.out else None)
    out = Path(cfg.out)
    report = run_crossvalidation(cfg, out, progress=lambda m: log.info(m))
    for path in emit_report(report, out, cfg, args.config):
        print(path)
    for row in report.summary():
        if row["level"] == "overall":
            print(f"{row['variant']:>4} {row['smoothing']:>8}  F1DEgmean={row['f1de_gmean']:.3f}  "
                  f"sub-classes={row['n_sub_total']:.1f}")


def _load_files(paths) -> list[SubjectFile]:
    return [SubjectFile.load(p) for p in paths]


def _cmd_train(args) -> None:
    files = _load_files(args.files)
    feats = [featurize(sf) for sf in files]
    cal = fit_calibration([f.features for f in feats])
    seed = args.seed or 0
    ctx = EncoderContext.generate(feats[0].features.shape[1], len(feature_names()), args.dim, args.levels, seed)
    words, labels = stack_training([(encode_file(f, cal, ctx), f.labels) for f in feats])
    if args.variant == "2C":
        model = train_two_class(words, labels, ctx.tiebreak)
    else:
        model = train_multicentroid(words, labels, ctx.tiebreak, args.margin)
    model.n_levels, model.n_channels, model.n_features, model.seed = ctx.n_levels, ctx.shape[0], ctx.shape[1], seed
    out = args.out or Path(f"model_{args.variant}.mchd")
    ModelBundle(model, cal, fs=files[0].fs, channels=list(files[0].channels),
                train_files=[f.file_id for f in feats]).save(out)
    print(f"{out}: {len(model)} sub-classes")


def _encode_for(bundle: ModelBundle, sf: SubjectFile):
    check_compatible(bundle, sf)
    ff = featurize(sf, bundle.wlen, bundle.wstep, bundle.bank)
    return ff, encode_file(ff, bundle.calibration, bundle.encoder())


def _cmd_reduce(args) -> None:
    bundle = ModelBundle.load(args.model)
    train = [(w, ff.labels) for ff, w in (_encode_for(bundle, sf) for sf in _load_files(args.train))]
    res = reduce(bundle.model, train, ReductionConfig(args.step, args.tolerance, args.strategy, bundle.sw_len))
    bundle.model = res.model
    out = args.out or args.model.with_name(args.model.stem + f"_{res.model.variant}.mchd")
    bundle.save(out)
    if args.trace:
        res.write_trace(args.trace)
    print(f"{out}: {len(res.model)} sub-classes, train F1DEgmean {res.baseline:.3f} -> {res.score:.3f}")


def _cmd_classify(args) -> None:
    bundle = ModelBundle.load(args.model)
    sf = SubjectFile.load(args.file)
    ff, words = _encode_for(bundle, sf)
    pred = predict(bundle.model, words, bundle.sw_len, ff.times)
    if args.out:
        pred.write_csv(args.out)
    result = {
        "file": sf.file_id,
        "raw": score_sequences(pred.raw, ff.labels).as_dict(),
        "smoothed": score_sequences(pred.smoothed, ff.labels).as_dict(),
    }
    print(json.dumps(result, indent=2))


def _cmd_inspect(args) -> None:
    bundle = ModelBundle.load(args.model)
    m = bundle.model
    print(f"variant={m.variant} dim={m.dim} levels={m.n_levels} channels={m.n_channels} "
          f"features={m.n_features} seed={m.seed} sub-classes={len(m)}")
    totals = {lab: sum(s.count for s in m.subclasses if s.label == lab) for lab in GlobalLabel}
    print("id,label,count,data_fraction")
    for s in sorted(m.subclasses, key=lambda s: (s.label, -s.count, s.id)):
        print(f"{s.id},{LABEL_NAMES[s.label]},{s.count},{s.count / totals[s.label]:.4f}")


COMMANDS = {
    "synth": _cmd_synth,
    "prepare": _cmd_prepare,
    "crossval": _cmd_crossval,
    "train": _cmd_train,
    "reduce": _cmd_reduce,
    "classify": _cmd_classify,
    "inspect": _cmd_inspect,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (IngestionError, UsageError, TrainingError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
