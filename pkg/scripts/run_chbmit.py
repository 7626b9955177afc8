"""Build CHB-MIT subject files and run leave-one-seizure-out on them.

Expects ``ROOT/chbNN/*.edf`` with ``ROOT/chbNN/chbNN-summary.txt``
(the PhysioNet layout). Recordings missing one of the 18 montage channels are
skipped.

    python scripts/run_chbmit.py --root /data/chb-mit --subjects chb01 chb02 chb03 --factor 10
"""
import argparse
import logging
import time
from pathlib import Path

from mchd.config import ExperimentConfig
from mchd.experiment import emit_report, run_crossvalidation
from mchd.ingest import prepare_chbmit


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--root", type=Path, required=True)
    ap.add_argument("--subjects", nargs="+", default=["chb01", "chb02", "chb03"])
    ap.add_argument("--factor", type=int, choices=(1, 5, 10), default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--variants", nargs="+", default=["2C", "MC", "MCr", "MCc"])
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = args.out or Path(f"results/chbmit_f{args.factor}")
    t0 = time.perf_counter()
    manifest = prepare_chbmit(args.root, args.subjects, args.factor, out / "prepared", seed=args.seed)
    logging.info("prepared subject files in %.0fs", time.perf_counter() - t0)
    cfg = ExperimentConfig(dataset=str(manifest), factor=args.factor, seed=args.seed, threads=args.threads,
                           variants=args.variants, out=str(out))
    report = run_crossvalidation(cfg, out, progress=logging.info)
    emit_report(report, out, cfg)
    logging.info("total %.1f min", (time.perf_counter() - t0) / 60)
    for row in report.summary():
        if row["smoothing"] == "smoothed":
            print(f"{row['subject']:>6} {row['variant']:>4}  F1DEgmean={row['f1de_gmean']:.3f}  "
                  f"sub-classes={row['n_sub_total']:.1f}")


if __name__ == "__main__":
    main()
