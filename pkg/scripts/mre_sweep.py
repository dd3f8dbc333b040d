"""Estimation error of a backup after a failure inside a batch.

Sweeps batch sizes and failure points on a seeded Zipf trace and writes
``mre.csv`` (one row per configuration).

    python3 scripts/mre_sweep.py --out results/mre
"""

from __future__ import annotations

import argparse
from pathlib import Path

from sketchguard.analysis import mre_csv, mre_experiment
from sketchguard.sketch import SketchParams
from sketchguard.traces import read_trace, zipf_trace


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/mre")
    ap.add_argument("--trace")
    ap.add_argument("--flows", type=int, default=20000)
    ap.add_argument("--items", type=int, default=400000)
    ap.add_argument("--zipf", type=float, default=1.0)
    ap.add_argument("--B", type=int, nargs="+", default=[100, 500, 2000, 10000])
    ap.add_argument("--fail-at", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--point", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.75, 1.0])
    ap.add_argument("--epsilon", type=float, default=0.001)
    ap.add_argument("--delta", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    trace = read_trace(args.trace) if args.trace else zipf_trace(args.flows, args.items, args.zipf, args.seed)
    params = SketchParams.from_guarantees(args.epsilon, args.delta, seed=args.seed)
    reports = []
    for B in args.B:
        for fail_at in args.fail_at:
            for point in args.point:
                r = mre_experiment(trace, B, params, fail_at, point)
                reports.append(r)
                print(
                    f"B={B} fail_at={fail_at} point={point}: "
                    f"+B {r.mre_plus_b_nonfailed:.4f} backup {r.mre_backup_nonfailed:.4f} one_sided={r.one_sided}"
                )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "mre.csv").write_text(mre_csv(reports))


if __name__ == "__main__":
    main()
