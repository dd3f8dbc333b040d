"""Per-batch frequency-per-flow over a grid of batch sizes and Zipf exponents.

Writes one CSV per (exponent, B) pair plus ``summary.csv`` with the
representation advice for each point.

    python3 scripts/beta_sweep.py --out results/beta
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

from sketchguard.analysis import PERCENTILES, beta_csv, beta_stats, recommend_representation, theta
from sketchguard.batching import bits_for
from sketchguard.traces import read_trace, zipf_trace


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/beta")
    ap.add_argument("--trace", help="use this trace file instead of generated Zipf traces")
    ap.add_argument("--flows", type=int, default=20000)
    ap.add_argument("--items", type=int, default=400000)
    ap.add_argument("--zipf", type=float, nargs="+", default=[0.8, 1.0, 1.2])
    ap.add_argument("--B", type=int, nargs="+", default=[100, 500, 1000, 5000, 10000])
    ap.add_argument("--bits-mid", type=int, default=64)
    ap.add_argument("--alpha", default="0.8")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.trace:
        traces = {Path(args.trace).stem: read_trace(args.trace)}
    else:
        traces = {f"zipf{s}": zipf_trace(args.flows, args.items, s, args.seed, args.bits_mid) for s in args.zipf}

    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trace", "B", "beta_avg", *[f"p{p}" for p in PERCENTILES], "theta", "advice", "beta_hat", "early"])
        for name, trace in traces.items():
            for B in args.B:
                if B > len(trace):
                    continue
                stats = beta_stats(trace, B, trace_id=name)
                (out / f"{name}_B{B}.csv").write_text(beta_csv(stats))
                th = theta(args.bits_mid, bits_for(B))
                rec = recommend_representation(stats, th, args.alpha)
                w.writerow(
                    [name, B, float(stats.beta_avg), *[float(stats.percentile(p)) for p in PERCENTILES],
                     float(th), rec.kind.value, "" if rec.beta_hat is None else float(rec.beta_hat),
                     float(rec.early_transmission)]
                )
                print(f"{name} B={B}: beta_avg={float(stats.beta_avg):.3f} -> {rec.kind.value}")


if __name__ == "__main__":
    main()
