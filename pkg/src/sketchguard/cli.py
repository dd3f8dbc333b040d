"""``sketchguard`` command line.

Exit codes: 0 on success, 1 when the run reached a domain failure such as
unrecoverable data, 2 on usage, configuration or I/O errors.

``simulate`` reads a JSON config whose fields mirror :class:`SimConfig`;
command-line flags override config fields, which override defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time
from dataclasses import asdict, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import __version__
from .analysis import beta_csv, beta_stats, mre_csv, mre_experiment, recommend_representation, theta
from .batching import BatchConfig, bits_for
from .redundancy import (
    GenerationMatrix,
    MappingKind,
    RecoveryStatus,
    mapping_stats,
    build_coverage,
    minor_determinants,
    mr_generate,
    pascal_generate,
    recovery_plan,
    spans_check,
)
from .simnet import FailureScript, SimConfig, SimConfigError, run
from .sketch import SketchParams
from .traces import TraceFormatError, read_bits_mid, read_trace, write_trace, zipf_trace

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get("SKETCHGUARD_SEED", "0")
    try:
        return int(raw, 0)
    except ValueError:
        raise UsageError(f"SKETCHGUARD_SEED is not an integer: {raw!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            cwd=Path(__file__).resolve().parent,
            timeout=5,
        )
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def write_manifest(path: Path, command: str, config: dict, seed: int, outputs: list[str], started: float) -> None:
    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "git": _git_describe(),
        "outputs": outputs,
        "elapsed_seconds": round(time.monotonic() - started, 3),
    }
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _load_trace(path: str) -> list[int]:
    if not Path(path).is_file():
        raise UsageError(f"trace file not found: {path}")
    return read_trace(path)


# -- commands ---------------------------------------------------------------


def cmd_gen_trace(args) -> int:
    items = zipf_trace(args.flows, args.items, args.zipf, args.seed, args.bits_mid)
    write_trace(args.out, items, args.bits_mid)
    print(f"wrote {len(items)} items over {args.flows} flows to {args.out}")
    return EXIT_OK


def _fmt_row(row) -> str:
    return " ".join(f"{v:>4}" for v in row)


def cmd_matrix(args) -> int:
    m = pascal_generate(args.k) if args.pascal else mr_generate(args.k, args.f)
    for row in m:
        print(_fmt_row(row))
    if args.pascal:
        return EXIT_OK
    ok = spans_check(m, args.f)
    print(f"span check: {'ok' if ok else 'FAILED'}")
    if args.check:
        dets = minor_determinants(m, args.f)
        print(f"{len(dets)} minors of size {args.f}: {dets}")
        ok = ok and all(dets)
    return EXIT_OK if ok else EXIT_DOMAIN


def _expr(combo) -> str:
    out = ""
    for ref, c in combo.items():
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        term = f"{ref}" if mag == 1 else f"{mag}*{ref}"
        out += (f"-{term}" if sign == "-" else term) if not out else f" {sign} {term}"
    return out or "0"


def cmd_plan(args) -> int:
    if args.mapping:
        mapping = build_coverage(args.mapping, args.k, args.f, args.p)
        stats = mapping_stats(mapping)
        print(mapping.to_json())
        print(f"space: {stats.space}")
        for node, cost in sorted(stats.recovery_sketches.items()):
            print(f"node {node}: recovery {cost} sketches, holds {stats.held[node]}")
        return EXIT_OK
    g = (
        GenerationMatrix.dedicated(args.k, args.f)
        if args.strategy == "dedicated"
        else GenerationMatrix.distributed(args.k)
    )
    failed: list = [int(t) if t.strip().isdigit() else t.strip() for t in args.failed.split(",") if t.strip()]
    plan = recovery_plan(g, failed)
    print(f"status: {plan.status.value}")
    if plan.reason:
        print(f"reason: {plan.reason}")
    for target, combo in sorted(plan.combos.items()):
        print(f"{target} = {_expr(combo)}")
    for target, bounds in sorted(plan.bounds.items()):
        for b in bounds:
            print(f"{target} <= floor(({_expr(b.combo)}) / {b.divisor})")
    return EXIT_DOMAIN if plan.status is RecoveryStatus.UNRECOVERABLE else EXIT_OK


_SIM_FLAGS = ("k", "f", "mapping", "partition", "p", "q", "epsilon", "delta", "shard")


def build_sim_config(args) -> SimConfig:
    doc: dict = {}
    if args.config:
        if not Path(args.config).is_file():
            raise UsageError(f"config file not found: {args.config}")
        doc = json.loads(Path(args.config).read_text())
    for name in _SIM_FLAGS:
        value = getattr(args, name)
        if value is not None:
            doc[name] = value
    batch = dict(doc.get("batch", {}))
    if args.rep is not None:
        batch["kind"] = args.rep
    if args.B is not None:
        batch["B"] = args.B
    batch.setdefault("B", 1000)
    doc["batch"] = batch
    doc["seed"] = args.seed if args.seed is not None else doc.get("seed", default_seed())
    return SimConfig.from_dict(doc)


def cmd_simulate(args) -> int:
    started = time.monotonic()
    cfg = build_sim_config(args)
    trace = _load_trace(args.trace)
    script = FailureScript()
    if args.failures:
        text = args.failures
        if not text.lstrip().startswith("["):
            if not Path(text).is_file():
                raise UsageError(f"failure script not found: {text}")
            text = Path(text).read_text()
        script = FailureScript.from_list(json.loads(text))
    report = run(cfg, trace, script)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "cycles.csv").write_text(report.to_csv())
    write_manifest(out / "manifest.json", "simulate", cfg.to_dict(), cfg.seed, ["report.json", "cycles.csv"], started)
    for rec in report.recoveries:
        print(f"cycle {rec.cycle}: failed {rec.failed} -> {rec.status} (verified={str(rec.verified).lower()})")
    print(f"final sum digests: {json.dumps(report.sum_digests, sort_keys=True)}")
    print(f"traffic bits: {sum(c.traffic_bits for c in report.cycles)}")
    if report.unrecoverable and not args.allow_loss:
        print("unrecoverable failure", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_beta(args) -> int:
    started = time.monotonic()
    trace = _load_trace(args.trace)
    bits_mid = args.bits_mid or read_bits_mid(args.trace)
    parts = []
    for B in args.B:
        stats = beta_stats(trace, B, trace_id=Path(args.trace).name)
        th = theta(bits_mid, bits_for(B))
        rec = recommend_representation(stats, th, Fraction(str(args.alpha)))
        parts.append(beta_csv(stats) if not parts else beta_csv(stats).split("\n", 1)[1])
        extra = f" beta_hat={float(rec.beta_hat):.4f} (p{rec.percentile})" if rec.beta_hat else ""
        print(f"B={B}: beta_avg={float(stats.beta_avg):.4f} theta={th} -> {rec.kind.value}{extra}; {rec.reason}")
    if args.out:
        Path(args.out).write_text("".join(parts))
        write_manifest(
            Path(args.out).with_suffix(".manifest.json"),
            "beta",
            {"trace": args.trace, "B": args.B, "alpha": args.alpha, "bits_mid": bits_mid},
            0,
            [args.out],
            started,
        )
    return EXIT_OK


def cmd_mre(args) -> int:
    started = time.monotonic()
    trace = _load_trace(args.trace)
    params = SketchParams.from_guarantees(args.epsilon, args.delta, args.seed if args.seed is not None else default_seed())
    reports = [
        mre_experiment(trace, B, params, fa, pt) for B in args.B for fa in args.fail_at for pt in args.point
    ]
    for r in reports:
        print(
            f"B={r.B} fail_at={r.fail_at} point={r.point}: "
            f"MRE(+B vs non-failed)={r.mre_plus_b_nonfailed:.4f} "
            f"MRE(backup vs non-failed)={r.mre_backup_nonfailed:.4f} one_sided={str(r.one_sided).lower()}"
        )
    if args.out:
        Path(args.out).write_text(mre_csv(reports))
        write_manifest(
            Path(args.out).with_suffix(".manifest.json"),
            "mre",
            {"trace": args.trace, "B": args.B, "fail_at": args.fail_at, "point": args.point,
             "epsilon": args.epsilon, "delta": args.delta},
            params.seed,
            [args.out],
            started,
        )
    return EXIT_OK if all(r.one_sided for r in reports) else EXIT_DOMAIN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sketchguard", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-trace", help="write a seeded Zipf trace")
    p.add_argument("--flows", type=int, required=True)
    p.add_argument("--items", type=int, required=True)
    p.add_argument("--zipf", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--bits-mid", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("matrix", help="print a redundancy matrix and check its spans")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--f", type=int, default=None)
    p.add_argument("--pascal", action="store_true")
    p.add_argument("--check", action="store_true", help="list the f x f minor determinants")
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("plan", help="show a recovery plan or a coverage mapping")
    p.add_argument("--strategy", choices=["dedicated", "distributed"], default="dedicated")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--f", type=int, default=1)
    p.add_argument("--failed", default="", help="comma-separated nodes or references, e.g. D1,R2")
    p.add_argument("--mapping", choices=[m.value for m in MappingKind], default=None)
    p.add_argument("--p", type=int, default=1)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="run the cycle simulation")
    p.add_argument("--config")
    p.add_argument("--trace", required=True)
    p.add_argument("--failures", help="JSON list of [node, cycle, point], inline or in a file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--allow-loss", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k", type=int)
    p.add_argument("--f", type=int)
    p.add_argument("--mapping", choices=[m.value for m in MappingKind])
    p.add_argument("--partition", choices=["single", "rows", "cells"])
    p.add_argument("--p", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--shard", choices=["hash", "round_robin"])
    p.add_argument("--rep", choices=["full", "item_buff", "cnt_buff", "flw_hash", "cnt_hash", "cnt_diff"])
    p.add_argument("--B", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("beta", help="per-batch frequency-per-flow and representation advice")
    p.add_argument("--trace", required=True)
    p.add_argument("--B", type=_int_list, default=[100, 500, 2000])
    p.add_argument("--alpha", type=float, default=0.8)
    p.add_argument("--bits-mid", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_beta)

    p = sub.add_parser("mre", help="error of a backup after a failure inside a batch")
    p.add_argument("--trace", required=True)
    p.add_argument("--B", type=_int_list, default=[100, 500, 2000])
    p.add_argument("--fail-at", type=_float_list, default=[0.5])
    p.add_argument("--point", type=_float_list, default=[0.5])
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mre)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    try:
        if args.command == "gen-trace" and args.seed is None:
            args.seed = default_seed()
        if args.command == "matrix" and args.f is None:
            args.f = args.k
        return args.func(args)
    except (UsageError, SimConfigError, TraceFormatError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
