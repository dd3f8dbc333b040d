"""Desk-scale measurements: per-batch frequency-per-flow, representation advice,
and the error of backups after a failure.

Percentiles are nearest-rank over the sorted per-batch values: the ``P``-th
percentile of ``n`` values is the ``ceil(P/100 * n)``-th smallest.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .batching.config import RepKind, as_fraction
from .sketch import SketchParams, hash_family

PERCENTILES = (5, 25, 50, 75, 95)


def nearest_rank(sorted_values: Sequence, pct: float):
    if not sorted_values:
        raise ValueError("no values")
    rank = max(1, math.ceil(Fraction(str(pct)) / 100 * len(sorted_values)))
    return sorted_values[rank - 1]


@dataclass(frozen=True)
class BetaStats:
    B: int
    betas: tuple[Fraction, ...]
    distinct: tuple[int, ...]
    n_items: int
    n_flows: int
    remainder: int = 0
    trace_id: str = ""
    percentiles: dict[int, Fraction] = field(default_factory=dict)

    @property
    def beta_avg(self) -> Fraction:
        return sum(self.betas, Fraction(0)) / len(self.betas)

    def percentile(self, pct: int) -> Fraction:
        if pct in self.percentiles:
            return self.percentiles[pct]
        return nearest_rank(sorted(self.betas), pct)

    @classmethod
    def from_betas(cls, B: int, betas: Iterable, trace_id: str = "") -> BetaStats:
        """Stats from bare per-batch values, for hand-built scenarios."""
        vals = tuple(as_fraction(b) if not isinstance(b, int) else Fraction(b) for b in betas)
        if not vals:
            raise ValueError("at least one batch is required")
        ordered = sorted(vals)
        pcts = {p: nearest_rank(ordered, p) for p in PERCENTILES}
        distinct = tuple(int(B / b) for b in vals)
        return cls(B, vals, distinct, B * len(vals), max(distinct), 0, trace_id, pcts)


def beta_stats(trace: Sequence[int], B: int, trace_id: str = "") -> BetaStats:
    """Split ``trace`` into consecutive batches of ``B`` and compute ``B / b`` per batch.

    A trailing partial batch is counted in the totals but not in the values.
    """
    if B < 1:
        raise ValueError("batch size must be positive")
    if not trace:
        raise ValueError("empty trace")
    full = len(trace) // B
    if full == 0:
        raise ValueError(f"trace of {len(trace)} items is shorter than one batch of {B}")
    betas, distinct = [], []
    for i in range(full):
        b = len(set(trace[i * B : (i + 1) * B]))
        distinct.append(b)
        betas.append(Fraction(B, b))
    ordered = sorted(betas)
    return BetaStats(
        B=B,
        betas=tuple(betas),
        distinct=tuple(distinct),
        n_items=len(trace),
        n_flows=len(set(trace)),
        remainder=len(trace) - full * B,
        trace_id=trace_id,
        percentiles={p: nearest_rank(ordered, p) for p in PERCENTILES},
    )


def theta(bits_mid: int, bits_B: int) -> Fraction:
    """Element-size ratio of a flow table entry to a buffered identifier."""
    if bits_mid < 1 or bits_B < 1:
        raise ValueError("widths must be positive")
    return Fraction(bits_mid + bits_B, bits_mid)


def theta_prime(bits_w: int, bits_B: int) -> Fraction:
    """Same ratio for index tables against index buffers."""
    if bits_w < 1 or bits_B < 1:
        raise ValueError("widths must be positive")
    return 1 + Fraction(bits_B, bits_w)


@dataclass(frozen=True)
class Recommendation:
    kind: RepKind
    beta_hat: Fraction | None = None
    percentile: int | None = None
    early_transmission: Fraction = Fraction(0)
    standard_table: bool = False
    capacity: int | None = None
    reason: str = ""


def traffic_efficient(beta_hat: Fraction, beta_avg: Fraction, th: Fraction) -> bool:
    return th <= beta_hat <= beta_avg


def space_efficient(beta_hat: Fraction, th: Fraction, alpha) -> bool:
    return beta_hat > th / as_fraction(alpha)


def recommend_representation(stats: BetaStats, th: Fraction, alpha: float | Fraction = 0.8) -> Recommendation:
    """Pick an item buffer or a flow table sized from the lowest adequate percentile."""
    if stats.B <= 100:
        return Recommendation(
            RepKind.FLW_HASH,
            standard_table=True,
            capacity=2 * stats.B,
            reason="small batches: a standard table of capacity 2B",
        )
    avg = stats.beta_avg
    if avg < th:
        return Recommendation(RepKind.ITEM_BUFF, reason=f"beta_avg {avg} is below theta {th}")
    for pct in PERCENTILES:
        bh = stats.percentile(pct)
        if traffic_efficient(bh, avg, th) and space_efficient(bh, th, alpha):
            early = Fraction(sum(1 for b in stats.betas if b < bh), len(stats.betas))
            return Recommendation(
                RepKind.FLW_HASH,
                beta_hat=bh,
                percentile=pct,
                early_transmission=early,
                reason=f"percentile {pct} is traffic- and space-efficient",
            )
    return Recommendation(RepKind.ITEM_BUFF, reason="no percentile is both traffic- and space-efficient")


@dataclass(frozen=True)
class MreReport:
    B: int
    fail_at: float
    point: float
    failed_batch: int
    lost_items: int
    flows: int
    mre_plus_b_truth: float
    mre_backup_truth: float
    mre_plus_b_nonfailed: float
    mre_backup_nonfailed: float
    mre_nonfailed_truth: float
    one_sided: bool
    one_sided_backup: bool

    CSV_COLUMNS = (
        "B",
        "fail_at",
        "point",
        "failed_batch",
        "lost_items",
        "flows",
        "mre_plus_b_truth",
        "mre_backup_truth",
        "mre_plus_b_nonfailed",
        "mre_backup_nonfailed",
        "mre_nonfailed_truth",
        "one_sided",
        "one_sided_backup",
    )


def _mre(est: np.ndarray, ref: np.ndarray) -> float:
    return float(np.mean(np.abs(est - ref) / ref))


def mre_experiment(
    trace: Sequence[int], B: int, params: SketchParams, fail_at: float, point: float
) -> MreReport:
    """Emulate a failure inside batch ``floor(fail_at * batches)`` after ``point * B`` of its items.

    The backup holds every earlier batch; the lost items form the difference
    matrix of the failed batch. Relative errors are taken over every flow seen
    up to the failure, against the exact count and against the estimator that
    would have existed without the failure.
    """
    if not 0 <= fail_at < 1 or not 0 <= point <= 1:
        raise ValueError("fail_at must be in [0, 1) and point in [0, 1]")
    batches = len(trace) // B
    if batches < 1:
        raise ValueError(f"trace of {len(trace)} items is shorter than one batch of {B}")
    t = int(fail_at * batches)
    start = t * B
    lost = int(point * B)
    seen = trace[: start + lost]
    if not seen:
        raise ValueError("failure happens before any item arrives")
    fam = hash_family(params.seed, params.d, params.w)
    backup = np.zeros((params.d, params.w), dtype=np.int64)
    diff = np.zeros_like(backup)
    rows = np.arange(params.d)
    for x, n in Counter(trace[:start]).items():
        backup[rows, fam.indices(x)] += n
    for x, n in Counter(trace[start : start + lost]).items():
        diff[rows, fam.indices(x)] += n
    truth = Counter(seen)
    flows = sorted(truth)
    idx = np.array([fam.indices(x) for x in flows], dtype=np.int64)
    c = np.array([truth[x] for x in flows], dtype=np.int64)
    est_backup = backup[rows, idx].min(axis=1)
    est_nonfailed = (backup + diff)[rows, idx].min(axis=1)
    plus_b = est_backup + B
    nonzero = est_nonfailed > 0
    return MreReport(
        B=B,
        fail_at=fail_at,
        point=point,
        failed_batch=t,
        lost_items=lost,
        flows=len(flows),
        mre_plus_b_truth=_mre(plus_b, c),
        mre_backup_truth=_mre(est_backup, c),
        mre_plus_b_nonfailed=_mre(plus_b[nonzero], est_nonfailed[nonzero]),
        mre_backup_nonfailed=_mre(est_backup[nonzero], est_nonfailed[nonzero]),
        mre_nonfailed_truth=_mre(est_nonfailed, c),
        one_sided=bool((c <= plus_b).all()),
        one_sided_backup=bool((c <= est_backup).all()),
    )


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(float(v))
    return str(v)


def beta_csv(stats: BetaStats) -> str:
    """One row per full batch, then a summary row with the mean and percentiles."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trace", "B", "batch", "distinct", "beta", "beta_avg"] + [f"p{p}" for p in PERCENTILES])
    for i, (b, beta) in enumerate(zip(stats.distinct, stats.betas)):
        w.writerow([stats.trace_id, stats.B, i, b, _fmt(beta), "", *[""] * len(PERCENTILES)])
    w.writerow(
        [stats.trace_id, stats.B, "summary", sum(stats.distinct), "", _fmt(stats.beta_avg)]
        + [_fmt(stats.percentile(p)) for p in PERCENTILES]
    )
    return buf.getvalue()


def mre_csv(reports: Iterable[MreReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MreReport.CSV_COLUMNS)
    for r in reports:
        d = asdict(r)
        w.writerow([d[c] for c in MreReport.CSV_COLUMNS])
    return buf.getvalue()
