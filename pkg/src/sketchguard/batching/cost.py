"""Closed-form cost of sharing one batch.

Traffic counts payload bits only (headers are fixed overhead). Operation
counts cover work beyond the ``d`` hash evaluations of a plain CMS update:
local hash-table insertions, hash evaluations at receivers and partition
membership tests on either side.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..redundancy.partition import PartitionKind
from .config import RepKind


@dataclass(frozen=True)
class CostParams:
    """``dest_rows[i]`` is the number of sketch rows destination ``i`` covers for the sender."""

    d: int
    w: int
    B: int
    fill: int
    b: int
    c: int
    copies: int
    dest_rows: tuple[int, ...]
    bits_mid: int
    bits_w: int
    bits_B: int
    bits_N: int
    buckets: int
    partition: PartitionKind = PartitionKind.SINGLE

    @property
    def r_c(self) -> int:
        return len(self.dest_rows)


@dataclass(frozen=True)
class Cost:
    extra_space_bits: int
    traffic_bits: int
    local_ops: int
    remote_ops: int
    membership_tests: int


def cost_model(kind: RepKind | str, p: CostParams) -> Cost:
    kind = RepKind(kind)
    rows_total = sum(p.dest_rows)
    cells = p.partition is PartitionKind.CELLS
    rows = p.partition is PartitionKind.ROWS
    if kind is RepKind.FULL:
        tests = p.d * p.w if cells else p.d if rows else 0
        return Cost(0, p.copies * p.d * p.w * p.bits_N, 0, 0, tests)
    if kind is RepKind.ITEM_BUFF:
        remote = rows_total * p.fill
        return Cost(p.B * p.bits_mid, p.r_c * p.fill * p.bits_mid, 0, remote, remote if cells else 0)
    if kind is RepKind.FLW_HASH:
        remote = rows_total * p.b
        return Cost(
            p.buckets * (p.bits_mid + p.bits_B),
            p.r_c * p.b * (p.bits_mid + p.bits_B),
            p.fill,
            remote,
            remote if cells else 0,
        )
    if kind is RepKind.CNT_BUFF:
        traffic = p.copies * p.d * p.fill * p.bits_w
        if cells:
            # variable encoding adds a per-row element count
            traffic += rows_total * p.bits_B
        tests = p.d * p.fill if cells else p.d if rows else 0
        return Cost(p.d * p.B * p.bits_w, traffic, 0, 0, tests)
    traffic = rows_total * p.bits_B + p.copies * p.c * (p.bits_w + p.bits_B)
    tests = p.c if cells else p.d if rows else 0
    if kind is RepKind.CNT_HASH:
        return Cost(p.d * p.buckets * (p.bits_w + p.bits_B), traffic, p.d * p.fill, 0, tests)
    return Cost(p.d * p.w * p.bits_B, traffic, 0, 0, tests)


def full_share_bits(copies: int, d: int, w: int, bits_N: int) -> int:
    return copies * d * w * bits_N


def full_beats_cnt_buff(B: int, w: int, bits_N: int, bits_w: int) -> bool:
    """Per row, a full share (``w*bits_N``) is no larger than ``B`` indices."""
    return B >= Fraction(w * bits_N, bits_w)


def item_buff_beats_full(B: int, d: int, w: int, f: int, r_c: int, bits_N: int, bits_mid: int) -> bool:
    return B <= d * w * Fraction(f, r_c) * Fraction(bits_N, bits_mid)


def cnt_buff_beats_item_buff(bits_mid: int, d: int, bits_w: int) -> bool:
    """With ``r_c = f``, the index buffer sends fewer bits only when ``bits_mid >= d*bits_w``."""
    return bits_mid >= d * bits_w
