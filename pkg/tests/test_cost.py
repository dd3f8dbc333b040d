from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sketchguard.batching import (
    INCREMENTAL_KINDS,
    BatchConfig,
    CostParams,
    FullShareMemory,
    OpCounts,
    RepKind,
    ShareCodec,
    SmartCMS,
    cnt_buff_beats_item_buff,
    cost_model,
    full_beats_cnt_buff,
    full_share_bits,
    item_buff_beats_full,
)
from sketchguard.redundancy import PartitionKind, PartitionScheme, build_coverage
from sketchguard.sketch import Sketch, SketchParams


def _p(**kw):
    base = dict(
        d=4, w=100, B=50, fill=50, b=20, c=120, copies=2, dest_rows=(4, 4),
        bits_mid=64, bits_w=7, bits_B=6, bits_N=32, buckets=63,
    )
    base.update(kw)
    return CostParams(**base)


def test_full_share_traffic():
    cost = cost_model("full", _p())
    assert cost.traffic_bits == full_share_bits(2, 4, 100, 32) == 2 * 4 * 100 * 32
    assert cost.extra_space_bits == 0 and cost.membership_tests == 0


def test_hand_computed_incremental_costs():
    p = _p()
    assert cost_model("item_buff", p).traffic_bits == 2 * 50 * 64
    assert cost_model("item_buff", p).remote_ops == 8 * 50
    assert cost_model("flw_hash", p).traffic_bits == 2 * 20 * (64 + 6)
    assert cost_model("flw_hash", p).local_ops == 50
    assert cost_model("cnt_buff", p).traffic_bits == 2 * 4 * 50 * 7
    assert cost_model("cnt_hash", p).traffic_bits == 8 * 6 + 2 * 120 * (7 + 6)
    assert cost_model("cnt_hash", p).local_ops == 4 * 50
    assert cost_model("cnt_diff", p).extra_space_bits == 4 * 100 * 6


def test_membership_tests_by_scheme():
    rows = _p(partition=PartitionKind.ROWS)
    cells = _p(partition=PartitionKind.CELLS)
    assert cost_model("cnt_diff", rows).membership_tests == 4
    assert cost_model("cnt_diff", cells).membership_tests == 120
    assert cost_model("cnt_buff", cells).membership_tests == 4 * 50
    assert cost_model("full", cells).membership_tests == 400
    assert cost_model("item_buff", rows).membership_tests == 0


def test_break_even_helpers_agree_with_the_model():
    # full vs index buffer: one row of w counters against B indices
    w, bits_N, bits_w = 100, 32, 7
    for B in (400, 457, 458, 600):
        p = _p(B=B, fill=B, w=w, copies=1, dest_rows=(4,))
        full, buff = cost_model("full", p).traffic_bits, cost_model("cnt_buff", p).traffic_bits
        assert full_beats_cnt_buff(B, w, bits_N, bits_w) == (full <= buff)
    for B in (100, 200, 400, 401):
        p = _p(B=B, fill=B, copies=2, dest_rows=(4, 4))
        full, items = cost_model("full", p).traffic_bits, cost_model("item_buff", p).traffic_bits
        assert item_buff_beats_full(B, 4, 100, 2, 2, bits_N, 64) == (items <= full)
    assert cnt_buff_beats_item_buff(64, 4, 16) and not cnt_buff_beats_item_buff(64, 4, 17)


PARAMS = SketchParams.from_guarantees(0.1, 0.05, seed=2)
SETUPS = [("dedicated", "single", 1), ("sweet_spot", "rows", 2), ("sweet_spot", "cells", 2), ("clique", "cells", 3)]


@given(
    st.sampled_from(list(RepKind)),
    st.sampled_from(SETUPS),
    st.lists(st.integers(0, 200), min_size=1, max_size=60),
)
def test_model_matches_measured_counts(kind, setup, items):
    mapping_kind, scheme_name, p = setup
    mapping = build_coverage(mapping_kind, 4, 1, p)
    config = BatchConfig(B=len(items), kind=kind, beta_hat=1)
    codec = ShareCodec(PARAMS, config, PartitionScheme(scheme_name, p), mapping)
    fw = SmartCMS(Sketch(PARAMS), config)
    for x in items:
        if fw.update(x):
            break
    ops = OpCounts()
    if kind is RepKind.FULL:
        shares, batch = codec.encode_full(fw.sketch, 1, 0, ops), None
    else:
        shares, batch = codec.encode_batch(fw.batch, 1, 0, ops), fw.batch
    for dest, share in shares.items():
        sums = {part: Sketch(PARAMS.with_counter_bits(64)) for part in range(1, p + 1)}
        codec.apply(share, dest, sums, ops, memory=None if batch else FullShareMemory())
    widths = config.widths(PARAMS)
    pred = cost_model(
        kind,
        CostParams(
            d=PARAMS.d, w=PARAMS.w, B=config.B,
            fill=batch.fill if batch else 0,
            b=batch.distinct_flows if batch and kind.item_based else 0,
            c=batch.modified_counters if batch and not kind.item_based else 0,
            copies=mapping.copies(1, 1),
            dest_rows=tuple(len(codec.dest_rows(d, 1)) for d in mapping.destinations(1)),
            bits_mid=widths.mid, bits_w=widths.w, bits_B=widths.B, bits_N=widths.N,
            buckets=config.buckets, partition=codec.scheme.kind,
        ),
    )
    assert pred.traffic_bits == ops.traffic_bits
    assert pred.membership_tests == ops.membership_tests
    assert pred.remote_ops == ops.remote_hashes
    if batch is not None:
        assert pred.local_ops == fw.local_hashes


@pytest.mark.parametrize("kind", INCREMENTAL_KINDS)
def test_costs_never_negative(kind):
    cost = cost_model(kind, _p(fill=0, b=0, c=0))
    assert min(cost.extra_space_bits, cost.traffic_bits, cost.local_ops, cost.remote_ops) >= 0
