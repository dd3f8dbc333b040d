from __future__ import annotations

from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sketchguard.batching import (
    INCREMENTAL_KINDS,
    BatchConfig,
    CapacityExceededError,
    RepKind,
    SmartCMS,
    make_representation,
)
from sketchguard.sketch import Sketch, SketchParams

PARAMS = SketchParams.from_guarantees(0.1, 0.05, seed=8)
streams = st.lists(st.integers(0, 60), min_size=1, max_size=80)


def test_config_derivations():
    cfg = BatchConfig(B=100, kind="flw_hash", alpha="0.8", beta_hat="2.5")
    assert cfg.bits_B == 7
    assert cfg.b_hat == 40
    assert cfg.buckets == 50
    assert cfg.table_limit == 40


@pytest.mark.parametrize(
    "kwargs",
    [dict(B=0), dict(B=4, bits_mid=16), dict(B=4, alpha=0), dict(B=4, alpha=1.5), dict(B=4, beta_hat=0.5), dict(B=4, local_B=5)],
)
def test_config_rejects(kwargs):
    with pytest.raises(ValueError):
        BatchConfig(**kwargs)


@pytest.mark.parametrize("kind", INCREMENTAL_KINDS)
def test_batch_of_one_triggers_on_first_arrival(kind):
    fw = SmartCMS(Sketch(PARAMS), BatchConfig(B=1, kind=kind))
    assert fw.update(42)


@pytest.mark.parametrize("kind", INCREMENTAL_KINDS)
def test_recording_past_capacity_is_an_error(kind):
    rep = make_representation(PARAMS.d, PARAMS.w, BatchConfig(B=1, kind=kind))
    rep.record(1, [0] * PARAMS.d)
    with pytest.raises(CapacityExceededError):
        rep.record(2, [0] * PARAMS.d)


def test_item_buff_keeps_duplicates_in_order():
    fw = SmartCMS(Sketch(PARAMS), BatchConfig(B=8, kind="item_buff"))
    for x in (3, 1, 3):
        fw.update(x)
    assert fw.batch.items == [3, 1, 3]
    assert fw.batch.flows() == {3: 2, 1: 1}


def test_flow_table_aggregates_and_counts_one_insertion_per_arrival():
    fw = SmartCMS(Sketch(PARAMS), BatchConfig(B=10, kind="flw_hash"))
    for x in (4, 4, 4, 9):
        fw.update(x)
    assert fw.batch.flows() == {4: 3, 9: 1}
    assert fw.local_hashes == 4


def test_flow_table_adds_to_the_stored_estimate():
    sketch = Sketch(PARAMS)
    sketch.update(77, 10)
    fw = SmartCMS(sketch, BatchConfig(B=10, kind="flw_hash"))
    for _ in range(3):
        fw.update(77)
    assert fw.query(77) >= 13


def test_flow_table_saturates_at_the_load_threshold():
    cfg = BatchConfig(B=10, kind="flw_hash", alpha="0.5", beta_hat=2)
    fw = SmartCMS(Sketch(PARAMS), cfg)
    fired = [fw.update(x) for x in range(cfg.table_limit)]
    assert fired[-1] and not any(fired[:-1])


@given(streams, st.integers(1, 40))
def test_counter_buffer_rows_hold_one_index_per_arrival(xs, B):
    fw = SmartCMS(Sketch(PARAMS), BatchConfig(B=B, kind="cnt_buff"))
    for x in xs[:B]:
        fw.update(x)
    for row in range(PARAMS.d):
        assert len(fw.batch.columns(row)) == fw.fill
        assert sum(delta for _, delta in fw.batch.row_elements(row)) == fw.fill


@given(st.sampled_from(INCREMENTAL_KINDS), streams, streams)
def test_smart_query_never_underestimates(kind, before, during):
    fw = SmartCMS(Sketch(PARAMS), BatchConfig(B=len(during), kind=kind, beta_hat=1))
    fw.sketch.update_many(before)
    for x in during:
        if fw.update(x) and x is not during[-1]:
            fw.flush()
    truth = Counter(before) + Counter(during)
    for x in truth:
        assert fw.query(x) >= truth[x]


@given(st.sampled_from(INCREMENTAL_KINDS), streams)
def test_flush_matches_a_plain_sketch(kind, xs):
    plain = Sketch(PARAMS)
    plain.update_many(xs)
    fw = SmartCMS(Sketch(PARAMS), BatchConfig(B=len(xs), kind=kind))
    for x in xs:
        if fw.update(x):
            fw.flush()
    fw.flush()
    assert fw.sketch == plain
    assert fw.batch.empty


@given(st.sampled_from(INCREMENTAL_KINDS), streams)
def test_all_representations_agree_on_cell_deltas(kind, xs):
    cfg = BatchConfig(B=len(xs), kind=kind, beta_hat=1, alpha=1)
    rep = make_representation(PARAMS.d, PARAMS.w, cfg)
    ref = make_representation(PARAMS.d, PARAMS.w, BatchConfig(B=len(xs), kind="cnt_diff"))
    hashes = Sketch(PARAMS).hashes
    for x in xs:
        if rep.saturated:
            break
        rep.record(x, hashes.indices(x))
        ref.record(x, hashes.indices(x))
    assert rep.cell_deltas(hashes.indices) == ref.cell_deltas(hashes.indices)


def test_full_policy_updates_directly():
    fw = SmartCMS(Sketch(PARAMS), BatchConfig(B=5, kind="full"))
    assert not fw.update(1)
    assert fw.sketch.query(1) == 1 and fw.flush() is None


def test_fraction_inputs_are_exact():
    assert BatchConfig(B=3, alpha=Fraction(2, 3)).buckets == 5
