from __future__ import annotations

import csv
import io
import json
from itertools import combinations

import pytest

from sketchguard.batching import BatchConfig
from sketchguard.simnet import (
    FailureScript,
    ShardPolicy,
    SimConfig,
    SimConfigError,
    cycle_slices,
    run,
    shard_of,
)
from sketchguard.traces import zipf_trace

TRACE = zipf_trace(300, 6000, s=1.1, seed=4)


def _cfg(**kw) -> SimConfig:
    base = dict(k=4, f=1, epsilon=0.1, delta=0.05, sketch_seed=1, q=6, seed=2, batch=BatchConfig(B=40))
    base.update(kw)
    return SimConfig(**base)


def test_runs_are_deterministic():
    cfg = _cfg(mapping="sweet_spot", partition="rows")
    script = FailureScript.of((2, 3, 0.4))
    assert run(cfg, TRACE, script).to_json() == run(cfg, TRACE, script).to_json()


@pytest.mark.parametrize("kind", ["full", "item_buff", "flw_hash", "cnt_buff", "cnt_hash", "cnt_diff"])
@pytest.mark.parametrize(
    "mapping,partition", [("dedicated", "single"), ("sweet_spot", "rows"), ("clique", "cells"), ("imbalanced_space", "rows")]
)
def test_failure_free_runs_keep_sums_consistent_and_costs_exact(kind, mapping, partition):
    report = run(_cfg(mapping=mapping, partition=partition, batch=BatchConfig(B=40, kind=kind)), TRACE)
    assert report.cost_check.exact
    assert report.cost_check.events > 0
    assert not report.recoveries


def test_sum_sketches_do_not_depend_on_the_representation():
    digests = {
        kind: run(_cfg(mapping="sweet_spot", partition="cells", batch=BatchConfig(B=40, kind=kind)), TRACE).sum_digests
        for kind in ("full", "item_buff", "cnt_diff")
    }
    assert len({json.dumps(d, sort_keys=True) for d in digests.values()}) == 1


@pytest.mark.parametrize("node", [1, 2, 3, 4])
def test_sweet_spot_recovers_each_single_failure(node):
    report = run(_cfg(mapping="sweet_spot", partition="rows"), TRACE, FailureScript.of((node, 2, 0.5)))
    (rec,) = report.recoveries
    assert rec.status == "exact" and rec.verified


@pytest.mark.parametrize("pair", list(combinations(range(1, 5), 2)))
def test_distributed_recovers_every_pair(pair):
    script = FailureScript.of(*((n, 1, 0.3) for n in pair))
    report = run(_cfg(mapping="distributed"), TRACE, script)
    (rec,) = report.recoveries
    assert rec.status == "exact" and rec.verified


def test_three_distributed_failures_are_unrecoverable():
    report = run(_cfg(mapping="distributed"), TRACE, FailureScript.of((1, 1), (2, 1), (3, 1)))
    assert report.unrecoverable
    assert report.lost_nodes == [1, 2, 3]


def test_dedicated_parity_and_data_failure():
    report = run(_cfg(f=2), TRACE, FailureScript.of((1, 4, 0.9), (5, 4, 0.1)))
    (rec,) = report.recoveries
    assert rec.status == "exact" and rec.verified


@pytest.mark.parametrize("point", [0.0, 0.25, 0.75, 1.0])
def test_items_lost_stay_below_one_batch(point):
    report = run(_cfg(batch=BatchConfig(B=25)), TRACE, FailureScript.of((3, 2, point)))
    (rec,) = report.recoveries
    assert 0 <= rec.items_lost <= 25
    if point == 0.0:
        assert rec.items_lost == 0


def test_idle_cycles_send_alive_shares():
    report = run(_cfg(q=3, k=4), [1, 2, 3], FailureScript())
    assert report.cost_check.exact
    assert all(c.shares > 0 for c in report.cycles)


def test_report_serialisation():
    report = run(_cfg(mapping="sweet_spot", partition="rows"), TRACE, FailureScript.of((1, 2)))
    doc = json.loads(report.to_json())
    assert doc["cost_check"]["exact"] is True
    assert doc["failures"] == [[1, 2, 0.5]]
    rows = list(csv.reader(io.StringIO(report.to_csv())))
    assert rows[0][0] == "cycle" and len(rows) == 1 + 6
    assert rows[3][10] == "1"


def test_config_round_trip():
    cfg = _cfg(mapping="clique", partition="cells", shard="round_robin")
    assert SimConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    assert cfg.p == 3


@pytest.mark.parametrize(
    "kw",
    [dict(q=0), dict(mapping="clique", partition="single"), dict(mapping="sweet_spot", p=3), dict(mapping="distributed", strategy="dedicated")],
)
def test_config_errors(kw):
    with pytest.raises(SimConfigError):
        _cfg(**kw)


def test_unknown_config_field():
    with pytest.raises(SimConfigError):
        SimConfig.from_dict({"k": 4, "colour": "red"})


@pytest.mark.parametrize("script", [FailureScript.of((9, 1)), FailureScript.of((1, 7)), FailureScript.of((1, 1, 2.0)), FailureScript.of((1, 1), (1, 1))])
def test_script_errors(script):
    with pytest.raises(SimConfigError):
        run(_cfg(), TRACE, script)


def test_slices_cover_the_trace():
    slices = cycle_slices(list(range(103)), 10)
    assert slices[0][0] == 0 and slices[-1][1] == 103
    assert all(a[1] == b[0] for a, b in zip(slices, slices[1:]))


def test_sharding():
    assert [shard_of(x, i, 3, ShardPolicy.ROUND_ROBIN, 0) for i, x in enumerate([9, 9, 9, 9])] == [1, 2, 3, 1]
    hashed = {shard_of(x, 0, 4, ShardPolicy.HASH, 5) for x in range(200)}
    assert hashed == {1, 2, 3, 4}
    assert shard_of(12, 0, 4, ShardPolicy.HASH, 5) == shard_of(12, 99, 4, ShardPolicy.HASH, 5)


@pytest.mark.parametrize("kind", ["item_buff", "flw_hash"])
@pytest.mark.parametrize("partition", ["rows", "cells"])
def test_costs_stay_exact_when_a_holder_is_down(kind, partition):
    cfg = _cfg(mapping="sweet_spot", partition=partition, batch=BatchConfig(B=40, kind=kind))
    report = run(cfg, TRACE, FailureScript.of((2, 3, 0.5)))
    assert report.cost_check.exact
