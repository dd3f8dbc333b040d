from __future__ import annotations

import csv
import io
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sketchguard.analysis import (
    PERCENTILES,
    BetaStats,
    beta_csv,
    beta_stats,
    mre_csv,
    mre_experiment,
    nearest_rank,
    recommend_representation,
    space_efficient,
    theta,
    theta_prime,
    traffic_efficient,
)
from sketchguard.batching import RepKind
from sketchguard.sketch import SketchParams
from sketchguard.traces import zipf_trace


def test_nearest_rank():
    values = list(range(1, 21))
    assert nearest_rank(values, 5) == 1
    assert nearest_rank(values, 50) == 10
    assert nearest_rank(values, 95) == 19
    assert nearest_rank([7], 95) == 7
    with pytest.raises(ValueError):
        nearest_rank([], 50)


@given(st.lists(st.integers(0, 30), min_size=1, max_size=300), st.integers(1, 50))
def test_beta_lies_between_one_and_B(trace, B):
    if len(trace) < B:
        with pytest.raises(ValueError):
            beta_stats(trace, B)
        return
    stats = beta_stats(trace, B)
    assert len(stats.betas) == len(trace) // B
    assert all(1 <= beta <= B for beta in stats.betas)
    assert min(stats.betas) <= stats.beta_avg <= max(stats.betas)
    values = [stats.percentile(p) for p in PERCENTILES]
    assert values == sorted(values)


def test_beta_is_batch_size_over_distinct_flows():
    stats = beta_stats([1, 1, 2, 2, 3, 4, 5, 6, 7], 4)
    assert stats.distinct == (2, 4)
    assert stats.betas == (Fraction(2), Fraction(1))
    assert stats.beta_avg == Fraction(3, 2)
    assert stats.remainder == 1


def test_theta_examples():
    assert theta(64, 16) == Fraction(5, 4)
    assert theta(128, 32) == Fraction(5, 4)
    assert theta_prime(16, 16) == 2
    with pytest.raises(ValueError):
        theta(0, 8)


def test_efficiency_conditions():
    th = Fraction(5, 4)
    assert traffic_efficient(Fraction(3, 2), Fraction(2), th)
    assert not traffic_efficient(Fraction(1), Fraction(2), th)
    assert not traffic_efficient(Fraction(3), Fraction(2), th)
    assert space_efficient(Fraction(2), th, "0.8")
    assert not space_efficient(Fraction(3, 2), th, "0.8")


@given(st.fractions(1, 10), st.fractions(1, 3), st.sampled_from(["0.5", "0.6", "0.7", "0.8", "0.9", "1"]))
def test_space_efficiency_is_easier_with_a_higher_load(beta, th, alpha):
    if space_efficient(beta, th, alpha):
        assert space_efficient(beta, th, "1")


def _stats(betas, B=1000):
    return BetaStats(B=B, betas=tuple(Fraction(b) for b in betas), distinct=tuple(B // b for b in betas), n_items=B * len(betas), n_flows=0)


def test_small_batches_use_a_standard_table():
    rec = recommend_representation(_stats([2, 2], B=100), Fraction(5, 4))
    assert rec.kind is RepKind.FLW_HASH and rec.standard_table and rec.capacity == 200


def test_low_repetition_prefers_the_item_buffer():
    rec = recommend_representation(_stats([1, 1, 1, 2]), Fraction(5, 4))
    assert rec.kind is RepKind.ITEM_BUFF


def test_lowest_adequate_percentile_is_chosen():
    rec = recommend_representation(_stats([1] * 10 + [2] * 30 + [4] * 60), Fraction(5, 4))
    assert rec.kind is RepKind.FLW_HASH
    assert rec.percentile == 25 and rec.beta_hat == 2
    assert rec.early_transmission == Fraction(10, 100)


def test_no_adequate_percentile_falls_back():
    rec = recommend_representation(_stats([Fraction(3, 2)] * 10), Fraction(5, 4))
    assert rec.kind is RepKind.ITEM_BUFF


PARAMS = SketchParams.from_guarantees(0.01, 0.01, seed=9)
TRACE = zipf_trace(2000, 20000, s=1.0, seed=6)


def test_no_lost_items_means_no_error_against_the_failure_free_sketch():
    r = mre_experiment(TRACE, 500, PARAMS, fail_at=0.5, point=0.0)
    assert r.lost_items == 0
    assert r.mre_backup_nonfailed == 0
    assert r.one_sided and r.one_sided_backup


@pytest.mark.parametrize("point", [0.1, 0.5, 1.0])
def test_adding_B_keeps_estimates_one_sided(point):
    r = mre_experiment(TRACE, 500, PARAMS, fail_at=0.4, point=point)
    assert r.one_sided
    assert r.lost_items == int(point * 500)
    assert r.mre_backup_nonfailed > 0


def test_error_grows_with_lost_items():
    errs = [mre_experiment(TRACE, 500, PARAMS, 0.4, p).mre_backup_nonfailed for p in (0.1, 0.5, 1.0)]
    assert errs == sorted(errs)


def test_mre_rejects_bad_inputs():
    with pytest.raises(ValueError):
        mre_experiment(TRACE, 500, PARAMS, fail_at=1.0, point=0.5)
    with pytest.raises(ValueError):
        mre_experiment(TRACE[:10], 500, PARAMS, fail_at=0.0, point=0.5)


def test_csv_outputs():
    stats = beta_stats(TRACE, 1000, trace_id="z")
    rows = list(csv.reader(io.StringIO(beta_csv(stats))))
    assert rows[0][:5] == ["trace", "B", "batch", "distinct", "beta"]
    assert len(rows) == 1 + 20 + 1 and rows[-1][2] == "summary"
    reports = [mre_experiment(TRACE, 500, PARAMS, 0.4, p) for p in (0.2, 0.6)]
    assert len(list(csv.reader(io.StringIO(mre_csv(reports))))) == 3


@given(st.lists(st.integers(0, 40), min_size=10, max_size=400), st.integers(1, 10))
def test_beta_stats_composition(trace, B):
    stats = beta_stats(trace, B)
    assert B * len(stats.betas) + stats.remainder == len(trace)
    assert sum(stats.distinct) >= len(set(trace[: B * len(stats.betas)]))


def test_mre_is_deterministic():
    a = mre_experiment(TRACE, 500, PARAMS, 0.3, 0.7)
    assert a == mre_experiment(TRACE, 500, PARAMS, 0.3, 0.7)
