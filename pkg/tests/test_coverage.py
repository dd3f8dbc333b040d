from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sketchguard.redundancy import (
    CoverageMapping,
    MappingKind,
    PartitionScheme,
    R,
    D,
    RecoveryStatus,
    build_coverage,
    mapping_stats,
    split_sizes,
)


def test_sweet_spot_four_nodes_matches_the_ring():
    m = build_coverage("sweet_spot", 4)
    got = {(sp.holder, sp.partition): set(sp.members) for sp in m.sumparts}
    assert got == {(4, 1): {1, 2}, (3, 2): {1, 4}, (1, 2): {2, 3}, (2, 1): {3, 4}}


@pytest.mark.parametrize(
    "kind,space,recovery",
    [
        ("clique", Fraction(8, 3), {Fraction(8, 3)}),
        ("imbalanced_space", Fraction(2), {Fraction(8, 3), Fraction(10, 3)}),
        ("sweet_spot", Fraction(2), {Fraction(3)}),
    ],
)
def test_mapping_costs(kind, space, recovery):
    stats = mapping_stats(build_coverage(kind, 4))
    assert stats.space == space
    assert set(stats.recovery_sketches.values()) == recovery


def test_dedicated_costs_one_sketch_per_parity():
    stats = mapping_stats(build_coverage("dedicated", 4, 1))
    assert stats.space == 1
    assert stats.recovery_sketches[1] == 4


@pytest.mark.parametrize("kind", ["clique", "imbalanced_space", "sweet_spot"])
def test_any_single_failure_recovers(kind):
    m = build_coverage(kind, 4)
    for node in m.data_nodes:
        for part in range(1, m.p + 1):
            assert m.plan_partition(part, {node}).status is RecoveryStatus.EXACT


def test_sweet_spot_recovery_relation():
    m = build_coverage("sweet_spot", 4)
    plan = m.plan_partition(1, {1})
    assert plan.coefficients("D1") == {R(4): 1, D(2): -1}


@pytest.mark.parametrize("k", [6, 8])
def test_larger_sweet_spot_rings(k):
    m = build_coverage("sweet_spot", k)
    assert mapping_stats(m).space == k // 2
    for node in m.data_nodes:
        for part in (1, 2):
            assert m.plan_partition(part, {node}).status is RecoveryStatus.EXACT


def test_odd_sweet_spot_is_rejected():
    with pytest.raises(ValueError):
        build_coverage("sweet_spot", 5)


def test_no_self_coverage():
    with pytest.raises(ValueError):
        CoverageMapping.from_dict(
            {"kind": "clique", "strategy": "distributed", "k": 2, "f": 1, "p": 1,
             "sumparts": [{"holder": 1, "partition": 1, "coeffs": {"1": 1, "2": 1}}]}
        )


@pytest.mark.parametrize("kind", list(MappingKind))
def test_json_round_trip(kind):
    m = build_coverage(kind, 4, 1, 3 if kind in (MappingKind.CLIQUE, MappingKind.IMBALANCED_SPACE) else 1)
    assert CoverageMapping.from_dict(__import__("json").loads(m.to_json())) == m


@given(st.integers(1, 200), st.integers(1, 20))
def test_split_sizes(n, p):
    sizes = split_sizes(n, p)
    assert sum(sizes) == n and max(sizes) - min(sizes) <= 1 and sizes == sorted(sizes, reverse=True)


@given(st.sampled_from(["rows", "cells"]), st.integers(1, 5), st.integers(1, 5), st.integers(1, 30))
def test_partition_layout_is_contiguous(kind, p, d, w):
    scheme = PartitionScheme(kind, p)
    if (kind == "rows" and p > d) or p > d * w:
        with pytest.raises(ValueError):
            scheme.layout(d, w)
        return
    flat = scheme.layout(d, w).ravel()
    assert list(flat) == sorted(flat)
    assert set(flat) == set(range(1, p + 1))
    for part in range(1, p + 1):
        assert scheme.rows_of(part, d, w) == tuple(sorted({i // w for i in np.flatnonzero(flat == part)}))


def test_single_scheme_has_one_partition():
    with pytest.raises(ValueError):
        PartitionScheme("single", 2)
