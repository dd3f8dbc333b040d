"""Coverage mappings: which holder keeps which sum-partition of which data nodes."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .generation import D, GenerationMatrix, R, RecoveryPlan, Ref, Strategy, solve_erasures


class MappingKind(str, enum.Enum):
    DEDICATED = "dedicated"
    DISTRIBUTED = "distributed"
    CLIQUE = "clique"
    IMBALANCED_SPACE = "imbalanced_space"
    SWEET_SPOT = "sweet_spot"


@dataclass(frozen=True)
class SumPart:
    """Partition ``partition`` of ``sum(coeff * D_node)``, stored at ``holder``."""

    holder: int
    partition: int
    coeffs: tuple[tuple[int, int], ...]

    def coeff(self, node: int) -> int:
        return dict(self.coeffs).get(node, 0)

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.coeffs)

    def vector(self, k: int) -> list[int]:
        c = dict(self.coeffs)
        return [c.get(j, 0) for j in range(1, k + 1)]


def _sumpart(holder: int, partition: int, coeffs: dict[int, int]) -> SumPart:
    return SumPart(holder, partition, tuple(sorted((n, c) for n, c in coeffs.items() if c)))


@dataclass(frozen=True)
class CoverageMapping:
    kind: MappingKind
    strategy: Strategy
    k: int
    f: int
    p: int
    sumparts: tuple[SumPart, ...]

    def __post_init__(self) -> None:
        seen = set()
        for sp in self.sumparts:
            if not 1 <= sp.partition <= self.p:
                raise ValueError(f"partition {sp.partition} outside 1..{self.p}")
            if (sp.holder, sp.partition) in seen:
                raise ValueError(f"holder {sp.holder} keeps two sums of partition {sp.partition}")
            seen.add((sp.holder, sp.partition))
            if self.strategy is Strategy.DISTRIBUTED and sp.holder in sp.members:
                raise ValueError(f"node {sp.holder} covers its own data")
            if any(c < 0 for _, c in sp.coeffs):
                raise ValueError("coefficients must be non-negative")
        for node in self.data_nodes:
            for part in range(1, self.p + 1):
                if len(self.covering(node, part)) < self.f:
                    raise ValueError(f"partition {part} of node {node} has fewer than {self.f} covers")

    @property
    def data_nodes(self) -> tuple[int, ...]:
        return tuple(range(1, self.k + 1))

    @property
    def redundant_nodes(self) -> tuple[int, ...]:
        return tuple(sorted({sp.holder for sp in self.sumparts}))

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.data_nodes) | set(self.redundant_nodes)))

    def held_by(self, holder: int) -> list[SumPart]:
        return [sp for sp in self.sumparts if sp.holder == holder]

    def sumpart_at(self, holder: int, partition: int) -> SumPart | None:
        return next((sp for sp in self.held_by(holder) if sp.partition == partition), None)

    def covering(self, node: int, partition: int) -> list[tuple[int, int]]:
        return [
            (sp.holder, sp.coeff(node))
            for sp in self.sumparts
            if sp.partition == partition and sp.coeff(node)
        ]

    def destinations(self, node: int) -> tuple[int, ...]:
        return tuple(sorted({sp.holder for sp in self.sumparts if sp.coeff(node)}))

    def covered_partitions(self, holder: int, node: int) -> tuple[int, ...]:
        return tuple(sorted(sp.partition for sp in self.held_by(holder) if sp.coeff(node)))

    def r_c(self, node: int) -> int:
        return len(self.destinations(node))

    def copies(self, node: int, partition: int) -> int:
        return len(self.covering(node, partition))

    def plan_partition(self, partition: int, failed: Iterable[int]) -> RecoveryPlan:
        """Recovery plan for one partition; redundant sources are ``R<holder>``."""
        failed = set(failed)
        rows = [
            (R(sp.holder), sp.vector(self.k))
            for sp in sorted(self.sumparts, key=lambda s: s.holder)
            if sp.partition == partition and sp.holder not in failed
        ]
        return solve_erasures(self.k, [n for n in failed if n in self.data_nodes], rows)

    def recovery_items(self, node: int) -> set[tuple[Ref, int]]:
        """(sketch, partition) pieces fetched to recover ``node`` and rebuild what it held."""
        items: set[tuple[Ref, int]] = set()
        if node in self.data_nodes:
            for part in range(1, self.p + 1):
                plan = self.plan_partition(part, {node})
                items.update((src, part) for src in plan.combos.get(D(node), {}))
        for sp in self.held_by(node):
            items.update((D(m), sp.partition) for m in sp.members if m != node)
        return items

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "strategy": self.strategy.value,
            "k": self.k,
            "f": self.f,
            "p": self.p,
            "sumparts": [
                {"holder": sp.holder, "partition": sp.partition, "coeffs": {str(n): c for n, c in sp.coeffs}}
                for sp in self.sumparts
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> CoverageMapping:
        return cls(
            MappingKind(doc["kind"]),
            Strategy(doc["strategy"]),
            int(doc["k"]),
            int(doc["f"]),
            int(doc["p"]),
            tuple(
                _sumpart(int(sp["holder"]), int(sp["partition"]), {int(n): int(c) for n, c in sp["coeffs"].items()})
                for sp in doc["sumparts"]
            ),
        )


def from_generation(g: GenerationMatrix, p: int = 1) -> CoverageMapping:
    """Every redundant row covers every partition, with its stored coefficients."""
    physical = g.physical_redundant()
    parts = tuple(
        _sumpart(holder, part, {j: c for j, c in enumerate(row, start=1)})
        for holder, row in zip(g.holders, physical)
        for part in range(1, p + 1)
    )
    kind = MappingKind.DEDICATED if g.strategy is Strategy.DEDICATED else MappingKind.DISTRIBUTED
    return CoverageMapping(kind, g.strategy, g.k, g.tolerance, p, parts)


# k = 4 instances; each node's partitions are covered by three distinct peers
_CLIQUE_4 = (
    (1, 2, (3, 4)),
    (1, 3, (2,)),
    (2, 1, (3, 4)),
    (2, 3, (1,)),
    (3, 1, (1, 2)),
    (3, 3, (4,)),
    (4, 2, (1, 2)),
    (4, 3, (3,)),
)
# six equal-weight pairs, holders loaded 2, 2, 1, 1
_IMBALANCED_4 = (
    (1, 1, (3, 4)),
    (1, 2, (3, 4)),
    (2, 3, (3, 4)),
    (3, 1, (1, 2)),
    (3, 2, (1, 2)),
    (4, 3, (1, 2)),
)


def _from_table(kind: MappingKind, k: int, p: int, table) -> CoverageMapping:
    parts = tuple(_sumpart(h, part, {m: 1 for m in members}) for h, part, members in table)
    return CoverageMapping(kind, Strategy.DISTRIBUTED, k, 1, p, parts)


def sweet_spot(k: int) -> CoverageMapping:
    """Ring with ``p = 2``: node ``i`` sums nodes ``i+1`` and ``i+2`` in partition 1 (even ``i``) or 2 (odd ``i``)."""
    if k < 4 or k % 2:
        raise ValueError(f"sweet-spot mapping needs an even k >= 4, got {k}")
    parts = []
    for i in range(1, k + 1):
        a, b = i % k + 1, (i + 1) % k + 1
        parts.append(_sumpart(i, 1 if i % 2 == 0 else 2, {a: 1, b: 1}))
    return CoverageMapping(MappingKind.SWEET_SPOT, Strategy.DISTRIBUTED, k, 1, 2, tuple(parts))


def build_coverage(kind: MappingKind | str, k: int, f: int = 1, p: int = 1) -> CoverageMapping:
    kind = MappingKind(kind)
    if kind is MappingKind.DEDICATED:
        return from_generation(GenerationMatrix.dedicated(k, f), p)
    if kind is MappingKind.DISTRIBUTED:
        if f > k // 2:
            raise ValueError(f"distributed redundancy tolerates at most floor(k/2) = {k // 2} failures")
        return from_generation(GenerationMatrix.distributed(k), p)
    if f != 1:
        raise ValueError(f"{kind.value} mappings tolerate a single failure")
    if kind is MappingKind.SWEET_SPOT:
        return sweet_spot(k)
    if k != 4:
        raise ValueError(f"{kind.value} mapping is only defined for k = 4")
    table = _CLIQUE_4 if kind is MappingKind.CLIQUE else _IMBALANCED_4
    return _from_table(kind, 4, 3, table)


@dataclass(frozen=True)
class MappingStats:
    space: Fraction
    recovery_sketches: dict[int, Fraction]
    r_c: dict[int, int]
    held: dict[int, Fraction]

    @property
    def max_recovery(self) -> Fraction:
        return max(self.recovery_sketches.values())


def mapping_stats(mapping: CoverageMapping) -> MappingStats:
    p = mapping.p
    return MappingStats(
        space=Fraction(len(mapping.sumparts), p),
        recovery_sketches={n: Fraction(len(mapping.recovery_items(n)), p) for n in mapping.nodes},
        r_c={n: mapping.r_c(n) for n in mapping.data_nodes},
        held={n: Fraction(len(mapping.held_by(n)), p) for n in mapping.nodes},
    )
