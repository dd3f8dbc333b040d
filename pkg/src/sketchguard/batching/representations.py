"""Per-cycle batch representations.

Each representation records the arrivals of one cycle. Item-based variants
keep identifiers; counter-based variants keep the ``d`` hash indices that a
normal CMS update already computed. All of them can report the cell deltas
the batch adds to the owning sketch.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterator, Sequence

import numpy as np

from ..sketch import Sketch
from .config import BatchConfig, RepKind


class CapacityExceededError(RuntimeError):
    """A record was attempted on a full representation (a misconfiguration)."""


class BatchRepresentation:
    kind: RepKind

    def __init__(self, d: int, w: int, config: BatchConfig) -> None:
        self.d, self.w, self.config = d, w, config
        self.limit = config.capacity
        self.table_limit = config.table_limit
        self.fill = 0
        self.ht_ops = 0
        self._clear()

    def _clear(self) -> None:
        raise NotImplementedError

    def _record(self, x: int, indices: Sequence[int]) -> None:
        raise NotImplementedError

    def record(self, x: int, indices: Sequence[int]) -> None:
        if self.fill >= self.limit or self.saturated:
            raise CapacityExceededError(f"{self.kind.value} batch is full")
        self._record(x, indices)
        self.fill += 1

    def reset(self) -> None:
        self.fill = 0
        self._clear()

    @property
    def saturated(self) -> bool:
        """True when a hash table reached its load threshold."""
        return False

    @property
    def empty(self) -> bool:
        return self.fill == 0

    def in_batch(self, sketch: Sketch, x: int) -> int:
        """Sketch estimate of ``x`` with this batch folded in."""
        raise NotImplementedError

    def cell_deltas(self, indices_of) -> dict[tuple[int, int], int]:
        """``{(row, col): delta}`` this batch adds; ``indices_of`` hashes identifiers."""
        raise NotImplementedError

    def flows(self) -> dict[int, int]:
        """Identifier frequencies (item-based variants only)."""
        raise TypeError(f"{self.kind.value} does not keep identifiers")

    def row_elements(self, row: int) -> list[tuple[int, int]]:
        """``(column, delta)`` elements of one row (counter-based variants only)."""
        raise TypeError(f"{self.kind.value} does not keep counters")

    @property
    def distinct_flows(self) -> int:
        return len(self.flows())

    @property
    def modified_counters(self) -> int:
        return sum(len(self.row_elements(r)) for r in range(self.d))


class ItemBuff(BatchRepresentation):
    kind = RepKind.ITEM_BUFF

    def _clear(self) -> None:
        self.items: list[int] = []

    def _record(self, x, indices) -> None:
        self.items.append(x)

    def in_batch(self, sketch, x) -> int:
        return sketch.query(x) + sum(1 for y in self.items if y == x)

    def flows(self) -> dict[int, int]:
        return dict(Counter(self.items))

    def cell_deltas(self, indices_of):
        out: Counter = Counter()
        for x in self.items:
            for row, col in enumerate(indices_of(x)):
                out[row, col] += 1
        return dict(out)

    @property
    def distinct_flows(self) -> int:
        return len(set(self.items))


class FlwHash(BatchRepresentation):
    kind = RepKind.FLW_HASH

    def _clear(self) -> None:
        self.table: dict[int, int] = {}

    def _record(self, x, indices) -> None:
        self.ht_ops += 1
        self.table[x] = self.table.get(x, 0) + 1

    @property
    def saturated(self) -> bool:
        return len(self.table) >= self.table_limit

    def in_batch(self, sketch, x) -> int:
        return sketch.query(x) + self.table.get(x, 0)

    def flows(self) -> dict[int, int]:
        return dict(self.table)

    def cell_deltas(self, indices_of):
        out: Counter = Counter()
        for x, freq in self.table.items():
            for row, col in enumerate(indices_of(x)):
                out[row, col] += freq
        return dict(out)


class _CounterRep(BatchRepresentation):
    def _row_delta(self, row: int, col: int) -> int:
        raise NotImplementedError

    def in_batch(self, sketch, x) -> int:
        # min of sums: per-structure minima are not additive
        counts = sketch.counts
        return int(
            min(counts[r, c] + self._row_delta(r, c) for r, c in enumerate(sketch.hashes.indices(x)))
        )

    def cell_deltas(self, indices_of=None):
        return {(r, c): v for r in range(self.d) for c, v in self.row_elements(r)}


class CntBuff(_CounterRep):
    kind = RepKind.CNT_BUFF

    def _clear(self) -> None:
        self.rows: list[list[int]] = [[] for _ in range(self.d)]

    def _record(self, x, indices) -> None:
        for row, col in enumerate(indices):
            self.rows[row].append(col)

    def _row_delta(self, row, col) -> int:
        return self.rows[row].count(col)

    def row_elements(self, row):
        return sorted(Counter(self.rows[row]).items())

    def columns(self, row: int) -> list[int]:
        """The raw ``B'`` indices of one row in arrival order."""
        return list(self.rows[row])


class CntHash(_CounterRep):
    kind = RepKind.CNT_HASH

    def _clear(self) -> None:
        self.tables: list[dict[int, int]] = [{} for _ in range(self.d)]

    def _record(self, x, indices) -> None:
        for row, col in enumerate(indices):
            self.ht_ops += 1
            table = self.tables[row]
            table[col] = table.get(col, 0) + 1

    @property
    def saturated(self) -> bool:
        limit = self.table_limit
        return any(len(t) >= limit for t in self.tables)

    def _row_delta(self, row, col) -> int:
        return self.tables[row].get(col, 0)

    def row_elements(self, row):
        return sorted(self.tables[row].items())


class CntDiff(_CounterRep):
    kind = RepKind.CNT_DIFF

    def _clear(self) -> None:
        self.diff = np.zeros((self.d, self.w), dtype=np.int64)

    def _record(self, x, indices) -> None:
        for row, col in enumerate(indices):
            self.diff[row, col] += 1

    def _row_delta(self, row, col) -> int:
        return int(self.diff[row, col])

    def row_elements(self, row):
        values = self.diff[row]
        cols = np.flatnonzero(values)
        return list(zip(cols.tolist(), values[cols].tolist()))


_KINDS = {cls.kind: cls for cls in (ItemBuff, FlwHash, CntBuff, CntHash, CntDiff)}


def make_representation(d: int, w: int, config: BatchConfig) -> BatchRepresentation:
    if config.kind is RepKind.FULL:
        raise ValueError("the full-share policy keeps no batch")
    return _KINDS[config.kind](d, w, config)


def iter_kinds() -> Iterator[RepKind]:
    return iter(_KINDS)
