"""Sketch partitioning: which partition owns each counter."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class PartitionKind(str, enum.Enum):
    SINGLE = "single"
    ROWS = "rows"
    CELLS = "cells"


def split_sizes(n: int, p: int) -> list[int]:
    """Contiguous split of ``n`` items into ``p`` parts; earlier parts take the remainder."""
    q, r = divmod(n, p)
    return [q + (1 if i < r else 0) for i in range(p)]


@dataclass(frozen=True)
class PartitionScheme:
    kind: PartitionKind
    p: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PartitionKind(self.kind))
        if self.p < 1:
            raise ValueError("partition count must be positive")
        if self.kind is PartitionKind.SINGLE and self.p != 1:
            raise ValueError("the single scheme has exactly one partition")

    def validate(self, d: int, w: int) -> None:
        if self.kind is PartitionKind.ROWS and self.p > d:
            raise ValueError(f"cannot split {d} rows into {self.p} partitions")
        if self.kind is PartitionKind.CELLS and self.p > d * w:
            raise ValueError(f"cannot split {d * w} cells into {self.p} partitions")

    def layout(self, d: int, w: int) -> np.ndarray:
        """``d x w`` array of 1-based partition ids (read-only)."""
        return _layout(self.kind, self.p, d, w)

    def partition_of(self, cell: tuple[int, int], d: int, w: int) -> int:
        row, col = cell
        if not (0 <= row < d and 0 <= col < w):
            raise IndexError(f"cell {cell} outside a {d}x{w} sketch")
        return int(self.layout(d, w)[row, col])

    def member(self, cell: tuple[int, int], partition: int, d: int, w: int) -> bool:
        return self.partition_of(cell, d, w) == partition

    def rows_of(self, partition: int, d: int, w: int) -> tuple[int, ...]:
        """Rows containing at least one cell of ``partition``, ascending."""
        return _rows_of(self.kind, self.p, d, w)[partition]


@lru_cache(maxsize=128)
def _layout(kind: PartitionKind, p: int, d: int, w: int) -> np.ndarray:
    PartitionScheme(kind, p).validate(d, w)
    if kind is PartitionKind.SINGLE:
        out = np.ones((d, w), dtype=np.int64)
    elif kind is PartitionKind.ROWS:
        ids = np.repeat(np.arange(1, p + 1), split_sizes(d, p))
        out = np.repeat(ids[:, None], w, axis=1)
    else:
        out = np.repeat(np.arange(1, p + 1), split_sizes(d * w, p)).reshape(d, w)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=128)
def _rows_of(kind: PartitionKind, p: int, d: int, w: int) -> dict[int, tuple[int, ...]]:
    layout = _layout(kind, p, d, w)
    return {
        part: tuple(int(r) for r in range(d) if (layout[r] == part).any()) for part in range(1, p + 1)
    }
