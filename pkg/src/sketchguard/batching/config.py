from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

from ..sketch import SketchParams


class RepKind(str, enum.Enum):
    FULL = "full"
    ITEM_BUFF = "item_buff"
    CNT_BUFF = "cnt_buff"
    FLW_HASH = "flw_hash"
    CNT_HASH = "cnt_hash"
    CNT_DIFF = "cnt_diff"

    @property
    def item_based(self) -> bool:
        return self in (RepKind.ITEM_BUFF, RepKind.FLW_HASH)


INCREMENTAL_KINDS = tuple(k for k in RepKind if k is not RepKind.FULL)


def bits_for(n: int) -> int:
    """Bits needed to count up to ``n`` inclusive."""
    return max(1, n.bit_length())


def as_fraction(x: float | Fraction | str) -> Fraction:
    # decimal text keeps 0.8 exact instead of its binary neighbour
    return x if isinstance(x, Fraction) else Fraction(str(x))


@dataclass(frozen=True)
class FieldWidths:
    mid: int
    w: int
    B: int
    N: int

    def nbytes(self, field: str) -> int:
        return (getattr(self, field) + 7) // 8


@dataclass(frozen=True)
class BatchConfig:
    B: int
    kind: RepKind = RepKind.CNT_DIFF
    bits_mid: int = 64
    alpha: float = 0.8
    beta_hat: float = 1.0
    local_B: int | None = None
    bits_w: int | None = None
    bits_N: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", RepKind(self.kind))
        if self.B < 1:
            raise ValueError("batch size must be positive")
        if not 32 <= self.bits_mid <= 256:
            raise ValueError("identifier width must be within 32..256 bits")
        if not 0 < as_fraction(self.alpha) <= 1:
            raise ValueError("load threshold must be in (0, 1]")
        if as_fraction(self.beta_hat) < 1:
            raise ValueError("estimated frequency-per-flow must be >= 1")
        if self.local_B is not None and not 1 <= self.local_B <= self.B:
            raise ValueError("local batch size must be within 1..B")

    @property
    def bits_B(self) -> int:
        return bits_for(self.B)

    @property
    def capacity(self) -> int:
        """Arrivals per cycle before a share is forced."""
        return self.local_B or self.B

    @property
    def b_hat(self) -> int:
        return math.ceil(Fraction(self.B) / as_fraction(self.beta_hat))

    @property
    def buckets(self) -> int:
        return math.ceil(Fraction(self.b_hat) / as_fraction(self.alpha))

    @property
    def table_limit(self) -> int:
        """Entries a table accepts before crossing its load threshold."""
        return math.floor(as_fraction(self.alpha) * self.buckets)

    def widths(self, params: SketchParams) -> FieldWidths:
        return FieldWidths(
            mid=self.bits_mid,
            w=self.bits_w or params.index_bits,
            B=self.bits_B,
            N=self.bits_N or params.counter_bits,
        )
