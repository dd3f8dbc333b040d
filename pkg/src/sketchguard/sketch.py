"""Count-Min Sketch with a seeded pairwise-independent hash family.

Counters are held in a numpy object array so every cell is an exact Python
integer; overflow is checked against the configured logical width instead of
relying on a machine type. That keeps 64-bit sum-sketches honest and lets
``linear_combine`` work with rational coefficients without losing precision.
"""

from __future__ import annotations

import hashlib
import math
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

MERSENNE_61 = (1 << 61) - 1
MASK_64 = (1 << 64) - 1


class SketchError(Exception):
    """Base class for sketch failures."""


class ParameterMismatchError(SketchError):
    pass


class CounterOverflowError(SketchError):
    pass


class InconsistentRecoveryError(SketchError):
    """A linear combination produced a negative or fractional counter."""


def derive_dims(epsilon: float, delta: float) -> tuple[int, int]:
    """Return ``(d, w) = (ceil(ln(1/delta)), ceil(e/epsilon))``."""
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    return math.ceil(math.log(1 / delta)), math.ceil(math.e / epsilon)


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK_64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK_64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK_64
    return x ^ (x >> 31)


def mix64(x: int) -> int:
    """Reduce an identifier to 64 bits.

    Identifiers that already fit are returned unchanged. Wider ones are cut
    into 64-bit words, least significant first, and folded with
    ``h = splitmix64(h ^ word)`` starting from ``h = len(words)``.
    """
    if x < 0:
        raise ValueError("identifiers are non-negative integers")
    if x <= MASK_64:
        return x
    words = []
    while x:
        words.append(x & MASK_64)
        x >>= 64
    h = len(words)
    for word in words:
        h = splitmix64(h ^ word)
    return h


@dataclass(frozen=True)
class SketchParams:
    epsilon: float
    delta: float
    d: int
    w: int
    seed: int = 0
    counter_bits: int = 32

    def __post_init__(self) -> None:
        if (self.d, self.w) != derive_dims(self.epsilon, self.delta):
            raise ValueError(
                f"(d, w)=({self.d}, {self.w}) does not match epsilon={self.epsilon}, delta={self.delta}"
            )
        if not 0 <= self.seed <= MASK_64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.counter_bits < 1:
            raise ValueError("counter_bits must be positive")

    @classmethod
    def from_guarantees(
        cls, epsilon: float, delta: float, seed: int = 0, counter_bits: int = 32
    ) -> SketchParams:
        d, w = derive_dims(epsilon, delta)
        return cls(epsilon, delta, d, w, seed, counter_bits)

    def with_counter_bits(self, bits: int) -> SketchParams:
        return replace(self, counter_bits=bits)

    def compatible(self, other: SketchParams) -> bool:
        # counter width may differ between data sketches and sum-sketches
        return (self.epsilon, self.delta, self.d, self.w, self.seed) == (
            other.epsilon,
            other.delta,
            other.d,
            other.w,
            other.seed,
        )

    @property
    def counter_limit(self) -> int:
        return (1 << self.counter_bits) - 1

    @property
    def index_bits(self) -> int:
        """Bits needed for a 0-based column index."""
        return max(1, (self.w - 1).bit_length())


class HashFamily:
    """``d`` functions ``h_i(x) = ((a_i * x + b_i) mod p) mod w`` with ``p = 2^61 - 1``.

    ``(a_i, b_i)`` come from ``random.Random(seed)``; outputs are 0-based.
    """

    def __init__(self, seed: int, d: int, w: int) -> None:
        rng = random.Random(seed)
        self.seed, self.d, self.w = seed, d, w
        self.coefficients = tuple(
            (rng.randrange(1, MERSENNE_61), rng.randrange(0, MERSENNE_61)) for _ in range(d)
        )
        self.indices = lru_cache(maxsize=1 << 18)(self._indices)

    def _indices(self, x: int) -> tuple[int, ...]:
        v = mix64(x) % MERSENNE_61
        w = self.w
        return tuple(((a * v + b) % MERSENNE_61) % w for a, b in self.coefficients)

    def index(self, row: int, x: int) -> int:
        return self.indices(x)[row]


@lru_cache(maxsize=64)
def hash_family(seed: int, d: int, w: int) -> HashFamily:
    return HashFamily(seed, d, w)


def _zeros(d: int, w: int) -> np.ndarray:
    counts = np.empty((d, w), dtype=object)
    counts.fill(0)
    return counts


@dataclass(eq=False)
class Sketch:
    params: SketchParams
    counts: np.ndarray = field(default=None)  # type: ignore[assignment]
    total: int = 0
    epoch: int = 0

    def __post_init__(self) -> None:
        if self.counts is None:
            self.counts = _zeros(self.params.d, self.params.w)
        elif self.counts.shape != (self.params.d, self.params.w):
            raise ParameterMismatchError(f"counts shape {self.counts.shape} != (d, w)")
        self.hashes = hash_family(self.params.seed, self.params.d, self.params.w)
        self._limit = self.params.counter_limit

    @classmethod
    def from_counts(cls, params: SketchParams, counts, total: int | None = None) -> Sketch:
        arr = _zeros(params.d, params.w)
        arr[:, :] = np.asarray(counts, dtype=object)
        if total is None:
            total = int(sum(arr[0])) if params.d else 0
        return cls(params, arr, total)

    def copy(self) -> Sketch:
        return Sketch(self.params, self.counts.copy(), self.total, self.epoch)

    def update(self, x: int, c: int = 1) -> None:
        if c < 1:
            raise ValueError("update quantity must be a positive integer")
        self.add_indices(self.hashes.indices(x), c)

    def update_many(self, items: Iterable[int]) -> None:
        """Insert a stream; identical identifiers are hashed once."""
        for x, c in Counter(items).items():
            self.update(x, c)

    def add_indices(self, indices: Sequence[int], c: int = 1) -> None:
        counts, limit = self.counts, self.params.counter_limit
        for row, col in enumerate(indices):
            if counts[row, col] + c > limit:
                raise CounterOverflowError(
                    f"counter [{row}, {col}] would exceed {self.params.counter_bits} bits"
                )
        for row, col in enumerate(indices):
            counts[row, col] += c
        self.total += c

    def add_cell(self, row: int, col: int, delta: int) -> None:
        """Add to one counter; ``total`` is left to the caller."""
        value = self.counts[row, col] + delta
        if value > self._limit:
            raise CounterOverflowError(f"counter [{row}, {col}] overflow")
        self.counts[row, col] = value

    def query(self, x: int) -> int:
        counts = self.counts
        return int(min(counts[row, col] for row, col in enumerate(self.hashes.indices(x))))

    def reset(self) -> None:
        """Archive point: zero the counters and start a new epoch."""
        self.counts = _zeros(self.params.d, self.params.w)
        self.total = 0
        self.epoch += 1

    def check_bounds(self) -> None:
        if (self.counts > self.params.counter_limit).any():
            raise CounterOverflowError(f"counter exceeds {self.params.counter_bits} bits")

    def to_bytes(self) -> bytes:
        return np.asarray(self.counts, dtype=np.uint64).astype(">u8").tobytes()

    def digest(self) -> str:
        h = hashlib.sha256(self.to_bytes())
        h.update(self.total.to_bytes(16, "big"))
        return h.hexdigest()[:16]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sketch):
            return NotImplemented
        return (
            self.params.compatible(other.params)
            and self.total == other.total
            and bool((self.counts == other.counts).all())
        )

    def dominates(self, other: Sketch) -> bool:
        """True when every counter is >= the matching counter of ``other``."""
        return bool((self.counts >= other.counts).all())


def _check_compatible(sketches: Iterable[Sketch]) -> list[Sketch]:
    sketches = list(sketches)
    if not sketches:
        raise ValueError("at least one sketch is required")
    first = sketches[0].params
    for s in sketches[1:]:
        if not first.compatible(s.params):
            raise ParameterMismatchError("sketches were built with different parameters")
    return sketches


def merge(a: Sketch, b: Sketch) -> Sketch:
    _check_compatible([a, b])
    out = Sketch(a.params, a.counts + b.counts, a.total + b.total)
    out.check_bounds()
    return out


def linear_combine(
    coeffs: Sequence[int | Fraction], sketches: Sequence[Sketch], params: SketchParams | None = None
) -> Sketch:
    """Element-wise ``sum(c_j * counts_j)``; every resulting cell must be a non-negative integer."""
    sketches = _check_compatible(sketches)
    if len(coeffs) != len(sketches):
        raise ValueError("one coefficient per sketch is required")
    params = params or sketches[0].params
    acc = _zeros(params.d, params.w)
    total = Fraction(0)
    for c, s in zip(coeffs, sketches):
        c = Fraction(c)
        if c == 0:
            continue
        if c.denominator == 1:
            acc = acc + int(c) * s.counts
        else:
            acc = acc + np.vectorize(lambda v, c=c: c * v, otypes=[object])(s.counts)
        total += c * s.total
    flat = acc.ravel()
    for i, v in enumerate(flat):
        if isinstance(v, Fraction):
            if v.denominator != 1:
                raise InconsistentRecoveryError(f"cell {divmod(i, params.w)} is fractional: {v}")
            flat[i] = v = int(v)
        if v < 0:
            raise InconsistentRecoveryError(f"cell {divmod(i, params.w)} is negative: {v}")
    if total.denominator != 1 or total < 0:
        raise InconsistentRecoveryError(f"item total is not a non-negative integer: {total}")
    out = Sketch(params, flat.reshape(params.d, params.w), int(total))
    out.check_bounds()
    return out
