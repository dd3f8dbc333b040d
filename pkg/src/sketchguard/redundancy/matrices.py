"""Redundant coefficient matrices: shifted-sum MR, symmetric Pascal, span checks."""

from __future__ import annotations

from itertools import combinations

from .exact import det

IntMatrix = tuple[tuple[int, ...], ...]


def mr_full(k: int) -> IntMatrix:
    if k < 1:
        raise ValueError("k must be positive")
    mr = [[1] * k for _ in range(k)]
    for i in range(1, k):
        for j in range(1, k):
            mr[i][j] = mr[i][j - 1] + mr[i - 1][j - 1]
    return tuple(tuple(row) for row in mr)


def mr_generate(k: int, f: int) -> IntMatrix:
    """Leading ``f`` rows of the ``k x k`` shifted-sum matrix.

    First row and column are ones; ``MR[i][j] = MR[i][j-1] + MR[i-1][j-1]``.
    Entries are bounded by ``2**(k-1)``, and every ``f``-column submatrix of the
    result is nonsingular.
    """
    if not 1 <= f <= k:
        raise ValueError(f"need 1 <= f <= k, got f={f}, k={k}")
    return mr_full(k)[:f]


def pascal_generate(k: int) -> IntMatrix:
    if k < 1:
        raise ValueError("k must be positive")
    p = [[1] * k for _ in range(k)]
    for i in range(1, k):
        for j in range(1, k):
            p[i][j] = p[i - 1][j] + p[i][j - 1]
    return tuple(tuple(row) for row in p)


def minor_determinants(m, f: int) -> list[int]:
    """Determinants of the ``f x f`` submatrices of the first ``f`` rows, columns in lexicographic order."""
    rows = [tuple(r) for r in m[:f]]
    if len(rows) < f:
        raise ValueError("matrix has fewer than f rows")
    k = len(rows[0])
    return [det([[row[c] for c in cols] for row in rows]) for cols in combinations(range(k), f)]


def spans_check(m, f: int) -> bool:
    return all(v != 0 for v in minor_determinants(m, f))


def circular_displacement(mr) -> IntMatrix:
    """Assign row ``(i + k//2) mod k`` of a square MR to node ``i`` (0-based).

    For ``k = 4`` this pairs nodes 1..4 with rows 3, 4, 1, 2.
    """
    k = len(mr)
    if any(len(row) != k for row in mr):
        raise ValueError("circular displacement needs a square matrix")
    shift = k // 2
    return tuple(tuple(mr[(i + shift) % k]) for i in range(k))
