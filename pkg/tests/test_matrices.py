from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sketchguard.redundancy import (
    circular_displacement,
    det,
    inverse,
    minor_determinants,
    mr_full,
    mr_generate,
    pascal_generate,
    spans_check,
)
from sketchguard.redundancy.exact import SingularMatrixError, matmul


def _leibniz(m):
    """Determinant by cofactor expansion: an oracle independent of Bareiss."""
    if len(m) == 1:
        return m[0][0]
    return sum((-1) ** c * m[0][c] * _leibniz([row[:c] + row[c + 1 :] for row in m[1:]]) for c in range(len(m)))


small = st.lists(st.lists(st.integers(-6, 6), min_size=4, max_size=4), min_size=4, max_size=4)


@given(small)
def test_det_agrees_with_cofactor_expansion(m):
    assert det(m) == _leibniz(m)


@given(small)
def test_inverse_round_trips(m):
    if _leibniz(m) == 0:
        with pytest.raises(SingularMatrixError):
            inverse(m)
        return
    ident = matmul(m, inverse(m))
    assert ident == [[Fraction(int(i == j)) for j in range(4)] for i in range(4)]


def test_mr_recurrence_and_bound():
    for k in range(1, 9):
        m = mr_full(k)
        for i in range(k):
            for j in range(k):
                if i == 0 or j == 0:
                    assert m[i][j] == 1
                else:
                    assert m[i][j] == m[i][j - 1] + m[i - 1][j - 1]
                assert m[i][j] <= 2 ** (k - 1)


def test_mr_1_is_one():
    assert [list(r) for r in mr_generate(1, 1)] == [[1]]


@pytest.mark.parametrize("k", range(1, 8))
def test_every_square_submatrix_of_mr_is_invertible(k):
    m = mr_full(k)
    for f in range(1, k + 1):
        for cols in combinations(range(k), f):
            assert _leibniz([[m[r][c] for c in cols] for r in range(f)]) != 0


def test_pascal_rows_are_binomials():
    from math import comb

    p = pascal_generate(6)
    assert all(p[i][j] == comb(i + j, i) for i in range(6) for j in range(6))


def test_minors_count_is_binomial():
    assert len(minor_determinants(mr_generate(6, 3), 3)) == 20
    assert spans_check(mr_generate(6, 3), 3)


def test_circular_displacement_for_four_nodes():
    rows = circular_displacement(mr_full(4))
    assert [list(r) for r in rows] == [[1, 2, 4, 7], [1, 2, 4, 8], [1, 1, 1, 1], [1, 2, 3, 4]]
