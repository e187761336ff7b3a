import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ewfs.lp import feasible_point


def solve_exact(rows, rhs):
    """Unique solution of a square system in Fractions, or None if singular."""
    n = len(rows)
    m = [[Fraction(x) for x in r] + [Fraction(b)] for r, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((i for i in range(col, n) if m[i][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        for i in range(n):
            if i != col and m[i][col] != 0:
                f = m[i][col] / m[col][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[col])]
    return [m[i][n] / m[i][i] for i in range(n)]


def oracle_feasible(A, b):
    """{x >= 0 : Ax = b} is nonempty iff some basic solution is nonnegative.

    Enumerates column subsets S and row subsets R of equal size, solves
    A[R,S] x_S = b_R, and checks the full system.
    """
    m, n = len(A), len(A[0])
    if all(x == 0 for x in b):
        return True
    for k in range(1, min(m, n) + 1):
        for cols in itertools.combinations(range(n), k):
            for rws in itertools.combinations(range(m), k):
                xs = solve_exact([[A[i][j] for j in cols] for i in rws], [b[i] for i in rws])
                if xs is None or any(v < 0 for v in xs):
                    continue
                x = [Fraction(0)] * n
                for j, v in zip(cols, xs):
                    x[j] = v
                if all(sum(A[i][j] * x[j] for j in range(n)) == b[i] for i in range(m)):
                    return True
    return False


def test_simple_feasible():
    x = feasible_point([[1, 1]], [1])
    assert x is not None and sum(x) == 1 and min(x) >= 0


def test_simple_infeasible():
    assert feasible_point([[1, 1], [1, 1]], [1, 2]) is None
    assert feasible_point([[1, 1]], [-1]) is None


def test_inequalities():
    x = feasible_point([[1, 1, 1]], [1], [[1, 0, 0]], [Fraction(1, 3)])
    assert x is not None and x[0] <= Fraction(1, 3)
    assert feasible_point([[1, 1]], [1], [[1, 1]], [Fraction(1, 2)]) is None


def test_ragged_rejected():
    with pytest.raises(ValueError):
        feasible_point([[1, 1], [1]], [1, 1])


small = st.integers(-3, 3)


@given(st.integers(1, 3).flatmap(lambda m: st.integers(1, 4).flatmap(
    lambda n: st.tuples(st.lists(st.lists(small, min_size=n, max_size=n), min_size=m, max_size=m),
                        st.lists(small, min_size=m, max_size=m)))))
@settings(max_examples=200)
def test_agrees_with_vertex_oracle(system):
    A, b = system
    x = feasible_point(A, b)
    assert (x is not None) == oracle_feasible(A, b)
    if x is not None:
        assert all(v >= 0 for v in x)
        assert all(sum(a * v for a, v in zip(row, x)) == bi for row, bi in zip(A, b))


@given(st.lists(st.lists(st.integers(0, 4), min_size=5, max_size=5), min_size=1, max_size=4),
       st.lists(st.fractions(0, 3, max_denominator=7), min_size=5, max_size=5))
def test_constructed_feasible(A, x0):
    b = [sum(a * v for a, v in zip(row, x0)) for row in A]
    x = feasible_point(A, b)
    assert x is not None
    assert all(sum(a * v for a, v in zip(row, x)) == bi for row, bi in zip(A, b))
