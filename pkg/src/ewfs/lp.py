"""Exact rational LP feasibility by phase-1 simplex (Bland's rule).

Decides whether ``{x >= 0 : A_eq x = b_eq, A_ub x <= b_ub}`` is nonempty
using :class:`fractions.Fraction` throughout, so verdicts carry no
floating-point doubt.  Sized for the few-hundred-column systems that
global-assignment marginal problems produce; rows are stored sparsely.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Matrix = Sequence[Sequence]


def _row(coeffs) -> dict[int, Fraction]:
    return {j: Fraction(c) for j, c in enumerate(coeffs) if c != 0}


def feasible_point(A_eq: Matrix = (), b_eq: Sequence = (),
                   A_ub: Matrix = (), b_ub: Sequence = ()) -> list[Fraction] | None:
    """A feasible ``x`` (exact), or None if the system is infeasible."""
    rows: list[dict[int, Fraction]] = []
    rhs: list[Fraction] = []
    n = len(A_eq[0]) if len(A_eq) else (len(A_ub[0]) if len(A_ub) else 0)
    for a, b in zip(A_eq, b_eq):
        if len(a) != n:
            raise ValueError("ragged constraint matrix")
        rows.append(_row(a))
        rhs.append(Fraction(b))
    n_total = n
    for a, b in zip(A_ub, b_ub):
        if len(a) != n:
            raise ValueError("ragged constraint matrix")
        r = _row(a)
        r[n_total] = Fraction(1)  # slack
        n_total += 1
        rows.append(r)
        rhs.append(Fraction(b))
    if len(rows) != len(A_eq) + len(A_ub) or len(b_eq) != len(A_eq) or len(b_ub) != len(A_ub):
        raise ValueError("constraint matrix and right-hand side lengths differ")

    m = len(rows)
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = {j: -v for j, v in rows[i].items()}
            rhs[i] = -rhs[i]
    # artificial variable n_total + i is basic in row i
    basis = []
    for i in range(m):
        rows[i][n_total + i] = Fraction(1)
        basis.append(n_total + i)
    n_cols = n_total + m
    artificial = set(range(n_total, n_cols))

    # reduced costs of the phase-1 objective (minimize sum of artificials)
    cost: dict[int, Fraction] = {}
    obj = Fraction(0)
    for i in range(m):
        obj += rhs[i]
        for j, v in rows[i].items():
            if j not in artificial:
                cost[j] = cost.get(j, Fraction(0)) + v

    while True:
        entering = min((j for j, c in cost.items() if c > 0), default=None)
        if entering is None:
            break
        best = None
        for i in range(m):
            a = rows[i].get(entering)
            if a is not None and a > 0:
                ratio = rhs[i] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:  # cannot happen: phase-1 objective is bounded below
            raise ArithmeticError("unbounded phase-1 objective")
        r = best[1]
        piv = rows[r][entering]
        prow = {j: v / piv for j, v in rows[r].items()}
        prhs = rhs[r] / piv
        rows[r], rhs[r] = prow, prhs
        for i in range(m):
            if i == r:
                continue
            f = rows[i].get(entering)
            if f is None:
                continue
            row = rows[i]
            for j, v in prow.items():
                nv = row.get(j, 0) - f * v
                if nv:
                    row[j] = nv
                else:
                    row.pop(j, None)
            rhs[i] -= f * prhs
        f = cost.get(entering)
        if f:
            for j, v in prow.items():
                nv = cost.get(j, 0) - f * v
                if nv:
                    cost[j] = nv
                else:
                    cost.pop(j, None)
            obj -= f * prhs
        basis[r] = entering
        for j in artificial:  # artificials never re-enter
            cost.pop(j, None)

    if obj != 0:
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = rhs[i]
    return x
