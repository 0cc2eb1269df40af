"""Exact two-phase simplex over the rationals (Bland's rule).

Solves  max c.x  subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: str
    value: Fraction | None = None
    x: list[Fraction] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], rhs: list[Fraction], basis: list[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.obj: list[Fraction] | None = None   # reduced costs of the current objective

    def pivot(self, r: int, c: int) -> None:
        row = self.rows[r]
        p = row[c]
        if p != 1:
            inv = 1 / p
            row[:] = [x * inv for x in row]
            self.rhs[r] *= inv
        nz = [j for j, x in enumerate(row) if x]
        for i, other in enumerate(self.rows):
            f = other[c]
            if i != r and f:
                for j in nz:
                    other[j] -= f * row[j]
                self.rhs[i] -= f * self.rhs[r]
        if self.obj is not None and self.obj[c]:
            f = self.obj[c]
            for j in nz:
                self.obj[j] -= f * row[j]
        self.basis[r] = c

    def run(self, cost: list[Fraction], allowed: int) -> str:
        """Maximize cost over the current basis; columns >= allowed never enter."""
        width = len(cost)
        self.obj = list(cost)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.rows[i]
                for j in range(width):
                    if row[j]:
                        self.obj[j] -= cb * row[j]
        while True:
            # Bland: lowest improving column, ties in the ratio test by lowest basic index
            enter = next((j for j in range(allowed) if self.obj[j] > 0), None)
            if enter is None:
                return OPTIMAL
            leave = None
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = self.rhs[i] / a
                    if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                return UNBOUNDED
            self.pivot(leave, enter)


def lp_solve(c: Sequence, A_ub: Sequence[Sequence] = (), b_ub: Sequence = (),
             A_eq: Sequence[Sequence] = (), b_eq: Sequence = ()) -> LPResult:
    nvar = len(c)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    n_ub = len(A_ub)
    n_slack = n_ub
    for k, (a, b) in enumerate(zip(A_ub, b_ub)):
        row = [Fraction(x) for x in a] + [Fraction(int(i == k)) for i in range(n_slack)]
        rows.append(row)
        rhs.append(Fraction(b))
    for a, b in zip(A_eq, b_eq):
        rows.append([Fraction(x) for x in a] + [Fraction(0)] * n_slack)
        rhs.append(Fraction(b))
    for i in range(len(rows)):
        if rhs[i] < 0:
            rows[i] = [-x for x in rows[i]]
            rhs[i] = -rhs[i]
    nrows = len(rows)
    ncols = nvar + n_slack
    for i, row in enumerate(rows):
        row.extend(Fraction(int(i == k)) for k in range(nrows))
    tab = _Tableau(rows, rhs, [ncols + i for i in range(nrows)])
    phase1 = [Fraction(0)] * ncols + [Fraction(-1)] * nrows
    tab.run(phase1, ncols + nrows)
    if sum(tab.rhs[i] for i, b in enumerate(tab.basis) if b >= ncols) != 0:
        return LPResult(INFEASIBLE)
    # drive remaining (zero-level) artificials out of the basis
    keep = []
    for i, b in enumerate(tab.basis):
        if b < ncols:
            keep.append(i)
            continue
        col = next((j for j in range(ncols) if tab.rows[i][j] != 0 and j not in tab.basis), None)
        if col is None:
            continue  # redundant equality
        tab.pivot(i, col)
        keep.append(i)
    tab.obj = None
    tab.rows = [tab.rows[i][:ncols] for i in keep]
    tab.rhs = [tab.rhs[i] for i in keep]
    tab.basis = [tab.basis[i] for i in keep]
    cost = [Fraction(x) for x in c] + [Fraction(0)] * n_slack
    status = tab.run(cost, ncols)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    x = [Fraction(0)] * ncols
    for i, b in enumerate(tab.basis):
        x[b] = tab.rhs[i]
    x = x[:nvar]
    value = sum((Fraction(ci) * xi for ci, xi in zip(c, x)), Fraction(0))
    return LPResult(OPTIMAL, value, x)


@dataclass
class ExactLP:
    """max c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0."""
    c: list
    A_ub: list = field(default_factory=list)
    b_ub: list = field(default_factory=list)
    A_eq: list = field(default_factory=list)
    b_eq: list = field(default_factory=list)

    def solve(self) -> LPResult:
        return lp_solve(self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq)
