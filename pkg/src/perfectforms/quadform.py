"""Positive definite quadratic forms given by exact Gram matrices.

A form is a symmetric matrix (list of rows) with rational entries and
``Q[x] = x^T Q x``.  Minima are squared lengths throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .exactla import (
    NotPositiveDefinite,
    common_denominator,
    content,
    det,
    hnf,
    identity,
    inverse,
    ldl,
    mat_mul,
    rank,
    sign_normalized,
    transpose,
)

LLL_DELTA = Fraction(99, 100)


@dataclass(frozen=True)
class MinData:
    lambda1: Fraction
    vectors: tuple[tuple[int, ...], ...]

    @property
    def kissing_number(self) -> int:
        return 2 * len(self.vectors)


def as_form(Q: Sequence[Sequence]) -> list[list[Fraction]]:
    d = len(Q)
    F = [[Fraction(x) for x in row] for row in Q]
    if any(len(row) != d for row in F):
        raise ValueError("Gram matrix must be square")
    for i in range(d):
        for j in range(i):
            if F[i][j] != F[j][i]:
                raise ValueError("Gram matrix must be symmetric")
    return F


def evaluate(Q, x) -> Fraction:
    d = len(x)
    return sum((Q[i][j] * x[i] * x[j] for i in range(d) for j in range(d) if x[i] and x[j]),
               Fraction(0))


def inner(Q, x, y) -> Fraction:
    d = len(x)
    return sum((Q[i][j] * x[i] * y[j] for i in range(d) if x[i] for j in range(d) if y[j]),
               Fraction(0))


def sym_pairs(d: int) -> list[tuple[int, int]]:
    """Index pairs (i, j), i <= j, in row-major upper-triangle order."""
    return [(i, j) for i in range(d) for j in range(i, d)]


def dyad_coordinates(x: Sequence[int]) -> list[int]:
    """Upper triangle of x x^T, row-major."""
    d = len(x)
    return [x[i] * x[j] for i, j in sym_pairs(d)]


def upper_triangle(Q) -> list:
    return [Q[i][j] for i, j in sym_pairs(len(Q))]


def from_upper_triangle(values: Sequence, d: int) -> list[list]:
    Q = [[0] * d for _ in range(d)]
    for (i, j), v in zip(sym_pairs(d), values):
        Q[i][j] = Q[j][i] = v
    return Q


def primitive_integral(Q) -> tuple[list[list[int]], Fraction]:
    """Return (s*Q, s) with s > 0 minimal such that s*Q is integral."""
    entries = [x for row in Q for x in row]
    den = common_denominator(entries)
    ints = [[int(Fraction(x) * den) for x in row] for row in Q]
    g = content(x for row in ints for x in row) or 1
    return [[x // g for x in row] for row in ints], Fraction(den, g)


def lll_reduce(Q, delta: Fraction = LLL_DELTA) -> tuple[list[list[Fraction]], list[list[int]]]:
    """LLL reduction of a Gram matrix; returns (U^T Q U, U) with U unimodular."""
    G = as_form(Q)
    n = len(G)
    U = identity(n)
    if n <= 1:
        return G, U
    mu = [[Fraction(0)] * n for _ in range(n)]
    B = [Fraction(0)] * n
    B[0] = G[0][0]

    def reduce_pair(k: int, l: int) -> None:
        if abs(mu[k][l]) <= Fraction(1, 2):
            return
        q = round(mu[k][l])
        for row in U:
            row[k] -= q * row[l]
        gkl, gll = G[k][l], G[l][l]
        for i in range(n):
            if i != k:
                G[k][i] -= q * G[l][i]
                G[i][k] = G[k][i]
        G[k][k] += -2 * q * gkl + q * q * gll
        mu[k][l] -= q
        for i in range(l):
            mu[k][i] -= q * mu[l][i]

    def swap(k: int, kmax: int) -> None:
        for row in U:
            row[k], row[k - 1] = row[k - 1], row[k]
        G[k], G[k - 1] = G[k - 1], G[k]
        for row in G:
            row[k], row[k - 1] = row[k - 1], row[k]
        for j in range(k - 1):
            mu[k][j], mu[k - 1][j] = mu[k - 1][j], mu[k][j]
        m = mu[k][k - 1]
        b_new = B[k] + m * m * B[k - 1]
        mu[k][k - 1] = m * B[k - 1] / b_new
        B[k] = B[k - 1] * B[k] / b_new
        B[k - 1] = b_new
        for i in range(k + 1, kmax + 1):
            t = mu[i][k]
            mu[i][k] = mu[i][k - 1] - m * t
            mu[i][k - 1] = t + mu[k][k - 1] * mu[i][k]

    k, kmax = 1, 0
    while k < n:
        if k > kmax:
            kmax = k
            for j in range(k):
                mu[k][j] = (G[k][j] - sum(mu[j][i] * mu[k][i] * B[i] for i in range(j))) / B[j]
            B[k] = G[k][k] - sum(mu[k][j] ** 2 * B[j] for j in range(k))
            if B[k] <= 0:
                raise NotPositiveDefinite("Gram matrix is not positive definite")
        reduce_pair(k, k - 1)
        if B[k] < (delta - mu[k][k - 1] ** 2) * B[k - 1]:
            swap(k, kmax)
            k = max(1, k - 1)
            continue
        for l in range(k - 2, -1, -1):
            reduce_pair(k, l)
        k += 1
    return G, U


def is_lll_reduced(Q, delta: Fraction = LLL_DELTA) -> bool:
    """Size reduction and the Lovasz condition, checked exactly."""
    L, D = ldl(Q)
    n = len(Q)
    for i in range(n):
        for j in range(i):
            if abs(L[i][j]) > Fraction(1, 2):
                return False
    return all(D[k] >= (delta - L[k][k - 1] ** 2) * D[k - 1] for k in range(1, n))


def _integer_range(center: Fraction, radius_sq: Fraction) -> range:
    """Integers x with (x - center)^2 <= radius_sq."""
    if radius_sq < 0:
        return range(0)
    r = math.sqrt(float(radius_sq))
    lo = math.floor(float(center) - r) - 1
    hi = math.ceil(float(center) + r) + 1
    while (lo - center) ** 2 > radius_sq and lo < center:
        lo += 1
    while (hi - center) ** 2 > radius_sq and hi > center:
        hi -= 1
    while (lo - 1 - center) ** 2 <= radius_sq:
        lo -= 1
    while (hi + 1 - center) ** 2 <= radius_sq:
        hi += 1
    if (lo - center) ** 2 > radius_sq:
        return range(0)
    return range(lo, hi + 1)


def _fincke_pohst(Q, bound: Fraction) -> list[tuple[tuple[int, ...], Fraction]]:
    """Nonzero x with Q[x] <= bound, one of each +-pair (last nonzero coordinate positive)."""
    n = len(Q)
    L, D = ldl(Q)
    out = []
    x = [0] * n

    def visit(j: int, budget: Fraction, all_zero_above: bool) -> None:
        center = -sum((L[i][j] * x[i] for i in range(j + 1, n) if x[i]), Fraction(0))
        for v in _integer_range(center, budget / D[j]):
            if all_zero_above and v < 0:
                continue
            x[j] = v
            rest = budget - D[j] * (v - center) ** 2
            if j == 0:
                if not (all_zero_above and v == 0):
                    out.append((tuple(x), bound - rest))
            else:
                visit(j - 1, rest, all_zero_above and v == 0)
        x[j] = 0

    visit(n - 1, Fraction(bound), True)
    return out


def enumerate_below(Q, bound) -> list[tuple[tuple[int, ...], Fraction]]:
    """All x != 0, up to sign, with Q[x] <= bound, sorted by (value, x).

    Vectors are sign-normalized (first nonzero coordinate positive).
    """
    Q = as_form(Q)
    bound = Fraction(bound)
    if bound <= 0:
        return []
    R, U = lll_reduce(Q)
    found = []
    for y, _ in _fincke_pohst(R, bound):
        x = sign_normalized([sum(U[i][k] * y[k] for k in range(len(y))) for i in range(len(y))])
        found.append((x, evaluate(Q, x)))
    found.sort(key=lambda t: (t[1], t[0]))
    return found


def minimal_vectors(Q) -> MinData:
    Q = as_form(Q)
    R, U = lll_reduce(Q)
    bound = min(R[i][i] for i in range(len(R)))
    short = _fincke_pohst(R, bound)
    lam = min(v for _, v in short)
    d = len(Q)
    vecs = []
    for y, v in short:
        if v == lam:
            vecs.append(sign_normalized([sum(U[i][k] * y[k] for k in range(d)) for i in range(d)]))
    return MinData(lam, tuple(sorted(vecs)))


def hermite_invariant(Q) -> Fraction:
    """gamma(Q)^d = lambda_1^d / det(Q)."""
    Q = as_form(Q)
    return minimal_vectors(Q).lambda1 ** len(Q) / det(Q)


def perfection_rank(vectors: Sequence[Sequence[int]]) -> int:
    return rank([dyad_coordinates(x) for x in vectors]) if vectors else 0


def is_perfect(Q) -> bool:
    d = len(Q)
    return perfection_rank(minimal_vectors(Q).vectors) == d * (d + 1) // 2


def scale(Q) -> Fraction:
    """Minimum of the primitive integral multiple of Q."""
    _, s = primitive_integral(as_form(Q))
    return s * minimal_vectors(Q).lambda1


def spans_lattice(vectors: Sequence[Sequence[int]], d: int) -> bool:
    """True iff the integer span of the vectors is Z^d."""
    if not vectors:
        return d == 0
    H = hnf(transpose([list(v) for v in vectors]))
    if len(H[0]) != d:
        return False
    return all(H[i][i] == 1 for i in range(d))


def min_vectors_span(Q) -> bool:
    return spans_lattice(minimal_vectors(Q).vectors, len(Q))


def has_a2_section(Q) -> bool:
    """Is there a pair x, y in Min(Q) with Q[x] = 2 |<x, y>_Q|?"""
    Q = as_form(Q)
    md = minimal_vectors(Q)
    for x, y in combinations(md.vectors, 2):
        if 2 * abs(inner(Q, x, y)) == md.lambda1:
            return True
    return False


def dual_form(Q) -> list[list[Fraction]]:
    return inverse(as_form(Q))


def conjugate(Q, U) -> list[list]:
    """U^T Q U."""
    return mat_mul(transpose(U), mat_mul(Q, U))


def root_lattice_a(d: int) -> list[list[int]]:
    """Gram matrix of A_d: 2 on the diagonal, -1 next to it."""
    return [[2 if i == j else -1 if abs(i - j) == 1 else 0 for j in range(d)] for i in range(d)]
