"""Exact rational and integer linear algebra.

Matrices are lists of rows.  Rational entries are :class:`fractions.Fraction`,
integer matrices hold plain Python ints.  Nothing in here mutates its inputs.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd, isqrt
from typing import Sequence

Rat = Fraction

#: Largest prime below 2**31 (the Mersenne prime 2**31 - 1).
DEFAULT_PRIME = 2147483647


class NonSquare(ValueError):
    pass


class WrongCorank(ValueError):
    pass


class LiftFailed(ValueError):
    pass


class NotPositiveDefinite(ValueError):
    pass


def as_rational(M: Sequence[Sequence]) -> list[list[Fraction]]:
    return [[Fraction(x) for x in row] for row in M]


def identity(n: int) -> list[list[int]]:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def transpose(M: Sequence[Sequence]) -> list[list]:
    if not M:
        return []
    return [list(col) for col in zip(*M)]


def mat_mul(A: Sequence[Sequence], B: Sequence[Sequence]) -> list[list]:
    Bt = list(zip(*B))
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def mat_vec(A: Sequence[Sequence], v: Sequence) -> list:
    return [sum(a * x for a, x in zip(row, v)) for row in A]


def dot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v))


def congruent(Q: Sequence[Sequence], U: Sequence[Sequence]) -> list[list]:
    """Return U^T Q U."""
    return mat_mul(transpose(U), mat_mul(Q, U))


def lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b) if a and b else 0


def common_denominator(values) -> int:
    return reduce(lcm, (Fraction(v).denominator for v in values), 1)


def content(values) -> int:
    return reduce(gcd, (int(v) for v in values), 0)


def primitive(v: Sequence) -> tuple[int, ...]:
    """Scale a nonzero rational vector to a primitive integer vector (same direction)."""
    den = common_denominator(v)
    ints = [int(Fraction(x) * den) for x in v]
    g = content(ints)
    if g == 0:
        raise ValueError("zero vector has no primitive representative")
    return tuple(x // g for x in ints)


def sign_normalized(v: Sequence[int]) -> tuple[int, ...]:
    """Flip v so that its first nonzero coordinate is positive."""
    for x in v:
        if x:
            return tuple(v) if x > 0 else tuple(-y for y in v)
    return tuple(v)


def _integer_rows(M: Sequence[Sequence]) -> tuple[list[list[int]], list[int]]:
    rows, mults = [], []
    for row in M:
        den = common_denominator(row)
        rows.append([int(Fraction(x) * den) for x in row])
        mults.append(den)
    return rows, mults


def _bareiss(rows: list[list[int]]) -> tuple[list[list[int]], list[int], int]:
    """Fraction-free row echelon form of an integer matrix (in place).

    Returns the rows, the pivot columns, and the sign of the row permutation.
    """
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    prev = 1
    r = 0
    sign = 1
    pivots = []
    for c in range(ncols):
        if r == nrows:
            break
        p = next((i for i in range(r, nrows) if rows[i][c]), None)
        if p is None:
            continue
        if p != r:
            rows[r], rows[p] = rows[p], rows[r]
            sign = -sign
        piv = rows[r][c]
        for i in range(r + 1, nrows):
            ri = rows[i]
            a = ri[c]
            rr = rows[r]
            rows[i] = [(piv * ri[j] - a * rr[j]) // prev for j in range(ncols)]
        prev = piv
        pivots.append(c)
        r += 1
    return rows, pivots, sign


def rank(M: Sequence[Sequence]) -> int:
    """Rank over Q by fraction-free elimination."""
    if not M or not M[0]:
        return 0
    rows, _ = _integer_rows(M)
    _, pivots, _ = _bareiss(rows)
    return len(pivots)


def det(M: Sequence[Sequence]) -> Fraction:
    """Exact determinant via Bareiss elimination."""
    n = len(M)
    if any(len(row) != n for row in M):
        raise NonSquare(f"expected a square matrix, got {n} rows of lengths {[len(r) for r in M]}")
    if n == 0:
        return Fraction(1)
    rows, mults = _integer_rows(M)
    rows, pivots, sign = _bareiss(rows)
    if len(pivots) < n:
        return Fraction(0)
    scale = reduce(lambda a, b: a * b, mults, 1)
    return Fraction(sign * rows[n - 1][n - 1], scale)


def rref(M: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over Q; zero rows dropped."""
    A = as_rational(M)
    nrows = len(A)
    ncols = len(A[0]) if A else 0
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, nrows) if A[i][c]), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(nrows):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return A[:r], pivots


def kernel_basis(M: Sequence[Sequence], ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of the right kernel {v : M v = 0} over Q."""
    if ncols is None:
        ncols = len(M[0]) if M else 0
    R, pivots = rref(M) if M else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in zip(R, pivots):
            v[pc] = -row[f]
        basis.append(v)
    return basis


def kernel_vector(M: Sequence[Sequence], ncols: int | None = None) -> tuple[int, ...]:
    """The primitive integer generator of a one-dimensional kernel.

    Sign convention: first nonzero coordinate positive.
    """
    basis = kernel_basis(M, ncols)
    if len(basis) != 1:
        raise WrongCorank(f"kernel has dimension {len(basis)}, expected 1")
    return sign_normalized(primitive(basis[0]))


def kernel_vector_mod_p(M: Sequence[Sequence[int]], p: int = DEFAULT_PRIME,
                        ncols: int | None = None) -> list[int]:
    """Kernel vector of an integer matrix over F_p, free coordinate set to 1."""
    if ncols is None:
        ncols = len(M[0]) if M else 0
    A = [[x % p for x in row] for row in M]
    nrows = len(A)
    pivots = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = pow(A[r][c], p - 2, p)
        A[r] = [x * inv % p for x in A[r]]
        rr = A[r]
        for i in range(nrows):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [(x - f * y) % p for x, y in zip(A[i], rr)]
        pivots.append(c)
        r += 1
    free = [c for c in range(ncols) if c not in pivots]
    if len(free) != 1:
        raise WrongCorank(f"kernel mod {p} has dimension {len(free)}, expected 1")
    f = free[0]
    v = [0] * ncols
    v[f] = 1
    for row, pc in zip(A, pivots):
        v[pc] = -row[f] % p
    return v


def rational_lift(a: int, p: int = DEFAULT_PRIME) -> Fraction:
    """Recover b/c from a = b * c^-1 (mod p) with |b|, |c| <= sqrt(p/2).

    Runs the extended Euclidean algorithm on (p, a), i.e. reduces the
    two-dimensional lattice spanned by (p, 0) and (a, 1), stopping at the first
    remainder below the bound.
    """
    a %= p
    bound = isqrt(p // 2)
    r0, r1 = p, a
    t0, t1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        t0, t1 = t1, t0 - q * t1
    if t1 == 0 or abs(t1) > bound or gcd(r1, abs(t1)) != 1:
        raise LiftFailed(f"{a} mod {p} has no small rational preimage")
    return Fraction(r1, t1)


def kernel_vector_modular(M: Sequence[Sequence[int]], p: int = DEFAULT_PRIME,
                          ncols: int | None = None) -> tuple[int, ...]:
    """Primitive kernel vector through F_p and rational lifting, verified exactly.

    Raises WrongCorank or LiftFailed when the modular route does not produce a
    verified kernel vector; callers fall back to :func:`kernel_vector`.
    """
    v = kernel_vector_mod_p(M, p, ncols)
    lifted = [rational_lift(x, p) for x in v]
    w = sign_normalized(primitive(lifted))
    if any(dot(row, w) for row in M):
        raise LiftFailed("lifted vector is not in the kernel")
    return w


def hnf(M: Sequence[Sequence[int]]) -> list[list[int]]:
    """Column-style Hermite normal form.

    The columns of the result form a basis of the integer span of the columns of
    M.  The result is lower triangular in echelon sense: column k has its pivot
    in row p_k (p_0 < p_1 < ...), pivots are positive, and entries of row p_k to
    the left of the pivot lie in [0, pivot).
    """
    if not M or not M[0]:
        return [list(row)[:0] for row in M]
    rows = row_hnf(transpose(M))
    if not rows:
        return [[] for _ in M]
    return transpose(rows)


def row_hnf(A: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row-style Hermite normal form (nonzero rows only)."""
    rows = [list(map(int, r)) for r in A]
    if not rows:
        return []
    ncols = len(rows[0])
    r = 0
    pivots = []
    for c in range(ncols):
        nz = [i for i in range(r, len(rows)) if rows[i][c]]
        if not nz:
            continue
        # gcd-combine all rows with nonzero entry in column c into row r
        while True:
            nz = [i for i in range(r, len(rows)) if rows[i][c]]
            if len(nz) == 1:
                break
            i_min = min(nz, key=lambda i: abs(rows[i][c]))
            rows[r], rows[i_min] = rows[i_min], rows[r]
            piv = rows[r][c]
            for i in range(r + 1, len(rows)):
                if rows[i][c]:
                    q = rows[i][c] // piv
                    rows[i] = [x - q * y for x, y in zip(rows[i], rows[r])]
        i = nz[0]
        rows[r], rows[i] = rows[i], rows[r]
        if rows[r][c] < 0:
            rows[r] = [-x for x in rows[r]]
        piv = rows[r][c]
        for i in range(r):
            q = rows[i][c] // piv
            if q:
                rows[i] = [x - q * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r]


def inverse(M: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(M)
    if any(len(row) != n for row in M):
        raise NonSquare("inverse of a non-square matrix")
    aug = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(M)]
    R, pivots = rref(aug)
    if pivots[:n] != list(range(n)) or len(R) < n:
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in R]


def solve(M: Sequence[Sequence], b: Sequence) -> list[Fraction]:
    """Unique solution of the square system M x = b."""
    n = len(M)
    aug = [list(map(Fraction, row)) + [Fraction(bi)] for row, bi in zip(M, b)]
    R, pivots = rref(aug)
    if pivots != list(range(n)):
        raise ZeroDivisionError("system is singular")
    return [row[n] for row in R]


def ldl(Q: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[Fraction]]:
    """Square-root free Cholesky: Q = L D L^T with L unit lower triangular.

    Raises NotPositiveDefinite at the first pivot that is not positive.
    """
    n = len(Q)
    if any(len(row) != n for row in Q):
        raise NonSquare("LDL^T of a non-square matrix")
    L = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    D: list[Fraction] = []
    for j in range(n):
        dj = Fraction(Q[j][j]) - sum(L[j][k] ** 2 * D[k] for k in range(j))
        if dj <= 0:
            raise NotPositiveDefinite(f"pivot {j} is {'zero' if dj == 0 else 'negative'}")
        D.append(dj)
        for i in range(j + 1, n):
            s = Fraction(Q[i][j]) - sum(L[i][k] * L[j][k] * D[k] for k in range(j))
            L[i][j] = s / dj
    return L, D


def is_positive_definite(Q: Sequence[Sequence]) -> bool:
    try:
        ldl(Q)
    except NotPositiveDefinite:
        return False
    return True
