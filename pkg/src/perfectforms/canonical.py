"""Canonical forms of weighted graphs, quadratic forms and cones.

The graph labeling is a small individualization/refinement search in the style
of nauty: ordered partitions are refined to equitable ones, the search branches
on the first smallest non-singleton cell, and leaves are compared by their
refinement trace followed by the relabeled weight matrix.  Automorphisms found
along the way prune the search and are returned as generators of Aut(graph).
"""

from __future__ import annotations

import heapq
import sys
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Sequence

from .exactla import (
    common_denominator,
    det,
    hnf,
    inverse,
    rank,
    rref,
    solve,
)
from .permgroup import Perm, PermGroup, compose, invert
from .quadform import (
    as_form,
    enumerate_below,
    inner,
    minimal_vectors,
    primitive_integral,
    spans_lattice,
    upper_triangle,
)

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


class SpanDeficient(ValueError):
    pass


class RankDeficient(ValueError):
    pass


# ---------------------------------------------------------------- hashing

def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def int_bytes(x: int) -> bytes:
    """4-byte little-endian length, then little-endian two's complement."""
    n = x.bit_length() // 8 + 1
    return n.to_bytes(4, "little") + x.to_bytes(n, "little", signed=True)


def form_hash(Q: Sequence[Sequence[int]]) -> int:
    d = len(Q)
    data = bytearray([d & 0xFF])
    for x in upper_triangle(Q):
        data += int_bytes(int(x))
    return fnv1a64(bytes(data))


def matrix_hash(M: Sequence[Sequence[Fraction]]) -> int:
    rows = len(M)
    cols = len(M[0]) if M else 0
    data = bytearray(int_bytes(rows) + int_bytes(cols))
    for row in M:
        for x in row:
            x = Fraction(x)
            data += int_bytes(x.numerator) + int_bytes(x.denominator)
    return fnv1a64(bytes(data))


# ---------------------------------------------------------------- graphs

@dataclass(frozen=True)
class Labeling:
    order: tuple[int, ...]          # order[k] is the vertex put in position k
    automorphisms: tuple[Perm, ...]  # generators of the automorphism group
    certificate: tuple               # upper triangle of the relabeled code matrix

    def group(self) -> PermGroup:
        return PermGroup(len(self.order), self.automorphisms)


def relabel(W: Sequence[Sequence], order: Sequence[int]) -> list[list]:
    return [[W[a][b] for b in order] for a in order]


class _Search:
    def __init__(self, codes: list[list[int]]):
        self.C = codes
        self.n = len(codes)
        self.first = None       # (trace, cert, order)
        self.best = None
        self.autos: list[Perm] = []

    # partitions are dicts offset -> list of vertices; offsets are relabeling invariant
    def refine(self, cells: dict[int, list[int]], queue: list[int], trace: list) -> None:
        C = self.C
        queued = set(queue)
        heapq.heapify(queue)
        while queue:
            off = heapq.heappop(queue)
            queued.discard(off)
            splitter = cells.get(off)
            if splitter is None:
                continue
            for coff in sorted(cells):
                cell = cells[coff]
                if len(cell) == 1:
                    continue
                if len(splitter) == 1:
                    w = splitter[0]
                    keys = {v: C[v][w] for v in cell}
                else:
                    keys = {v: tuple(sorted(C[v][w] for w in splitter)) for v in cell}
                distinct = sorted(set(keys.values()))
                if len(distinct) == 1:
                    continue
                groups = {k: [] for k in distinct}
                for v in cell:
                    groups[keys[v]].append(v)
                del cells[coff]
                pos = coff
                frag_info = []
                for k in distinct:
                    frag = groups[k]
                    cells[pos] = frag
                    frag_info.append((k, len(frag)))
                    if pos not in queued:
                        queued.add(pos)
                        heapq.heappush(queue, pos)
                    pos += len(frag)
                trace.append((0, coff, tuple(frag_info)))

    def leaf(self, cells: dict[int, list[int]]) -> tuple[tuple[int, ...], tuple]:
        order = tuple(cells[k][0] for k in sorted(cells))
        C = self.C
        cert = tuple(C[a][b] for i, a in enumerate(order) for b in order[i:])
        return order, cert

    @staticmethod
    def _compare(node_trace: list, leaf_trace: list) -> int:
        """-1/+1 if every descendant trace is below/above leaf_trace, 0 if undecided."""
        for a, b in zip(node_trace, leaf_trace):
            if a != b:
                return -1 if a < b else 1
        if len(node_trace) > len(leaf_trace):
            return 1
        return 0

    def run(self, cells: dict[int, list[int]]) -> None:
        trace: list = []
        self.refine(cells, sorted(cells), trace)
        self.path: list[int] = []
        self.dfs(cells, trace, 0)

    def dfs(self, cells: dict[int, list[int]], trace: list, depth: int) -> int | None:
        """Explore a node; returns a depth to jump back to, or None."""
        target = None
        for off in sorted(cells):
            size = len(cells[off])
            if size > 1 and (target is None or size < len(cells[target])):
                target = off
        if target is None:
            return self.at_leaf(cells, trace)
        cell = sorted(cells[target])
        tried: list[int] = []
        for v in cell:
            if tried and self._in_known_orbit(v, tried):
                continue
            tried.append(v)
            child = {k: list(c) for k, c in cells.items()}
            rest = [w for w in child[target] if w != v]
            child[target] = [v]
            child[target + 1] = rest
            ctrace = trace + [(1, target, len(cell))]
            self.refine(child, [target], ctrace)
            if not self._worth_visiting(ctrace):
                continue
            self.path.append(v)
            jump = self.dfs(child, ctrace, depth + 1)
            self.path.pop()
            if jump is not None and jump < depth:
                return jump
        return None

    def _worth_visiting(self, trace: list) -> bool:
        if self.first is None:
            return True
        if self._compare(trace, self.first[0]) == 0:
            return True
        return self._compare(trace, self.best[0]) <= 0

    def _in_known_orbit(self, v: int, tried: list[int]) -> bool:
        path = self.path
        gens = [g for g in self.autos if all(g[p] == p for p in path)]
        if not gens:
            return False
        seen = {v}
        stack = [v]
        targets = set(tried)
        while stack:
            x = stack.pop()
            if x in targets:
                return True
            for g in gens:
                y = g[x]
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return False

    def at_leaf(self, cells, trace) -> int | None:
        order, cert = self.leaf(cells)
        if self.first is None:
            self.first = (list(trace), cert, order, list(self.path))
            self.best = self.first
            return None
        for ref in (self.first, self.best):
            if ref[0] == trace and ref[1] == cert:
                # order maps position k to vertex; ref_order likewise
                ref_order = ref[2]
                g = [0] * self.n
                for a, b in zip(ref_order, order):
                    g[a] = b
                g = tuple(g)
                if g not in self.autos and any(i != x for i, x in enumerate(g)):
                    self.autos.append(g)
                return self._common_depth(ref[3])
        if (trace, cert) < (self.best[0], self.best[1]):
            self.best = (list(trace), cert, order, list(self.path))
        return None

    def _common_depth(self, other_path: list[int]) -> int:
        k = 0
        for a, b in zip(self.path, other_path):
            if a != b:
                break
            k += 1
        return k


def _weight_codes(W: Sequence[Sequence]) -> list[list[int]]:
    values = sorted({x for row in W for x in row})
    code = {x: i for i, x in enumerate(values)}
    return [[code[x] for x in row] for row in W]


def label_graph(W: Sequence[Sequence]) -> Labeling:
    """Canonical labeling of the complete graph with (symmetric) weights W."""
    n = len(W)
    if n == 0:
        return Labeling((), (), ())
    codes = _weight_codes(W)
    search = _Search(codes)
    diag = sorted({codes[i][i] for i in range(n)})
    cells: dict[int, list[int]] = {}
    off = 0
    for c in diag:
        cell = [i for i in range(n) if codes[i][i] == c]
        cells[off] = cell
        off += len(cell)
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * n + 1000))
    try:
        search.run(cells)
    finally:
        sys.setrecursionlimit(old)
    _, cert, order, _ = search.best
    return Labeling(order, tuple(search.autos), cert)


def canonical_labeling(W: Sequence[Sequence]) -> tuple[int, ...]:
    return label_graph(W).order


def canonical_matrix(W: Sequence[Sequence]) -> list[list]:
    return relabel(W, canonical_labeling(W))


# ---------------------------------------------------------------- quadratic forms

@dataclass(frozen=True)
class CanonicalPQF:
    form: tuple[tuple[int, ...], ...]
    hash: int
    vectors: tuple[tuple[int, ...], ...]   # vertex set used for the graph (one per +- pair)
    absolute: bool                         # True if the absolute graph sufficed
    graph_group: PermGroup = field(compare=False, repr=False)
    sign_factor: int = field(compare=False, repr=False, default=1)

    @property
    def hash_hex(self) -> str:
        return f"{self.hash:016x}"

    @cached_property
    def aut_order(self) -> int:
        """|Aut(Q)|, including -1."""
        return self.graph_group.order() * self.sign_factor


def spanning_vectors(Q) -> list[tuple[int, ...]]:
    """Min(Q) up to sign if it spans Z^d, else all vectors up to the first bound that spans."""
    Q = as_form(Q)
    d = len(Q)
    md = minimal_vectors(Q)
    if spans_lattice(md.vectors, d):
        return list(md.vectors)
    bound = md.lambda1
    for _ in range(64):
        found = enumerate_below(Q, bound * 2)
        values = sorted({v for _, v in found if v > bound})
        for value in values:
            vecs = [x for x, v in found if v <= value]
            if spans_lattice(vecs, d):
                return sorted(vecs)
        bound *= 2
    raise SpanDeficient("no spanning set of short vectors found")


def _integer_graph(Q, vectors: Sequence[Sequence[int]]) -> tuple[list[list[int]], int]:
    """(den * v_i^T Q v_j, den) with den the common denominator of Q."""
    Q = as_form(Q)
    d = len(Q)
    den = common_denominator(x for row in Q for x in row)
    iQ = [[int(x * den) for x in row] for row in Q]
    images = [[sum(iQ[i][k] * v[k] for k in range(d) if v[k]) for i in range(d)] for v in vectors]
    n = len(vectors)
    W = [[0] * n for _ in range(n)]
    for i in range(n):
        u = vectors[i]
        for j in range(i, n):
            W[i][j] = W[j][i] = sum(a * b for a, b in zip(u, images[j]) if a)
    return W, den


def pqf_graph(Q, vectors: Sequence[Sequence[int]], absolute: bool) -> list[list[Fraction]]:
    W, den = _integer_graph(Q, vectors)
    return [[Fraction(abs(w) if absolute else w, den) for w in row] for row in W]


def _doubled_graph(signed: list[list]) -> list[list]:
    """Graph on vectors followed by their negatives, from the graph on the vectors."""
    n = len(signed)
    return [[signed[a % n][b % n] if (a < n) == (b < n) else -signed[a % n][b % n]
             for b in range(2 * n)] for a in range(2 * n)]


def _lift_signs(signed: list[list[Fraction]], perm: Perm) -> list[int] | None:
    """Signs e with e_i e_j s(i,j) = s(p(i), p(j)) for all i, j, if they exist."""
    n = len(perm)
    eps = [0] * n
    for root in range(n):
        if eps[root]:
            continue
        eps[root] = 1
        stack = [root]
        while stack:
            i = stack.pop()
            for j in range(n):
                s = signed[i][j]
                if s == 0 or i == j:
                    continue
                t = signed[perm[i]][perm[j]]
                want = eps[i] * (1 if s * t > 0 else -1)
                if eps[j] == 0:
                    eps[j] = want
                    stack.append(j)
    for i in range(n):
        for j in range(i, n):
            if eps[i] * eps[j] * signed[i][j] != signed[perm[i]][perm[j]]:
                return None
    return eps


def _bfs_signs(absW: list[list[Fraction]], signed: list[list[Fraction]], order: Sequence[int]) -> list[int]:
    """Sign choice per vertex, canonical given the order: breadth-first trees in order,
    each newly reached vertex made to have positive product with its discoverer."""
    sign = {}
    for root in order:
        if root in sign:
            continue
        sign[root] = 1
        queue = [root]
        for a in queue:
            for b in order:
                if b in sign or absW[a][b] == 0:
                    continue
                sign[b] = sign[a] if signed[a][b] > 0 else -sign[a]
                queue.append(b)
    return [sign[v] for v in range(len(order))]


def _basis_form(gram: list[list[int]], d: int) -> list[list[int]]:
    """Positive multiple of the form in the Hermite basis of the lattice spanned by the ordered vectors."""
    n = len(gram)
    chosen: list[int] = []
    for k in range(n):
        trial = chosen + [k]
        if rank([[gram[a][b] for b in trial] for a in trial]) == len(trial):
            chosen = trial
            if len(chosen) == d:
                break
    if len(chosen) < d:
        raise SpanDeficient("vectors do not span")
    g0 = [[gram[a][b] for b in chosen] for a in chosen]
    # coordinates in the chosen vectors, scaled by det(g0) > 0 to stay integral;
    # a positive scale does not change the Hermite basis up to the same factor
    D = det(g0)
    adj = [[int(x * D) for x in row] for row in inverse(g0)]
    icoords = [[sum(adj[a][c] * gram[chosen[c]][k] for c in range(d)) for k in range(n)] for a in range(d)]
    H = hnf(icoords)
    GH = [[sum(g0[a][c] * H[c][b] for c in range(d)) for b in range(d)] for a in range(d)]
    return [[sum(H[c][a] * GH[c][b] for c in range(d)) for b in range(d)] for a in range(d)]


def canonical_pqf(Q) -> CanonicalPQF:
    Q = as_form(Q)
    d = len(Q)
    vecs = spanning_vectors(Q)
    signed, _ = _integer_graph(Q, vecs)
    absW = [[abs(x) for x in row] for row in signed]
    lab = label_graph(absW)
    lifts = all(_lift_signs(signed, g) is not None for g in lab.automorphisms)
    if lifts:
        eps = _bfs_signs(absW, signed, lab.order)
        ordered = [[eps[a] * eps[b] * signed[a][b] for b in lab.order] for a in lab.order]
        group, factor = lab.group(), 2 ** _count_components(absW)
    else:
        fullW = _doubled_graph(signed)
        flab = label_graph(fullW)
        ordered = relabel(fullW, flab.order)
        group, factor = flab.group(), 1
    form = _basis_form(ordered, d)
    integral, _ = primitive_integral(form)
    key = tuple(tuple(row) for row in integral)
    return CanonicalPQF(key, form_hash(integral), tuple(vecs), lifts, group, factor)


def _count_components(W: list[list[Fraction]]) -> int:
    n = len(W)
    seen = [False] * n
    count = 0
    for r in range(n):
        if seen[r]:
            continue
        count += 1
        seen[r] = True
        stack = [r]
        while stack:
            a = stack.pop()
            for b in range(n):
                if not seen[b] and W[a][b] != 0:
                    seen[b] = True
                    stack.append(b)
    return count


def form_automorphism_generators(Q) -> tuple[list[tuple[int, ...]], PermGroup]:
    """Generators of Aut(Q)/{+-1} acting on the +-pairs of the spanning vector set.

    Returns the vector list and the permutation group on its indices.
    """
    Q = as_form(Q)
    vecs = spanning_vectors(Q)
    signed, _ = _integer_graph(Q, vecs)
    absW = [[abs(x) for x in row] for row in signed]
    lab = label_graph(absW)
    if all(_lift_signs(signed, g) is not None for g in lab.automorphisms):
        return vecs, lab.group()
    n = len(vecs)
    flab = label_graph(_doubled_graph(signed))
    gens = [tuple(g[i] % n for i in range(n)) for g in flab.automorphisms]
    return vecs, PermGroup(n, gens)


def aut_order(Q) -> int:
    return canonical_pqf(Q).aut_order


# ---------------------------------------------------------------- cones

def _ray_weights(V: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(V[0])
    S = [[Fraction(sum(v[i] * v[j] for v in V)) for j in range(n)] for i in range(n)]
    try:
        Sinv = inverse(S)
    except ZeroDivisionError:
        raise RankDeficient("rays do not span the ambient space") from None
    SV = [[sum(Sinv[i][k] * v[k] for k in range(n)) for i in range(n)] for v in V]
    m = len(V)
    return [[sum(V[a][i] * SV[b][i] for i in range(n)) for b in range(m)] for a in range(m)]


@dataclass(frozen=True)
class CanonicalCone:
    order: tuple[int, ...]
    matrix: tuple[tuple[Fraction, ...], ...]
    hash: int
    labeling: Labeling


def canonical_cone(V: Sequence[Sequence]) -> CanonicalCone:
    """Canonical representative of a ray set up to linear maps permuting the rays."""
    if not V:
        raise RankDeficient("no rays")
    W = _ray_weights(V)
    lab = label_graph(W)
    X = [[V[k][i] for k in lab.order] for i in range(len(V[0]))]
    R, _ = rref(X)
    M = tuple(tuple(row) for row in R)
    return CanonicalCone(lab.order, M, matrix_hash(M), lab)


def _linear_map(V: Sequence[Sequence], perm: Sequence[int]) -> list[list[Fraction]] | None:
    """B with B v_i = v_perm(i) for all i, or None."""
    n = len(V[0])
    chosen: list[int] = []
    for k in range(len(V)):
        if rank([V[i] for i in chosen + [k]]) == len(chosen) + 1:
            chosen.append(k)
            if len(chosen) == n:
                break
    A = [list(V[i]) for i in chosen]        # rows v_i
    rows = []
    for r in range(n):
        rows.append(solve(A, [V[perm[i]][r] for i in chosen]))
    for i, v in enumerate(V):
        image = [sum(rows[r][c] * v[c] for c in range(n)) for r in range(n)]
        if image != [Fraction(x) for x in V[perm[i]]]:
            return None
    return rows


def linear_automorphisms(V: Sequence[Sequence]) -> PermGroup:
    """Permutations of the rays induced by invertible linear maps of the ambient space."""
    W = _ray_weights(V)
    lab = label_graph(W)
    for g in lab.automorphisms:
        if _linear_map(V, g) is None:
            raise AssertionError("graph automorphism is not induced by a linear map")
    return lab.group()
