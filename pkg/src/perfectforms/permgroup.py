"""Permutation groups on {0, ..., m-1}.

Permutations are tuples ``p`` with ``p[i]`` the image of ``i``.  Sets of points
(face incidences) are passed as any iterable of ints and returned as frozensets.
Stabilizer chains are built by a deterministic Schreier-Sims over a full base
(every point is a base point, possibly with a trivial basic orbit), so the chain
for a given base order is unique and lookups are reproducible.
"""

from __future__ import annotations

from typing import Iterable, Sequence

Perm = tuple[int, ...]

ORBIT_CAP = 10 ** 7
LAYER_THRESHOLD = 500
# limits for the two stabilizer-aided strategies of the minimal image search
_ORBIT_ENUM_LIMIT = 200_000
_ORBIT_SMALL = 20_000
_STAB_ENUM_LIMIT = 50_000


class OrbitTooLarge(RuntimeError):
    pass


def identity_perm(m: int) -> Perm:
    return tuple(range(m))


def compose(f: Sequence[int], g: Sequence[int]) -> Perm:
    """f o g, i.e. apply g first."""
    return tuple(f[x] for x in g)


def invert(p: Sequence[int]) -> Perm:
    r = [0] * len(p)
    for i, x in enumerate(p):
        r[x] = i
    return tuple(r)


def is_identity(p: Sequence[int]) -> bool:
    return all(i == x for i, x in enumerate(p))


def image(p: Sequence[int], S: Iterable[int]) -> frozenset[int]:
    return frozenset(p[i] for i in S)


def mask_of(S: Iterable[int]) -> int:
    m = 0
    for i in S:
        m |= 1 << i
    return m


def points_of(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def mask_image(p: Sequence[int], mask: int) -> int:
    r = 0
    while mask:
        low = mask & -mask
        r |= 1 << p[low.bit_length() - 1]
        mask ^= low
    return r


def mask_table(p: Sequence[int]) -> list[list[int]]:
    """Byte lookup tables so that apply_table(mask_table(p), S) == mask_image(p, S)."""
    m = len(p)
    tables = []
    for base in range(0, m, 8):
        imgs = [1 << p[base + k] if base + k < m else 0 for k in range(8)]
        t = [0] * 256
        for b in range(1, 256):
            low = b & -b
            t[b] = t[b ^ low] | imgs[low.bit_length() - 1]
        tables.append(t)
    return tables


def apply_table(tables: list[list[int]], mask: int) -> int:
    r = 0
    k = 0
    while mask:
        r |= tables[k][mask & 255]
        mask >>= 8
        k += 1
    return r


def sorted_key(mask: int) -> tuple[int, ...]:
    return tuple(points_of(mask))


class _Level:
    __slots__ = ("point", "gens", "trans")

    def __init__(self, point: int):
        self.point = point
        self.gens: list[Perm] = []
        self.trans: dict[int, Perm] = {}

    def rebuild(self, m: int) -> None:
        b = self.point
        trans = {b: identity_perm(m)}
        queue = [b]
        for x in queue:
            ux = trans[x]
            for g in self.gens:
                y = g[x]
                if y not in trans:
                    trans[y] = compose(g, ux)
                    queue.append(y)
        self.trans = trans


class StabChain:
    """Stabilizer chain for a full base.  Level i is the pointwise stabilizer of base[:i]."""

    def __init__(self, m: int, generators: Sequence[Perm], base: Sequence[int]):
        self.m = m
        self.base = list(base)
        self.levels = [_Level(b) for b in self.base]
        self._orbit_partitions: dict[int, list[int]] = {}
        self._build(list(generators))
        self._uinv: list[dict[int, Perm]] = [dict() for _ in self.levels]
        self._uinv_tables: list[dict[int, list]] = [dict() for _ in self.levels]
        self._orbit_masks = [mask_of(lev.trans) for lev in self.levels]

    def uinv(self, i: int, x: int) -> Perm:
        """Inverse of the transversal element of level i sending base[i] to x."""
        u = self._uinv[i].get(x)
        if u is None:
            u = invert(self.levels[i].trans[x])
            self._uinv[i][x] = u
        return u

    def uinv_table(self, i: int, x: int) -> list:
        t = self._uinv_tables[i].get(x)
        if t is None:
            t = mask_table(self.uinv(i, x))
            self._uinv_tables[i][x] = t
        return t

    def orbit_mask(self, i: int) -> int:
        return self._orbit_masks[i]

    def last_nontrivial(self) -> int:
        return max((i for i, lev in enumerate(self.levels) if len(lev.trans) > 1), default=-1)

    def _build(self, gens: list[Perm]) -> None:
        m = self.m
        for lev_idx, lev in enumerate(self.levels):
            fixed = self.base[:lev_idx]
            lev.gens = [g for g in gens if all(g[b] == b for b in fixed)]
        for lev in self.levels:
            lev.rebuild(m)
        i = len(self.levels) - 1
        while i >= 0:
            added = self._check_level(i)
            if added is None:
                i -= 1
            else:
                i = added

    def _check_level(self, i: int) -> int | None:
        lev = self.levels[i]
        trans = lev.trans
        b = lev.point
        for x, ux in list(trans.items()):
            for s in lev.gens:
                y = s[x]
                h = compose(invert(trans[y]), compose(s, ux))
                if h[b] != b:
                    raise AssertionError("Schreier generator does not fix the base point")
                residue, j = self.sift(h, i + 1)
                if j < len(self.levels):
                    for l in range(i + 1, j + 1):
                        self.levels[l].gens.append(residue)
                        self.levels[l].rebuild(self.m)
                    return j
        return None

    def sift(self, g: Perm, start: int = 0) -> tuple[Perm, int]:
        """Strip g through levels start..; returns (residue, level where it stuck)."""
        for i in range(start, len(self.levels)):
            lev = self.levels[i]
            x = g[lev.point]
            u = lev.trans.get(x)
            if u is None:
                return g, i
            if x != lev.point:
                g = compose(invert(u), g)
        if not is_identity(g):
            raise AssertionError("sift through a full base left a non-identity residue")
        return g, len(self.levels)

    def order(self) -> int:
        n = 1
        for lev in self.levels:
            n *= len(lev.trans)
        return n

    def contains(self, g: Perm) -> bool:
        for lev in self.levels:
            u = lev.trans.get(g[lev.point])
            if u is None:
                return False
            g = compose(invert(u), g)
        return True

    def strong_generators(self) -> list[Perm]:
        seen, out = set(), []
        for lev in self.levels:
            for g in lev.gens:
                if g not in seen:
                    seen.add(g)
                    out.append(g)
        return out

    def orbit_partition(self, i: int) -> list[int]:
        """Orbit labels (smallest orbit point) of level i's group on all points."""
        part = self._orbit_partitions.get(i)
        if part is None:
            gens = self.levels[i].gens if i < len(self.levels) else []
            part = _orbit_labels(self.m, gens)
            self._orbit_partitions[i] = part
        return part

    def elements(self) -> Iterable[Perm]:
        """Every group element (use only for small groups)."""
        def rec(i: int, prefix: Perm):
            if i == len(self.levels):
                yield prefix
                return
            for u in self.levels[i].trans.values():
                yield from rec(i + 1, compose(prefix, u))
        yield from rec(0, identity_perm(self.m))


def _orbit_labels(m: int, gens: Sequence[Perm]) -> list[int]:
    label = list(range(m))

    def find(x: int) -> int:
        while label[x] != x:
            label[x] = label[label[x]]
            x = label[x]
        return x

    for g in gens:
        for i in range(m):
            a, b = find(i), find(g[i])
            if a != b:
                if a < b:
                    label[b] = a
                else:
                    label[a] = b
    return [find(i) for i in range(m)]


class PermGroup:
    """A permutation group given by generators; chains are computed lazily and cached per base."""

    def __init__(self, degree: int, generators: Iterable[Sequence[int]] = ()):
        self.degree = degree
        gens: list[Perm] = []
        seen = set()
        for g in generators:
            g = tuple(int(x) for x in g)
            if len(g) != degree or sorted(g) != list(range(degree)):
                raise ValueError(f"not a permutation of {degree} points: {g}")
            if not is_identity(g) and g not in seen:
                seen.add(g)
                gens.append(g)
        self.generators: tuple[Perm, ...] = tuple(gens)
        self._chains: dict[tuple[int, ...], StabChain] = {}
        self._order: int | None = None
        self._tables: list | None = None

    def tables(self) -> list:
        """Byte lookup tables of the generators, for fast action on masks."""
        if self._tables is None:
            self._tables = [mask_table(g) for g in self.generators]
        return self._tables

    def __repr__(self) -> str:
        return f"PermGroup(degree={self.degree}, generators={len(self.generators)})"

    @classmethod
    def trivial(cls, degree: int) -> "PermGroup":
        return cls(degree, ())

    @classmethod
    def symmetric(cls, degree: int) -> "PermGroup":
        gens = []
        if degree >= 2:
            gens.append((1, 0) + tuple(range(2, degree)))
        if degree >= 3:
            gens.append(tuple(range(1, degree)) + (0,))
        return cls(degree, gens)

    def chain(self, base_prefix: Sequence[int] = ()) -> StabChain:
        prefix = tuple(base_prefix)
        ch = self._chains.get(prefix)
        if ch is None:
            in_prefix = set(prefix)
            base = list(prefix) + [i for i in range(self.degree) if i not in in_prefix]
            ch = StabChain(self.degree, self.generators, base)
            self._chains[prefix] = ch
        return ch

    def order(self) -> int:
        if self._order is None:
            self._order = self.chain().order()
        return self._order

    def is_trivial(self) -> bool:
        return not self.generators

    def contains(self, g: Sequence[int]) -> bool:
        return self.chain().contains(tuple(g))

    def elements(self) -> Iterable[Perm]:
        return self.chain().elements()

    def orbits(self) -> list[list[int]]:
        labels = _orbit_labels(self.degree, self.generators)
        groups: dict[int, list[int]] = {}
        for i, l in enumerate(labels):
            groups.setdefault(l, []).append(i)
        return list(groups.values())

    def restricted(self, points: Sequence[int]) -> "PermGroup":
        """Action on an invariant subset; point points[k] becomes k."""
        pos = {p: k for k, p in enumerate(points)}
        gens = []
        for g in self.generators:
            gens.append(tuple(pos[g[p]] for p in points))
        return PermGroup(len(points), gens)


def group_order(G: PermGroup) -> int:
    return G.order()


def orbit(G: PermGroup, S: Iterable[int], cap: int = ORBIT_CAP) -> list[frozenset[int]]:
    return [frozenset(points_of(x)) for x in orbit_masks(G, mask_of(S), cap)]


def orbit_masks(G: PermGroup, mask: int, cap: int = ORBIT_CAP) -> list[int]:
    seen = {mask}
    queue = [mask]
    tables = G.tables()
    for x in queue:
        for tab in tables:
            y = apply_table(tab, x)
            if y not in seen:
                seen.add(y)
                queue.append(y)
                if len(seen) > cap:
                    raise OrbitTooLarge(f"orbit exceeds {cap} elements")
    return queue


def _orbit_with_elements(G: PermGroup, mask: int, cap: int) -> tuple[int, Perm]:
    """Smallest element of the orbit of mask, with some g mapping mask onto it."""
    tables = G.tables()
    parent: dict[int, tuple[int, int]] = {mask: (-1, -1)}
    queue = [mask]
    for x in queue:
        for k, tab in enumerate(tables):
            y = apply_table(tab, x)
            if y not in parent:
                parent[y] = (x, k)
                queue.append(y)
                if len(parent) > cap:
                    raise OrbitTooLarge(f"orbit exceeds {cap} elements")
    best = min(parent, key=sorted_key)
    word = []
    x = best
    while parent[x][0] != -1:
        x, k = parent[x]
        word.append(k)
    g = identity_perm(G.degree)
    for k in reversed(word):
        g = compose(G.generators[k], g)
    return best, g


def canonical_image_with_element(G: PermGroup, S: Iterable[int]) -> tuple[frozenset[int], Perm]:
    mask, g = _min_image(G, mask_of(S), want_element=True)
    return frozenset(points_of(mask)), g


def canonical_image(G: PermGroup, S: Iterable[int]) -> frozenset[int]:
    return frozenset(points_of(_min_image(G, mask_of(S))[0]))


def canonical_mask(G: PermGroup, mask: int) -> int:
    return _min_image(G, mask)[0]


def _min_image(G: PermGroup, mask: int, want_element: bool = False) -> tuple[int, Perm | None]:
    """Lexicographically smallest image (sets compared as sorted tuples).

    Layered search down the natural-order stabilizer chain: after level i the
    candidates realise the best achievable membership pattern of 0..i, and each
    carries the remaining freedom of the pointwise stabilizer of 0..i.  When a
    layer grows past LAYER_THRESHOLD the set stabilizer H is computed and either
    the orbit is listed outright (when small) or candidates are merged by their
    (stabilizer-chain coset, H) double coset.  Candidates carry the word of
    transversal choices; group elements are only rebuilt when needed.
    """
    m = G.degree
    ident = identity_perm(m)
    if G.is_trivial() or mask == 0:
        return mask, ident
    ch = G.chain()
    size = bin(mask).count("1")
    # candidate: key -> (image mask, word of (level, point) choices)
    cands: dict = {mask: (mask, ())}
    stab_elements: list[Perm] | None = None
    tried_stabilizer = False
    last = ch.last_nontrivial()

    def preimage(word: tuple, x: int) -> int:
        # g = uinv_k o ... o uinv_1, so g^-1(x) = u_1(...u_k(x))
        for lvl, y in reversed(word):
            x = ch.levels[lvl].trans[y][x]
        return x

    def key_of(T2: int, word: tuple) -> object:
        if stab_elements is None:
            return T2
        pts = [preimage(word, b) for b in range(word[-1][0] + 1)] if word else []
        return min(tuple(h[p] for p in pts) for h in stab_elements)

    for i in range(last + 1):
        lev = ch.levels[i]
        omask = ch.orbit_mask(i)
        hitting = [c for c in cands.values() if c[0] & omask]
        new: dict = {}
        for T, word in (hitting or cands.values()):
            choices = points_of(T & omask) if hitting else list(lev.trans)
            for x in choices:
                T2 = apply_table(ch.uinv_table(i, x), T) if x != i else T
                w2 = word + ((i, x),)
                k = key_of(T2, w2)
                if k not in new:
                    new[k] = (T2, w2)
        cands = new
        # once every point of the image is placed the answer is fixed
        low = (2 << i) - 1
        if any(bin(T & low).count("1") == size for T, _ in cands.values()):
            break
        if len(cands) > LAYER_THRESHOLD and not tried_stabilizer:
            tried_stabilizer = True
            H = set_stabilizer(G, points_of(mask))
            orbit_size = G.order() // H.order()
            if orbit_size <= _ORBIT_SMALL or (H.order() > _STAB_ENUM_LIMIT
                                               and orbit_size <= _ORBIT_ENUM_LIMIT):
                return _orbit_with_elements(G, mask, orbit_size + 1)
            if H.order() <= _STAB_ENUM_LIMIT:
                stab_elements = list(H.elements())
                regrouped: dict = {}
                for T2, w2 in cands.values():
                    k = key_of(T2, w2)
                    if k not in regrouped:
                        regrouped[k] = (T2, w2)
                cands = regrouped
    best_T, best_w = min(cands.values(), key=lambda c: sorted_key(c[0]))
    if not want_element:
        return best_T, None
    g = ident
    for lvl, x in best_w:
        g = compose(ch.uinv(lvl, x), g)
    return best_T, g


def are_equivalent(G: PermGroup, S: Iterable[int], T: Iterable[int]) -> Perm | None:
    """Some sigma in G with sigma(S) = T, or None."""
    S, T = frozenset(S), frozenset(T)
    if len(S) != len(T):
        return None
    cs, gs = canonical_image_with_element(G, S)
    ct, gt = canonical_image_with_element(G, T)
    if cs != ct:
        return None
    return compose(invert(gt), gs)


def set_stabilizer(G: PermGroup, S: Iterable[int]) -> PermGroup:
    """Setwise stabilizer of S by a backtrack over a chain whose base starts with S."""
    pts = sorted(set(S))
    m = G.degree
    if not pts or len(pts) == m:
        return G
    if G.is_trivial():
        return G
    smask = mask_of(pts)
    ch = G.chain(pts)
    k = len(pts)
    levels = ch.levels
    # pointwise stabilizer of S is contained in the answer
    gens: list[Perm] = list(levels[k].gens) if k < len(levels) else []

    def consistent(p: Perm, l: int) -> bool:
        """Can some h in level l's group satisfy (p o h)(S) = S?"""
        part = ch.orbit_partition(l)
        pinv = invert(p)
        need = {}
        for x in pts:
            need[part[x]] = need.get(part[x], 0) + 1
        for x in pts:
            lbl = part[pinv[x]]
            c = need.get(lbl, 0) - 1
            if c < 0:
                return False
            need[lbl] = c
        return True

    def search(l: int, p: Perm) -> Perm | None:
        if l == k:
            return p
        for y, u in levels[l].trans.items():
            if not (smask >> p[y]) & 1:
                continue
            q = compose(p, u)
            if not consistent(q, l + 1):
                continue
            r = search(l + 1, q)
            if r is not None:
                return r
        return None

    for j in range(k - 1, -1, -1):
        lev = levels[j]
        b = lev.point
        known = _orbit_labels(m, gens)
        below = known
        reached = {known[b]}
        failed: set[int] = set()
        for y, u in sorted(lev.trans.items()):
            if y == b or not (smask >> y) & 1:
                continue
            if known[y] in reached or below[y] in failed:
                continue
            g = None
            if consistent(u, j + 1):
                g = search(j + 1, u)
            if g is None:
                failed.add(below[y])
                continue
            gens.append(g)
            known = _orbit_labels(m, gens)
            reached = {known[b]}
    return PermGroup(m, gens)


def double_coset_split(G1: PermGroup, G2: PermGroup, S: Iterable[int],
                       cap: int = ORBIT_CAP) -> list[frozenset[int]]:
    """Representatives of the G2-orbits into which the G1-orbit of S splits."""
    return [frozenset(points_of(x)) for x in double_coset_split_masks(G1, G2, mask_of(S), cap)]


def double_coset_split_masks(G1: PermGroup, G2: PermGroup, mask: int,
                             cap: int = ORBIT_CAP) -> list[int]:
    pts = points_of(mask)
    total = G1.order() // set_stabilizer(G1, pts).order()
    reps: dict[int, int] = {}
    sizes = 0
    queue = [mask]
    while queue:
        x = queue.pop()
        c = canonical_mask(G2, x)
        if c in reps:
            continue
        reps[c] = x
        sizes += G2.order() // set_stabilizer(G2, points_of(x)).order()
        if sizes == total:
            break
        for g in G1.generators:
            queue.append(mask_image(g, x))
    if sizes != total:
        # the generator walk stalled; list the whole G1-orbit instead
        reps = {}
        for x in orbit_masks(G1, mask, cap):
            c = canonical_mask(G2, x)
            reps.setdefault(c, x)
    return sorted(reps.values(), key=sorted_key)
