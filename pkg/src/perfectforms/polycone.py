"""Pointed polyhedral cones and their dual description, with or without symmetry.

Rays and facet normals are primitive integer vectors.  Faces are identified by
their incidence: the set (bitmask) of ray indices lying on them.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .canonical import _linear_map, canonical_cone, linear_automorphisms
from .exactla import (
    DEFAULT_PRIME,
    LiftFailed,
    WrongCorank,
    dot,
    kernel_basis,
    kernel_vector,
    kernel_vector_modular,
    primitive,
    rank,
)
from .lp import lp_solve
from .permgroup import (
    PermGroup,
    apply_table,
    canonical_mask,
    double_coset_split_masks,
    mask_of,
    orbit_masks,
    points_of,
    set_stabilizer,
    sorted_key,
)

DIRECT_THRESHOLD = 8
SYMMETRY_THRESHOLD = 8
BANK_COST_THRESHOLD = 0.5
BALINSKI_CAP = 2000
MEMO_ORBIT_CAP = 200_000        # largest orbit listed in full for the registry
MEMO_TOTAL_CAP = 4_000_000      # masks kept in the registry memo

log = logging.getLogger(__name__)


class NotPointed(ValueError):
    pass


class NotFullDim(ValueError):
    pass


class NotSupporting(ValueError):
    pass


class NoAdjacent(RuntimeError):
    pass


class BadIncidence(ValueError):
    pass


Vec = tuple[int, ...]


def _as_rays(V: Sequence[Sequence]) -> list[Vec]:
    return [tuple(int(x) for x in v) for v in V]


def popcount(x: int) -> int:
    return bin(x).count("1")


# ---------------------------------------------------------------- double description

def dual_description(V: Sequence[Sequence[int]]) -> list[Vec]:
    """Facet normals of cone(V): primitive, sorted, one per facet.

    Computed as the extreme rays of {y : v.y >= 0 for v in V} by the incremental
    double description method with combinatorial adjacency.  The same call maps
    facet normals back to extreme rays.
    """
    A = _as_rays(V)
    if not A:
        raise NotFullDim("no rays")
    n = len(A[0])
    if rank(A) < n:
        raise NotFullDim("rays do not span the ambient space")
    # initial simplex cone from the first independent rows
    chosen: list[int] = []
    for k in range(len(A)):
        if rank([A[i] for i in chosen + [k]]) == len(chosen) + 1:
            chosen.append(k)
            if len(chosen) == n:
                break
    rays: list[Vec] = []
    for k in range(n):
        others = [A[chosen[i]] for i in range(n) if i != k]
        r = kernel_vector(others, n) if others else (1,)
        if dot(A[chosen[k]], r) < 0:
            r = tuple(-x for x in r)
        rays.append(tuple(r))
    processed = list(chosen)
    # zero sets per ray, as bitmasks over positions in `processed`
    zmask = [sum(1 << i for i in range(n) if i != k) for k in range(n)]
    for idx in range(len(A)):
        if idx in chosen:
            continue
        a = A[idx]
        vals = [dot(a, r) for r in rays]
        plus = [k for k, v in enumerate(vals) if v > 0]
        minus = [k for k, v in enumerate(vals) if v < 0]
        zero = [k for k, v in enumerate(vals) if v == 0]
        bit = 1 << len(processed)
        new_rays: list[Vec] = []
        new_z: list[int] = []
        if minus:
            # rays tight on each processed constraint
            tight_on = [0] * len(processed)
            for k, z in enumerate(zmask):
                for c in points_of(z):
                    tight_on[c] |= 1 << k
            for p in plus:
                for q in minus:
                    common = zmask[p] & zmask[q]
                    if popcount(common) < n - 2:
                        continue
                    both = (1 << p) | (1 << q)
                    acc = (1 << len(rays)) - 1
                    for c in points_of(common):
                        acc &= tight_on[c]
                        if acc == both:
                            break
                    if acc != both:
                        continue
                    r = [vals[p] * x - vals[q] * y for x, y in zip(rays[q], rays[p])]
                    new_rays.append(primitive(r))
                    new_z.append(common | bit)
        keep = plus + zero
        rays = [rays[k] for k in keep] + new_rays
        zmask = [zmask[k] | (bit if vals[k] == 0 else 0) for k in keep] + new_z
        processed.append(idx)
    out = sorted(set(rays))
    if not out or rank(out) < n:
        raise NotPointed("cone contains a line")
    return out


def facet_incidence(V: Sequence[Sequence[int]], normal: Sequence[int]) -> frozenset[int]:
    inc = []
    for i, v in enumerate(V):
        s = dot(normal, v)
        if s < 0:
            raise NotSupporting(f"ray {i} lies on the negative side")
        if s == 0:
            inc.append(i)
    return frozenset(inc)


def incidence_mask(V: Sequence[Sequence[int]], normal: Sequence[int]) -> int:
    return mask_of(facet_incidence(V, normal))


def _oriented(V, r: Sequence[int], candidates: Sequence[int]) -> Vec:
    for i in candidates:
        s = dot(r, V[i])
        if s:
            return tuple(r) if s > 0 else tuple(-x for x in r)
    raise BadIncidence("normal vanishes on every candidate ray")


def _kernel(rows: list[Sequence[int]], n: int, modular: bool) -> Vec:
    if modular:
        try:
            return kernel_vector_modular(rows, DEFAULT_PRIME, n)
        except (LiftFailed, WrongCorank):
            pass
    try:
        return kernel_vector(rows, n)
    except WrongCorank as exc:
        raise BadIncidence(str(exc)) from None


def normal_from_incidence(V: Sequence[Sequence[int]], mask: int, modular: bool = True) -> Vec:
    """Facet normal of cone(V) vanishing on the rays in mask, oriented inward."""
    n = len(V[0])
    pts = points_of(mask)
    r = _kernel([V[i] for i in pts], n, modular)
    return _oriented(V, r, [i for i in range(len(V)) if not (mask >> i) & 1])


def ridge_normal_from_incidence(V: Sequence[Sequence[int]], f: Sequence[int], ridge: int,
                                modular: bool = True) -> Vec:
    """A normal r vanishing on the ridge rays, orthogonal to f, nonnegative on the facet f."""
    n = len(V[0])
    rows = [V[i] for i in points_of(ridge)] + [tuple(f)]
    r = _kernel(rows, n, modular)
    if any(dot(r, V[i]) for i in points_of(ridge)):
        raise BadIncidence("ridge normal does not vanish on the ridge")
    facet = [i for i, v in enumerate(V) if dot(f, v) == 0 and not (ridge >> i) & 1]
    return _oriented(V, r, facet)


def flip(V: Sequence[Sequence[int]], f: Sequence[int], r: Sequence[int]) -> Vec:
    """The facet adjacent to facet f across the ridge cut out by r on f.

    r must be nonnegative on the rays of f.  Returns r + beta*f with beta the
    largest value of -r(v)/f(v) over rays v off f; this is the smallest shift
    keeping every ray on the nonnegative side.
    """
    beta = None
    for v in V:
        fv = dot(f, v)
        if fv > 0:
            cand = Fraction(-dot(r, v), fv)
            if beta is None or cand > beta:
                beta = cand
    if beta is None:
        raise NoAdjacent("every ray lies on the facet")
    g = [Fraction(a) + beta * b for a, b in zip(r, f)]
    if all(x == 0 for x in g):
        raise NoAdjacent("flipped normal vanishes")
    return primitive(g)


# ---------------------------------------------------------------- facet orbits

@dataclass(frozen=True)
class FacetOrbit:
    incidence: frozenset[int]
    normal: Vec
    size: int

    @property
    def mask(self) -> int:
        return mask_of(self.incidence)


@dataclass
class FacetOrbitList:
    orbits: list[FacetOrbit]
    group: PermGroup
    early_stop: bool = False

    @property
    def total(self) -> int:
        return sum(o.size for o in self.orbits)

    def all_facets(self, V: Sequence[Sequence[int]]) -> list[Vec]:
        """Expand the orbits into the full facet list (sorted)."""
        out = set()
        for o in self.orbits:
            for m in orbit_masks(self.group, o.mask):
                out.add(normal_from_incidence(V, m, modular=False))
        return sorted(out)


@dataclass
class ADMOptions:
    direct_threshold: int = DIRECT_THRESHOLD
    symmetry_threshold: int = SYMMETRY_THRESHOLD
    bank_cost_threshold: float = BANK_COST_THRESHOLD
    bank: "SavingBank | None" = None
    balinski: bool = True
    stats: dict = field(default_factory=dict)

    def bump(self, key: str, by: int = 1) -> None:
        self.stats[key] = self.stats.get(key, 0) + by


def _orbit_size(G: PermGroup, mask: int) -> int:
    if G.is_trivial():
        return 1
    return G.order() // set_stabilizer(G, points_of(mask)).order()


def _direct_orbits(V: list[Vec], G: PermGroup) -> FacetOrbitList:
    """Plain dual description, then grouping of the facets into G-orbits.

    The facet set is G-invariant, so orbits are the classes of the generator
    action on incidences and the smallest member of a class is its canonical
    representative.
    """
    facets = dual_description(V)
    by_mask = {incidence_mask(V, f): f for f in facets}
    masks = sorted(by_mask, key=sorted_key)
    index = {mk: k for k, mk in enumerate(masks)}
    parent = list(range(len(masks)))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for tab in G.tables():
        for k, mk in enumerate(masks):
            a, b = find(k), find(index[apply_table(tab, mk)])
            if a != b:
                parent[max(a, b)] = min(a, b)
    counts: dict[int, int] = {}
    for k in range(len(masks)):
        r = find(k)
        counts[r] = counts.get(r, 0) + 1
    orbits = [FacetOrbit(frozenset(points_of(masks[r])), by_mask[masks[r]], counts[r])
              for r in sorted(counts)]
    return FacetOrbitList(orbits, G)


def initial_facet(V: Sequence[Sequence[int]]) -> Vec:
    """Some facet normal: find y with V y >= 1, then rotate it until n-1 independent rays are tight."""
    A = _as_rays(V)
    n = len(A[0])
    res = lp_solve([0] * (2 * n),
                   A_ub=[[-x for x in v] + list(v) for v in A],
                   b_ub=[-1] * len(A))
    if not res.optimal:
        raise NotPointed("no strictly positive functional on the rays")
    y = [res.x[i] - res.x[n + i] for i in range(n)]
    while True:
        tight = [i for i, v in enumerate(A) if dot(v, y) == 0]
        rows = [A[i] for i in tight]
        k = rank(rows) if rows else 0
        if k == n - 1:
            return primitive(y)
        basis = kernel_basis(rows, n) if rows else [
            [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        z = next(b for b in basis if rank([y, b]) == 2)
        if not any(dot(v, z) < 0 for v in A):
            z = [-x for x in z]
        t = min(Fraction(dot(v, y)) / -dot(v, z) for v in A if dot(v, z) < 0)
        y = [a + t * b for a, b in zip(y, z)]


def balinski_certified_stop(V: Sequence[Sequence[int]], G: PermGroup,
                            untreated: Sequence[tuple[int, int]], cap: int = BALINSKI_CAP) -> bool:
    """Can the facets in the untreated orbits (mask, orbit size) be skipped safely?

    True if there are at most n-2 of them, if they all share a ray, or if their
    normals span a space of dimension at most n-2.
    """
    n = len(V[0])
    total = sum(size for _, size in untreated)
    if total <= n - 2:
        return True
    if total > cap:
        return False
    masks = []
    for m, _ in untreated:
        masks.extend(orbit_masks(G, m))
    common = -1
    for m in masks:
        common &= m
    if common:
        return True
    normals: list[Vec] = []
    for m in masks:
        trial = normals + [normal_from_incidence(V, m)]
        if rank(trial) > len(normals):
            normals = trial
            if len(normals) > n - 2:
                return False
    return True


def adm_facet_orbits(V: Sequence[Sequence[int]], G: PermGroup | None = None,
                     opts: ADMOptions | None = None, verify_group: bool = True) -> FacetOrbitList:
    """Facet orbits of cone(V) under G by the recursive adjacency decomposition method."""
    V = _as_rays(V)
    m = len(V)
    n = len(V[0])
    if rank(V) < n:
        raise NotFullDim("rays do not span the ambient space")
    if G is None:
        G = PermGroup.trivial(m)
    if G.degree != m:
        raise ValueError("group degree differs from the number of rays")
    if opts is None:
        opts = ADMOptions()
    if verify_group:
        for g in G.generators:
            if _linear_map(V, g) is None:
                raise ValueError("group generator is not induced by a linear map of the rays")
    return _adm(V, G, opts, 0)


def _adm(V: list[Vec], G: PermGroup, opts: ADMOptions, depth: int) -> FacetOrbitList:
    m, n = len(V), len(V[0])
    if G.is_trivial() or m - n <= opts.direct_threshold:
        opts.bump("direct")
        return _direct_orbits(V, G)
    bank = opts.bank
    if bank is not None:
        hit = bank.lookup(V, G)
        if hit is not None:
            opts.bump("bank_hits")
            return hit
    opts.bump("adm")
    started = time.perf_counter()
    registry: dict[int, dict] = {}
    # every listed member of a small orbit points at its canonical representative
    memo: dict[int, int] = {}

    def register(mask: int) -> None:
        if mask in memo:
            return
        size = _orbit_size(G, mask)
        if size <= MEMO_ORBIT_CAP and len(memo) < MEMO_TOTAL_CAP:
            members = orbit_masks(G, mask)
            c = min(members, key=sorted_key)
            memo.update(dict.fromkeys(members, c))
        else:
            c = canonical_mask(G, mask)
        opts.bump("registered")
        if c not in registry:
            registry[c] = {"size": size, "treated": False}
            log.debug("new facet orbit: incidence %d, size %d, %d orbits known",
                      popcount(c), size, len(registry))

    register(incidence_mask(V, initial_facet(V)))
    early = False
    while True:
        pending = [c for c, rec in registry.items() if not rec["treated"]]
        if not pending:
            break
        c = min(pending, key=lambda x: (popcount(x), sorted_key(x)))
        f = normal_from_incidence(V, c)
        for ridge in _ridges(V, G, c, f, opts, depth):
            r = ridge_normal_from_incidence(V, f, ridge)
            register(incidence_mask(V, flip(V, f, r)))
        registry[c]["treated"] = True
        if opts.balinski:
            untreated = [(x, rec["size"]) for x, rec in registry.items() if not rec["treated"]]
            if untreated and balinski_certified_stop(V, G, untreated):
                early = True
                opts.bump("balinski_stops")
                break
    orbits = [FacetOrbit(frozenset(points_of(c)), normal_from_incidence(V, c), registry[c]["size"])
              for c in sorted(registry, key=sorted_key)]
    result = FacetOrbitList(orbits, G, early)
    if bank is not None and time.perf_counter() - started > opts.bank_cost_threshold:
        bank.store(V, G, result)
    return result


def _ridges(V: list[Vec], G: PermGroup, c: int, f: Vec, opts: ADMOptions, depth: int) -> list[int]:
    """Orbit representatives (as masks of V) of the ridges of facet c under Stab(G, c)."""
    pts = points_of(c)
    j = next(i for i, x in enumerate(f) if x)
    sub = [tuple(x for i, x in enumerate(V[p]) if i != j) for p in pts]
    H = set_stabilizer(G, pts).restricted(pts)
    excess = len(pts) - (len(V[0]) - 1)
    if excess > opts.symmetry_threshold and len(pts) > 0:
        lin = linear_automorphisms(sub)
        G1 = PermGroup(len(pts), list(lin.generators) + list(H.generators))
        if G1.order() > H.order():
            opts.bump("extra_symmetry")
            result = _adm(sub, G1, opts, depth + 1)
            reps = []
            for o in result.orbits:
                reps.extend(double_coset_split_masks(G1, H, o.mask))
        else:
            reps = [o.mask for o in _adm(sub, H, opts, depth + 1).orbits]
    else:
        reps = [o.mask for o in _adm(sub, H, opts, depth + 1).orbits]
    return [mask_of(pts[i] for i in points_of(r)) for r in reps]


# ---------------------------------------------------------------- saving bank

@dataclass
class _BankRecord:
    rays: list[Vec]                 # in canonical order
    generators: list[tuple[int, ...]]  # on canonical positions
    orbits: list[tuple[int, int]]   # (mask over positions, orbit size)


class SavingBank:
    """Memo of expensive dual descriptions keyed by the canonical form of the ray set."""

    def __init__(self, directory: str | os.PathLike | None = None):
        self.directory = os.fspath(directory) if directory is not None else None
        self.records: dict[int, _BankRecord] = {}
        if self.directory:
            os.makedirs(self.directory, exist_ok=True)

    def _path(self, key: int) -> str:
        return os.path.join(self.directory, f"{key:016x}.bank")

    def _get(self, key: int) -> _BankRecord | None:
        rec = self.records.get(key)
        if rec is None and self.directory and os.path.exists(self._path(key)):
            with open(self._path(key)) as fh:
                rec = _parse_record(fh.read())
            self.records[key] = rec
        return rec

    def lookup(self, V: Sequence[Sequence[int]], G: PermGroup) -> FacetOrbitList | None:
        V = _as_rays(V)
        canon = canonical_cone(V)
        rec = self._get(canon.hash)
        if rec is None or len(rec.rays) != len(V):
            return None
        if canonical_cone(rec.rays).matrix != canon.matrix:
            return None
        order = canon.order
        pos = {v: p for p, v in enumerate(order)}
        m = len(V)
        req = [tuple(pos[g[order[p]]] for p in range(m)) for g in G.generators]
        G_pos = PermGroup(m, req)
        J = PermGroup(m, list(rec.generators) + req)
        seen = set()
        reps_pos = []
        for mask, _ in rec.orbits:
            c = canonical_mask(J, mask)
            if c not in seen:
                seen.add(c)
                reps_pos.extend(double_coset_split_masks(J, G_pos, mask))
        found = {}
        for rp in reps_pos:
            mask = mask_of(order[p] for p in points_of(rp))
            c = canonical_mask(G, mask)
            found[c] = _orbit_size(G, c)
        orbits = [FacetOrbit(frozenset(points_of(c)), normal_from_incidence(V, c), found[c])
                  for c in sorted(found, key=sorted_key)]
        return FacetOrbitList(orbits, G)

    def store(self, V: Sequence[Sequence[int]], G: PermGroup, result: FacetOrbitList) -> None:
        V = _as_rays(V)
        canon = canonical_cone(V)
        order = canon.order
        pos = {v: p for p, v in enumerate(order)}
        m = len(V)
        gens = [tuple(pos[g[order[p]]] for p in range(m)) for g in G.generators]
        orbits = [(mask_of(pos[i] for i in o.incidence), o.size) for o in result.orbits]
        rec = _BankRecord([V[i] for i in order], gens, orbits)
        self.records[canon.hash] = rec
        if self.directory:
            tmp = self._path(canon.hash) + ".tmp"
            with open(tmp, "w") as fh:
                fh.write(_format_record(rec))
            os.replace(tmp, self._path(canon.hash))

    def __len__(self) -> int:
        return len(self.records)


def _format_record(rec: _BankRecord) -> str:
    n = len(rec.rays[0])
    lines = [f"{n} {len(rec.rays)}", str(len(rec.generators))]
    lines += [" ".join(map(str, g)) for g in rec.generators]
    lines += [" ".join(map(str, v)) for v in rec.rays]
    lines.append(str(len(rec.orbits)))
    lines += [f"{size} " + " ".join(map(str, points_of(mask))) for mask, size in rec.orbits]
    return "\n".join(lines) + "\n"


def _parse_record(text: str) -> _BankRecord:
    lines = text.splitlines()
    n, m = map(int, lines[0].split())
    k = int(lines[1])
    gens = [tuple(map(int, lines[2 + i].split())) for i in range(k)]
    at = 2 + k
    rays = [tuple(map(int, lines[at + i].split())) for i in range(m)]
    at += m
    count = int(lines[at])
    orbits = []
    for line in lines[at + 1: at + 1 + count]:
        parts = list(map(int, line.split()))
        orbits.append((mask_of(parts[1:]), parts[0]))
    if any(len(r) != n for r in rays):
        raise ValueError("bank record has rays of the wrong length")
    return _BankRecord(rays, gens, orbits)
