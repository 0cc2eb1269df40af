"""End-to-end acceptance checks, one test per criterion.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL/SKIP line per criterion.  The dimension seven enumeration needs
``--slow``.
"""

import random
from fractions import Fraction

import pytest

from perfectforms.canonical import canonical_pqf, linear_automorphisms
from perfectforms.classify import (
    EutaxyStatus,
    eutaxy_classify,
    is_extreme,
    witness_holds,
)
from perfectforms.exactla import (
    identity,
    kernel_vector,
    kernel_vector_mod_p,
    primitive,
    rank,
    rational_lift,
    sign_normalized,
)
from perfectforms.polycone import ADMOptions, adm_facet_orbits, dual_description
from perfectforms.quadform import conjugate, hermite_invariant, is_perfect
from perfectforms.voronoi import (
    EnumerateOptions,
    _domain_group,
    enumerate_forms,
    tangent_cone,
    voronoi_domain,
)

COUNTS = {2: 1, 3: 1, 4: 2, 5: 3, 6: 7}

# Gram matrices of the densest lattices, written down from their root systems
DENSEST = {
    2: [[2, -1], [-1, 2]],
    3: [[2, -1, 0], [-1, 2, -1], [0, -1, 2]],
    4: [[2, -1, 0, 0], [-1, 2, -1, -1], [0, -1, 2, 0], [0, -1, 0, 2]],
    5: [[2, -1, 0, 0, 0], [-1, 2, -1, 0, 0], [0, -1, 2, -1, -1], [0, 0, -1, 2, 0], [0, 0, -1, 0, 2]],
    6: [[2, 0, -1, 0, 0, 0], [0, 2, 0, -1, 0, 0], [-1, 0, 2, -1, 0, 0],
        [0, -1, -1, 2, -1, 0], [0, 0, 0, -1, 2, -1], [0, 0, 0, 0, -1, 2]],
}


@pytest.fixture(scope="module")
def databases():
    return {d: enumerate_forms(d) for d in COUNTS}


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def random_cone(rnd):
    """Pointed full-dimensional cone with 4..12 extreme rays; most carry symmetry."""
    while True:
        n = rnd.randint(3, 6)
        base = [[rnd.randint(1, 3)] + [rnd.randint(-3, 3) for _ in range(n - 1)]
                for _ in range(rnd.randint(1, 3))]
        rays = set()
        if rnd.random() < 0.7:
            # closed under cycling and negating the last n-1 coordinates
            for v in base:
                tail = v[1:]
                for s in range(n - 1):
                    t = tail[s:] + tail[:s]
                    rays.add(primitive([v[0]] + t))
                    rays.add(primitive([v[0]] + [-x for x in t]))
        else:
            target = rnd.randint(n + 1, 12)
            while len(rays) < target:
                rays.add(primitive([rnd.randint(1, 3)] + [rnd.randint(-3, 3) for _ in range(n - 1)]))
        rays = sorted(rays)
        if len(rays) > 12 or rank(rays) < n:
            continue
        facets = dual_description(rays)
        extreme = [v for v in rays if rank([f for f in facets if dot(f, v) == 0]) == n - 1]
        if len(extreme) > n:
            return extreme


@pytest.fixture(scope="module")
def cone_corpus():
    rnd = random.Random(2024)
    return [random_cone(rnd) for _ in range(200)]


def random_unimodular(rnd, d):
    U = identity(d)
    for _ in range(3 * d):
        i, j = rnd.sample(range(d), 2)
        c = rnd.choice([-2, -1, 1, 2])
        for row in U:
            row[j] += c * row[i]
    if rnd.random() < 0.5:
        k = rnd.randrange(d)
        for row in U:
            row[k] = -row[k]
    return U


@pytest.mark.criterion(1, "class counts 1, 1, 2, 3, 7 for d = 2..6")
def test_class_counts(databases):
    got = {d: len(db) for d, db in databases.items()}
    assert got == COUNTS


@pytest.mark.slow
@pytest.mark.criterion(2, "33 classes for d = 7")
def test_dimension_seven():
    assert len(enumerate_forms(7)) == 33


@pytest.mark.criterion(3, "densest form per dimension matches the known optimum")
def test_densest(databases):
    for d, db in databases.items():
        Q = DENSEST[d]
        assert is_perfect(Q)
        best = max(hermite_invariant(r.form) for r in db)
        winners = [r for r in db if hermite_invariant(r.form) == best]
        assert len(winners) == 1
        assert winners[0].hash == canonical_pqf(Q).hash
        assert hermite_invariant(Q) == best


@pytest.mark.criterion(4, "facet orbits from adjacency decomposition equal the plain dual description")
def test_adm_equals_dd(cone_corpus, databases):
    for V in cone_corpus:
        G = linear_automorphisms(V)
        res = adm_facet_orbits(V, G, ADMOptions(direct_threshold=0))
        assert res.all_facets(V) == dual_description(V)
    for d in (2, 3, 4):
        for rec in databases[d]:
            normals = tangent_cone(rec.form)
            rays = dual_description(normals)
            res = adm_facet_orbits(rays, linear_automorphisms(rays), ADMOptions(direct_threshold=0))
            assert res.all_facets(rays) == sorted(primitive(f) for f in normals)
            vecs, V = voronoi_domain(rec.form)
            res = adm_facet_orbits(V, _domain_group(rec.form, vecs), ADMOptions(direct_threshold=0))
            assert res.all_facets(V) == dual_description(V)


@pytest.mark.criterion(5, "canonical form constant on 1000 unimodular conjugates, distinct across classes")
def test_canonical_invariance(databases):
    rnd = random.Random(5)
    for d in (2, 3, 4, 5):
        hashes = [r.hash for r in databases[d]]
        assert len(set(hashes)) == len(hashes)
        for rec in databases[d]:
            base = canonical_pqf(rec.form)
            for _ in range(1000):
                c = canonical_pqf(conjugate(rec.form, random_unimodular(rnd, d)))
                assert c.form == base.form and c.hash == base.hash == rec.hash


@pytest.mark.criterion(6, "eutaxy witnesses exact; extreme iff perfect and eutactic")
def test_eutaxy(databases):
    A2 = [[2, -1], [-1, 2]]
    e = eutaxy_classify(A2)
    assert e.status == EutaxyStatus.STRONGLY_EUTACTIC and e.witness == [Fraction(1, 3)] * 3
    assert witness_holds(A2, e)
    for db in databases.values():
        for rec in db:
            Q = rec.form
            e = eutaxy_classify(Q)
            assert witness_holds(Q, e)
            assert is_perfect(Q)
            assert is_extreme(Q) == (e.status >= EutaxyStatus.EUTACTIC)


@pytest.mark.criterion(7, "every early-stopped decomposition already holds all facet orbits")
def test_balinski_soundness(cone_corpus):
    stops = 0
    for V in cone_corpus:
        res = adm_facet_orbits(V, linear_automorphisms(V), ADMOptions(direct_threshold=0, balinski=True))
        stops += res.early_stop
        assert res.all_facets(V) == dual_description(V)
    assert stops > 0


@pytest.mark.criterion(8, "modular kernels with rational lifting agree with exact kernels")
def test_modular_kernels():
    rnd = random.Random(8)
    done = 0
    while done < 100:
        n = rnd.randint(3, 8)
        M = [[rnd.randint(-3, 3) for _ in range(n)] for _ in range(n - 1)]
        if rank(M) != n - 1:
            continue
        lifted = [rational_lift(x) for x in kernel_vector_mod_p(M)]
        assert sign_normalized(primitive(lifted)) == kernel_vector(M)
        done += 1


@pytest.mark.criterion(9, "one and four workers give byte-identical databases for d = 5")
def test_parallel_determinism():
    serial = enumerate_forms(5, EnumerateOptions(workers=1)).dumps()
    parallel = enumerate_forms(5, EnumerateOptions(workers=4)).dumps()
    assert serial == parallel
