import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import perfectforms.permgroup as pg
from perfectforms.permgroup import (
    PermGroup,
    are_equivalent,
    canonical_image,
    canonical_image_with_element,
    compose,
    double_coset_split,
    group_order,
    identity_perm,
    image,
    orbit,
    set_stabilizer,
)


def closure(G):
    """All elements by breadth-first multiplication (oracle)."""
    e = identity_perm(G.degree)
    seen = {e}
    queue = [e]
    for x in queue:
        for g in G.generators:
            y = compose(g, x)
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return seen


def lexmin(sets):
    return min(sets, key=lambda s: tuple(sorted(s)))


@st.composite
def small_groups(draw, max_degree=8):
    m = draw(st.integers(2, max_degree))
    gens = []
    for _ in range(draw(st.integers(1, 3))):
        if draw(st.booleans()):
            gens.append(tuple(draw(st.permutations(range(m)))))
        else:
            k = draw(st.integers(2, min(4, m)))
            pts = draw(st.permutations(range(m)))[:k]
            p = list(range(m))
            for a, b in zip(pts, pts[1:] + pts[:1]):
                p[a] = b
            gens.append(tuple(p))
    return PermGroup(m, gens)


@st.composite
def group_and_set(draw):
    G = draw(small_groups())
    S = frozenset(draw(st.sets(st.integers(0, G.degree - 1))))
    return G, S


def wreath(a, b):
    """Sym(a) wr Sym(b) on a*b points, blocks of size a."""
    m = a * b
    gens = []
    p = list(range(m)); p[0], p[1] = p[1], p[0]; gens.append(p)
    p = list(range(m))
    for i in range(a):
        p[i] = (i + 1) % a
    gens.append(p)
    p = list(range(m))
    for blk in range(b):
        for i in range(a):
            p[blk * a + i] = ((blk + 1) % b) * a + i
    gens.append(p)
    p = list(range(m))
    for i in range(a):
        p[i], p[a + i] = a + i, i
    gens.append(p)
    return PermGroup(m, gens)


# ---------------------------------------------------------------- examples

def test_order_examples():
    assert group_order(PermGroup(3, [(1, 0, 2), (1, 2, 0)])) == 6
    assert group_order(PermGroup.trivial(5)) == 1
    # symmetries of the square acting on the rays (1, +-1, +-1) of the square cone
    rays = [(1, 1, 1), (1, 1, -1), (1, -1, -1), (1, -1, 1)]
    rot = (1, 2, 3, 0)
    refl = (1, 0, 3, 2)
    assert group_order(PermGroup(4, [rot, refl])) == 8 and len(rays) == 4


def test_orbit_examples():
    S3 = PermGroup.symmetric(3)
    assert sorted(orbit(S3, {0}), key=sorted) == [frozenset({0}), frozenset({1}), frozenset({2})]
    assert orbit(PermGroup.trivial(4), {1, 2}) == [frozenset({1, 2})]
    assert len(orbit(PermGroup.symmetric(4), {0, 1})) == 6


def test_stabilizer_examples():
    assert set_stabilizer(PermGroup.symmetric(3), {0, 1}).order() == 2
    assert set_stabilizer(PermGroup.trivial(4), {0}).order() == 1


def test_equivalence_examples():
    S3 = PermGroup.symmetric(3)
    g = are_equivalent(S3, {0}, {2})
    assert g is not None and image(g, {0}) == frozenset({2})
    assert are_equivalent(PermGroup.trivial(3), {0}, {1}) is None


def test_canonical_image_examples():
    assert canonical_image(PermGroup.trivial(5), {1, 3}) == frozenset({1, 3})
    assert canonical_image(PermGroup.symmetric(7), {2, 5, 6}) == frozenset({0, 1, 2})


def test_double_coset_examples():
    S3 = PermGroup.symmetric(3)
    assert double_coset_split(S3, S3, {0}) == [frozenset({0})]
    assert sorted(double_coset_split(S3, PermGroup.trivial(3), {0}), key=sorted) == [
        frozenset({0}), frozenset({1}), frozenset({2})]


# ---------------------------------------------------------------- properties against brute force

@settings(max_examples=150, deadline=None)
@given(group_and_set())
def test_against_brute_force(gs):
    G, S = gs
    E = closure(G)
    assert G.order() == len(E)
    orb = {image(g, S) for g in E}
    assert set(orbit(G, S)) == orb
    c, g = canonical_image_with_element(G, S)
    assert c == lexmin(orb) and image(g, S) == c
    H = set_stabilizer(G, S)
    assert H.order() == sum(1 for g in E if image(g, S) == S)
    assert all(image(h, S) == S for h in H.generators)
    assert len(orb) * H.order() == G.order()


@settings(max_examples=100, deadline=None)
@given(group_and_set(), st.randoms(use_true_random=False))
def test_canonical_image_constant_on_orbits(gs, rnd):
    G, S = gs
    E = sorted(closure(G))
    s = rnd.choice(E)
    T = image(s, S)
    c = canonical_image(G, S)
    assert canonical_image(G, T) == c
    assert canonical_image(G, c) == c
    sigma = are_equivalent(G, S, T)
    assert sigma is not None and image(sigma, S) == T
    U = frozenset(rnd.sample(range(G.degree), len(S)))
    assert (are_equivalent(G, S, U) is not None) == (canonical_image(G, U) == c)


@settings(max_examples=100, deadline=None)
@given(group_and_set(), st.randoms(use_true_random=False))
def test_double_coset_split_covers(gs, rnd):
    G, S = gs
    E = sorted(closure(G))
    G2 = PermGroup(G.degree, [rnd.choice(E) for _ in range(rnd.randint(0, 2))])
    E2 = closure(G2)
    reps = double_coset_split(G, G2, S)
    covered = set()
    for r in reps:
        o = {image(g, r) for g in E2}
        assert not (o & covered)
        covered |= o
    assert covered == {image(g, S) for g in E}


@pytest.mark.parametrize("forced", [False, True])
@pytest.mark.parametrize("a,b", [(3, 4), (4, 3), (2, 6)])
def test_wreath_products(a, b, forced, monkeypatch):
    if forced:
        # push every call through the set-stabilizer fallback
        monkeypatch.setattr(pg, "LAYER_THRESHOLD", 3)
        monkeypatch.setattr(pg, "_ORBIT_ENUM_LIMIT", 1)
        monkeypatch.setattr(pg, "_ORBIT_SMALL", 0)
    G = wreath(a, b)
    m = a * b
    rnd = random.Random(a * 10 + b)
    for _ in range(15):
        S = rnd.sample(range(m), rnd.randint(1, m - 1))
        c = canonical_image(G, S)
        g = identity_perm(m)
        for _ in range(10):
            g = compose(rnd.choice(G.generators), g)
        assert canonical_image(G, image(g, S)) == c
        orb = orbit(G, S)
        assert c == lexmin(orb)
        assert len(orb) * set_stabilizer(G, S).order() == G.order()
