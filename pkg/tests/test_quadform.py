from fractions import Fraction
from itertools import product

from hypothesis import given, settings
from hypothesis import strategies as st

from perfectforms.exactla import det, identity, inverse, mat_mul, transpose
from perfectforms.quadform import (
    conjugate,
    dual_form,
    enumerate_below,
    evaluate,
    has_a2_section,
    hermite_invariant,
    is_lll_reduced,
    is_perfect,
    lll_reduce,
    min_vectors_span,
    minimal_vectors,
    perfection_rank,
    root_lattice_a,
    scale,
    sign_normalized,
)

A2 = [[2, -1], [-1, 2]]
D4 = [[2, -1, 0, 0], [-1, 2, -1, -1], [0, -1, 2, 0], [0, -1, 0, 2]]


def brute_min(Q, box):
    d = len(Q)
    best, vecs = None, set()
    for x in product(range(-box, box + 1), repeat=d):
        if any(x):
            v = evaluate(Q, x)
            if best is None or v < best:
                best, vecs = v, set()
            if v == best:
                vecs.add(sign_normalized(x))
    return best, sorted(vecs)


def unimodular(ops, d):
    U = identity(d)
    for i, j, c in ops:
        i, j = i % d, j % d
        if i != j:
            for row in U:
                row[j] += c * row[i]
    return U


unimodular_ops = st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(-2, 2)), max_size=8)


def test_lll_examples():
    R, U = lll_reduce(identity(3))
    assert R == identity(3) and U == identity(3)
    skewed = conjugate(A2, [[1, 5], [0, 1]])
    R, U = lll_reduce(skewed)
    assert conjugate(skewed, U) == R
    assert minimal_vectors(R).lambda1 == 2 and det(R) == 3
    assert is_lll_reduced(R)


@settings(max_examples=40, deadline=None)
@given(unimodular_ops)
def test_lll_output_reduced_and_equivalent(ops):
    Q = conjugate(D4, unimodular(ops, 4))
    R, U = lll_reduce(Q)
    assert is_lll_reduced(R)
    assert conjugate(Q, U) == R
    assert det(U) in (1, -1)


def test_minimal_vector_examples():
    md = minimal_vectors(identity(2))
    assert md.lambda1 == 1 and md.vectors == ((0, 1), (1, 0))
    md = minimal_vectors(A2)
    assert md.lambda1 == 2 and len(md.vectors) == 3
    md = minimal_vectors(D4)
    assert md.lambda1 == 2 and len(md.vectors) == 12 and md.kissing_number == 24


def test_minimal_vectors_match_box_search():
    for Q, box in [(A2, 2), (root_lattice_a(3), 2), (D4, 2), ([[3, 1, 1], [1, 4, 2], [1, 2, 5]], 2)]:
        lam, vecs = brute_min(Q, box)
        md = minimal_vectors(Q)
        assert md.lambda1 == lam and list(md.vectors) == vecs


def test_enumerate_below_examples():
    assert [x for x, _ in enumerate_below(identity(2), 1)] == [(0, 1), (1, 0)]
    assert sorted(x for x, _ in enumerate_below(identity(2), 2)) == [(0, 1), (1, -1), (1, 0), (1, 1)]
    assert [x for x, _ in enumerate_below(A2, 2)] == list(minimal_vectors(A2).vectors)


def test_hermite_examples():
    assert hermite_invariant(identity(4)) == 1
    assert hermite_invariant(A2) == Fraction(4, 3)


def test_perfect_examples():
    assert is_perfect(A2)
    assert not is_perfect(identity(2))
    for d in (3, 4, 5, 6):
        assert is_perfect(root_lattice_a(d))


def test_scale_examples():
    assert scale(A2) == 2
    assert scale([[Fraction(x, 2) for x in row] for row in A2]) == 2
    assert scale(identity(3)) == 1


def test_span_and_sections():
    assert min_vectors_span(A2)
    assert min_vectors_span(identity(2))
    assert min_vectors_span([[4, 0], [0, 4]])
    assert has_a2_section(A2)
    assert not has_a2_section(identity(2))
    assert has_a2_section(D4)


def test_dual_form_examples():
    assert dual_form(identity(3)) == identity(3)
    assert dual_form(A2) == [[Fraction(2, 3), Fraction(1, 3)], [Fraction(1, 3), Fraction(2, 3)]]
    assert dual_form(dual_form(D4)) == D4


@settings(max_examples=30, deadline=None)
@given(unimodular_ops, st.sampled_from([A2, D4, root_lattice_a(3)]))
def test_min_transforms_under_unimodular(ops, Q):
    d = len(Q)
    U = unimodular(ops, d)
    P = conjugate(Q, U)
    a, b = minimal_vectors(Q), minimal_vectors(P)
    assert a.lambda1 == b.lambda1 and det(P) == det(Q)
    Uinv = inverse(U)
    mapped = sorted(sign_normalized([int(sum(Uinv[i][k] * x[k] for k in range(d))) for i in range(d)])
                    for x in a.vectors)
    assert mapped == list(b.vectors)
    assert hermite_invariant(P) == hermite_invariant(Q)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.sampled_from([A2, D4]))
def test_hermite_scale_invariant(s, Q):
    assert hermite_invariant([[s * x for x in row] for row in Q]) == hermite_invariant(Q)


def test_perfect_forms_have_enough_vectors():
    for Q in (A2, D4, root_lattice_a(5)):
        d = len(Q)
        md = minimal_vectors(Q)
        assert perfection_rank(md.vectors) == d * (d + 1) // 2
        assert len(md.vectors) >= d * (d + 1) // 2


def test_conjugate_is_congruence():
    U = [[1, 2], [0, 1]]
    assert conjugate(A2, U) == mat_mul(transpose(U), mat_mul(A2, U))
