import os
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perfectforms.canonical import aut_order, canonical_pqf
from perfectforms.polycone import dual_description
from perfectforms.quadform import evaluate, is_perfect, minimal_vectors
from perfectforms.voronoi import (
    CorruptDatabase,
    EnumerateOptions,
    FormDB,
    FormRecord,
    NotPerfect,
    closure_violations,
    enumerate_forms,
    neighbour_form,
    neighbour_graph,
    neighbours,
    ray_matrix,
    record_for,
    record_problems,
    resume_path,
    root_form,
    tangent_cone,
    voronoi_domain,
)

A2 = [[2, -1], [-1, 2]]


def test_root_form():
    assert root_form(2) == A2
    assert root_form(3) == [[2, -1, 0], [-1, 2, -1], [0, -1, 2]]
    md = minimal_vectors(root_form(3))
    assert md.lambda1 == 2 and len(md.vectors) == 6
    assert all(is_perfect(root_form(d)) for d in range(2, 7))


def test_tangent_cone_a2():
    normals = tangent_cone(A2)
    assert len(normals) == 3
    assert len(dual_description(normals)) == 3
    with pytest.raises(NotPerfect):
        tangent_cone([[1, 0], [0, 1]])


@pytest.mark.parametrize("d", [2, 3, 4])
def test_tangent_cone_has_one_facet_per_vector_pair(d):
    Q = root_form(d)
    assert len(tangent_cone(Q)) == len(minimal_vectors(Q).vectors)


@pytest.mark.parametrize("Q", [A2, root_form(3), root_form(4),
                               [[2, -1, 0, 0], [-1, 2, -1, -1], [0, -1, 2, 0], [0, -1, 0, 2]]])
def test_neighbour_contract(Q):
    d = len(Q)
    md = minimal_vectors(Q)
    _, V = voronoi_domain(Q)
    for f in dual_description(V):
        R = ray_matrix(f, d)
        # the ray lies in the tangent cone and is tight on some minimal vectors
        assert all(evaluate(R, x) >= 0 for x in md.vectors)
        N = neighbour_form(Q, R)
        nmd = minimal_vectors(N)
        assert nmd.lambda1 == md.lambda1
        assert not set(nmd.vectors) <= set(md.vectors)
        assert is_perfect(N)
        # N - Q is a positive multiple of R
        i, j = next((i, j) for i in range(d) for j in range(d) if R[i][j])
        alpha = Fraction(N[i][j] - Q[i][j]) / R[i][j]
        assert alpha > 0
        assert all(N[a][b] - Q[a][b] == alpha * R[a][b] for a in range(d) for b in range(d))


@settings(max_examples=25, deadline=None)
@given(st.fractions(min_value=Fraction(1, 1000), max_value=1000), st.integers(0, 100))
def test_neighbour_ignores_direction_scale(scale, k):
    # large scales start outside the positive definite cone
    Q = [[2, -1, 0, 0], [-1, 2, -1, -1], [0, -1, 2, 0], [0, -1, 0, 2]]
    _, V = voronoi_domain(Q)
    facets = dual_description(V)
    R = ray_matrix(facets[k % len(facets)], 4)
    scaled = [[scale * x for x in row] for row in R]
    assert neighbour_form(Q, scaled) == neighbour_form(Q, R)


def test_a2_neighbours():
    nbs = neighbours(A2)
    assert len(nbs) == 1 and nbs[0].orbit_size == 3
    assert canonical_pqf(nbs[0].form).hash == canonical_pqf(A2).hash
    plain = neighbours(A2, use_symmetry=False)
    assert len(plain) == 3
    assert {canonical_pqf(n.form).hash for n in plain} == {canonical_pqf(A2).hash}


@pytest.mark.parametrize("d", [3, 4])
def test_symmetry_does_not_change_neighbour_classes(d):
    for rec in enumerate_forms(d).records():
        sym = neighbours(rec.form)
        plain = neighbours(rec.form, use_symmetry=False)
        assert sum(n.orbit_size for n in sym) == len(plain)
        assert {canonical_pqf(n.form).hash for n in sym} == {canonical_pqf(n.form).hash for n in plain}


def test_aut_order_a2():
    assert aut_order(A2) == 12


# ---------------------------------------------------------------- enumeration

@pytest.mark.parametrize("d,count", [(2, 1), (3, 1), (4, 2), (5, 3)])
def test_counts(d, count):
    db = enumerate_forms(d)
    assert len(db) == count
    assert all(r.treated and not record_problems(r) for r in db)


def test_dimension_four_classes():
    db = enumerate_forms(4)
    hashes = db.hashes()
    assert canonical_pqf(root_form(4)).hash in hashes
    assert canonical_pqf([[2, -1, 0, 0], [-1, 2, -1, -1], [0, -1, 2, 0], [0, -1, 0, 2]]).hash in hashes


@pytest.mark.parametrize("d", [3, 4, 5])
def test_closure_and_symmetric_graph(d):
    db = enumerate_forms(d)
    assert closure_violations(db) == []
    if d <= 4:
        graph = neighbour_graph(db)
        for a, nbs in graph.items():
            for b in nbs:
                assert a in graph[b]


def test_record_roundtrip():
    rec = replace(record_for(root_form(3)), nneighbors=2, treated=True, parent=0xABC)
    line = rec.format()
    assert FormRecord.parse(line) == rec
    assert line.split("; ")[0] == "3"
    with pytest.raises(CorruptDatabase):
        FormRecord.parse("3; 2; 1,2; 6; 48; 1; 00; 00; 1", 7)
    with pytest.raises(CorruptDatabase):
        FormRecord.parse("3; 2", 1)


def test_database_roundtrip(tmp_path):
    db = enumerate_forms(4)
    path = tmp_path / "d4.db"
    db.save(path)
    again = FormDB.load(path)
    assert again.dumps() == db.dumps()
    lines = path.read_text().splitlines()
    assert [FormRecord.parse(x).hash for x in lines] == sorted(r.hash for r in db)
    with pytest.raises(CorruptDatabase):
        FormDB.loads(lines[0] + "\n" + lines[0] + "\n")


def test_collision_guard():
    a = record_for(root_form(3))
    fake = replace(record_for(root_form(4)), d=3, upper=(4, 1, 1, 4, 1, 4), hash=a.hash)
    db = FormDB(3, [a])
    assert db.add(fake)
    assert len(db) == 2
    assert not db.add(replace(a))
    assert db.find(fake).upper == fake.upper


def test_parent_field_is_smallest_discoverer():
    db = enumerate_forms(5)
    root = record_for(root_form(5))
    for rec in db:
        if rec.hash == root.hash:
            assert rec.parent == 0
        else:
            assert rec.parent in db.hashes()


def test_resume_matches_clean_run(tmp_path):
    out = tmp_path / "d5.db"
    treated = []

    def stop_after_two(msg):
        treated.append(msg)
        if len(treated) == 2:
            raise KeyboardInterrupt

    opts = EnumerateOptions(out=str(out), checkpoint_secs=0, progress=stop_after_two)
    with pytest.raises(KeyboardInterrupt):
        enumerate_forms(5, opts)
    assert os.path.exists(resume_path(out))
    partial = FormDB.load(out)
    assert any(not r.treated for r in partial)
    db = enumerate_forms(5, EnumerateOptions(out=str(out), resume=True))
    assert not os.path.exists(resume_path(out))
    assert db.dumps() == enumerate_forms(5).dumps()


def test_workers_give_identical_output():
    assert enumerate_forms(4, EnumerateOptions(workers=3)).dumps() == enumerate_forms(4).dumps()
