"""Voronoi's graph traversal over perfect forms.

Starting from the root lattice A_d, every perfect form is treated once: the
extreme rays of its tangent cone are computed up to symmetry, each ray gives
a neighbouring perfect form, and neighbours are identified through their
canonical form.  The database stores one canonical, primitive integral form
per similarity class.
"""

from __future__ import annotations

import logging
import multiprocessing
import os
import time
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .canonical import canonical_pqf, form_automorphism_generators
from .exactla import NotPositiveDefinite, rank
from .polycone import ADMOptions, FacetOrbitList, SavingBank, adm_facet_orbits, dual_description
from .quadform import (
    as_form,
    dyad_coordinates,
    evaluate,
    from_upper_triangle,
    minimal_vectors,
    root_lattice_a,
    sym_pairs,
    upper_triangle,
)

log = logging.getLogger(__name__)


class NotPerfect(ValueError):
    pass


class NoNeighbour(RuntimeError):
    pass


class CorruptDatabase(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


# ---------------------------------------------------------------- single form

def root_form(d: int) -> list[list[int]]:
    if d < 2:
        raise ValueError("dimension must be at least 2")
    return root_lattice_a(d)


def tangent_cone(Q) -> list[tuple[int, ...]]:
    """Inequalities of the tangent cone in upper-triangle coordinates.

    The normal of x pairs with the coordinates of a form P to give x^T P x,
    so off-diagonal entries are doubled.
    """
    Q = as_form(Q)
    d = len(Q)
    normals = [tuple(v if i == j else 2 * v for (i, j), v in zip(sym_pairs(d), dyad_coordinates(x)))
               for x in minimal_vectors(Q).vectors]
    if rank(normals) < d * (d + 1) // 2:
        raise NotPerfect("minimal vectors do not determine the form")
    return normals


NEIGHBOUR_STEPS = 1000


def ray_matrix(f: Sequence[int], d: int) -> list[list[Fraction]]:
    """Symmetric R with x^T R x = f . dyad(x), for a functional f on dyad coordinates."""
    R = [[Fraction(0)] * d for _ in range(d)]
    for (i, j), v in zip(sym_pairs(d), f):
        if i == j:
            R[i][i] = Fraction(v)
        else:
            R[i][j] = R[j][i] = Fraction(v, 2)
    return R


def neighbour_form(Q, R) -> list[list[Fraction]]:
    """The perfect form Q + alpha R with alpha > 0 minimal such that a new minimal vector appears."""
    Q = as_form(Q)
    R = as_form(R)
    d = len(Q)
    md = minimal_vectors(Q)
    lam = md.lambda1
    old = set(md.vectors)
    if any(evaluate(R, x) < 0 for x in old):
        raise NoNeighbour("direction leaves the tangent cone")

    def at(alpha):
        return [[Q[i][j] + alpha * R[i][j] for j in range(d)] for i in range(d)]

    # bracket: Q + lo R keeps the minimum and Min(Q); Q + hi R is positive definite with a smaller minimum
    lo, hi = Fraction(0), Fraction(1)
    for _ in range(NEIGHBOUR_STEPS):
        trial = at(hi)
        try:
            cur = minimal_vectors(trial)
        except NotPositiveDefinite:
            hi = (lo + hi) / 2
            continue
        if cur.lambda1 < lam:
            break
        if not set(cur.vectors) <= old:
            return trial
        lo, hi = hi, 2 * hi
    else:
        raise NoNeighbour("no neighbour along this ray")
    # each shortest vector y of the trial form moves hi down to where Q + hi R takes the value lam at y
    for _ in range(NEIGHBOUR_STEPS):
        y = cur.vectors[0]
        hi = (evaluate(Q, y) - lam) / -evaluate(R, y)
        trial = at(hi)
        cur = minimal_vectors(trial)
        if cur.lambda1 == lam:
            return trial
    raise NoNeighbour("neighbour search did not converge")


@dataclass
class Neighbour:
    ray: tuple[int, ...]           # facet normal of the Voronoi domain, dyad coordinates
    orbit_size: int
    form: list[list[Fraction]]


def voronoi_domain(Q) -> tuple[list[tuple[int, ...]], list[list[int]]]:
    """Minimal vectors (up to sign) and their dyads, the rays of the Voronoi domain."""
    vecs = list(minimal_vectors(Q).vectors)
    return vecs, [dyad_coordinates(x) for x in vecs]


def _domain_group(Q, vecs: list[tuple[int, ...]]):
    spanning, G = form_automorphism_generators(Q)
    index = {v: k for k, v in enumerate(spanning)}
    return G.restricted([index[v] for v in vecs])


def neighbour_orbits(Q, opts: ADMOptions | None = None,
                     high_incidence_threshold: int | None = None) -> FacetOrbitList:
    Q = as_form(Q)
    vecs, V = voronoi_domain(Q)
    n = len(V[0])
    if rank(V) < n:
        raise NotPerfect("minimal vectors do not determine the form")
    G = _domain_group(Q, vecs)
    opts = opts or ADMOptions()
    if high_incidence_threshold is not None and len(vecs) <= high_incidence_threshold:
        opts = replace(opts, direct_threshold=len(vecs))
    return adm_facet_orbits(V, G, opts, verify_group=False)


def neighbours(Q, use_symmetry: bool = True, opts: ADMOptions | None = None,
               high_incidence_threshold: int | None = None) -> list[Neighbour]:
    """One neighbour per extreme-ray orbit of the tangent cone (per ray without symmetry)."""
    Q = as_form(Q)
    d = len(Q)
    if use_symmetry:
        orbits = neighbour_orbits(Q, opts, high_incidence_threshold)
        rays = [(o.normal, o.size) for o in orbits.orbits]
    else:
        _, V = voronoi_domain(Q)
        if rank(V) < len(V[0]):
            raise NotPerfect("minimal vectors do not determine the form")
        rays = [(f, 1) for f in dual_description(V)]
    return [Neighbour(tuple(f), size, neighbour_form(Q, ray_matrix(f, d))) for f, size in rays]


# ---------------------------------------------------------------- database

@dataclass
class FormRecord:
    d: int
    lambda1: int
    upper: tuple[int, ...]
    halfmin: int
    aut_order: int
    nneighbors: int
    hash: int
    parent: int
    treated: bool

    @property
    def form(self) -> list[list[int]]:
        return from_upper_triangle(self.upper, self.d)

    def format(self) -> str:
        return "; ".join([
            str(self.d), str(self.lambda1), ",".join(map(str, self.upper)), str(self.halfmin),
            str(self.aut_order), str(self.nneighbors), f"{self.hash:016x}",
            f"{self.parent:016x}", "1" if self.treated else "0",
        ])

    @classmethod
    def parse(cls, line: str, lineno: int = 0) -> "FormRecord":
        parts = [p.strip() for p in line.split(";")]
        if len(parts) != 9:
            raise CorruptDatabase(lineno, f"expected 9 fields, found {len(parts)}")
        try:
            d = int(parts[0])
            upper = tuple(int(x) for x in parts[2].split(","))
            rec = cls(d, int(parts[1]), upper, int(parts[3]), int(parts[4]), int(parts[5]),
                      int(parts[6], 16), int(parts[7], 16), parts[8] == "1")
        except ValueError as exc:
            raise CorruptDatabase(lineno, str(exc)) from None
        if parts[8] not in ("0", "1"):
            raise CorruptDatabase(lineno, "treated flag must be 0 or 1")
        if len(upper) != d * (d + 1) // 2:
            raise CorruptDatabase(lineno, "wrong number of form coefficients")
        return rec

    @property
    def sort_key(self) -> tuple:
        return (self.hash, self.upper)


def record_for(Q, parent: int = 0) -> FormRecord:
    """Untreated record of the class of Q."""
    can = canonical_pqf(Q)
    form = [list(row) for row in can.form]
    md = minimal_vectors(form)
    return FormRecord(len(form), int(md.lambda1), tuple(upper_triangle(form)), len(md.vectors),
                      can.aut_order, 0, can.hash, parent, False)


class FormDB:
    """Records keyed by canonical hash; equal hashes with different forms are kept apart."""

    def __init__(self, d: int, records: Iterable[FormRecord] = ()):
        self.d = d
        self._buckets: dict[int, list[FormRecord]] = {}
        for rec in records:
            self.add(rec)

    def find(self, rec: FormRecord) -> FormRecord | None:
        for other in self._buckets.get(rec.hash, ()):
            if other.upper == rec.upper:
                return other
        return None

    def add(self, rec: FormRecord) -> bool:
        """Insert if new; otherwise fold the parent into the stored record. True if inserted."""
        if rec.d != self.d:
            raise ValueError(f"record of dimension {rec.d} in a database of dimension {self.d}")
        old = self.find(rec)
        if old is None:
            self._buckets.setdefault(rec.hash, []).append(rec)
            return True
        if old.parent and rec.parent:
            old.parent = min(old.parent, rec.parent)
        return False

    def __len__(self) -> int:
        return sum(len(b) for b in self._buckets.values())

    def __iter__(self):
        return iter(self.records())

    def records(self) -> list[FormRecord]:
        return sorted((r for b in self._buckets.values() for r in b), key=lambda r: r.sort_key)

    def untreated(self) -> list[FormRecord]:
        return [r for r in self.records() if not r.treated]

    def hashes(self) -> set[int]:
        return set(self._buckets)

    def dumps(self) -> str:
        return "".join(r.format() + "\n" for r in self.records())

    def save(self, path: str | os.PathLike) -> None:
        path = os.fspath(path)
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(self.dumps())
        os.replace(tmp, path)

    @classmethod
    def loads(cls, text: str, d: int | None = None) -> "FormDB":
        recs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if line.strip() and not line.startswith("#"):
                recs.append(FormRecord.parse(line, lineno))
        if d is None:
            d = recs[0].d if recs else 0
        db = cls(d)
        for lineno, rec in enumerate(recs, 1):
            if rec.d != d:
                raise CorruptDatabase(lineno, "mixed dimensions")
            if not db.add(rec):
                raise CorruptDatabase(lineno, "duplicate record")
        return db

    @classmethod
    def load(cls, path: str | os.PathLike) -> "FormDB":
        with open(path) as fh:
            return cls.loads(fh.read())


# ---------------------------------------------------------------- enumeration

@dataclass
class EnumerateOptions:
    workers: int = 1
    checkpoint_secs: float | None = None
    out: str | None = None
    resume: bool = False
    use_symmetry: bool = True
    high_incidence_threshold: int | None = None
    adm: ADMOptions = field(default_factory=ADMOptions)
    bank_dir: str | None = None
    progress: Callable[[str], None] | None = None


def resume_path(out: str | os.PathLike) -> str:
    return os.fspath(out) + ".resume"


def treat(rec: FormRecord, opts: EnumerateOptions) -> tuple[int, list[FormRecord]]:
    """Neighbour orbit count and the (untreated) records of all neighbours."""
    adm = opts.adm
    if opts.bank_dir and adm.bank is None:
        adm = replace(adm, bank=SavingBank(opts.bank_dir))
    found = neighbours(rec.form, opts.use_symmetry, adm, opts.high_incidence_threshold)
    cands = {}
    for nb in found:
        c = record_for(nb.form, parent=rec.hash)
        cands.setdefault((c.hash, c.upper), c)
    return len(found), [cands[k] for k in sorted(cands)]


def _checkpoint(db: FormDB, out: str | None, pending: Iterable[int] = ()) -> None:
    if not out:
        return
    pending = set(pending)
    view = FormDB(db.d, [replace(r, treated=r.treated and r.hash not in pending) for r in db.records()])
    view.save(out)
    with open(resume_path(out), "w") as fh:
        fh.write(f"{db.d}\n")
        fh.writelines(f"{r.hash:016x}\n" for r in view.untreated())


def _initial_db(d: int, opts: EnumerateOptions) -> FormDB:
    if opts.resume and opts.out and os.path.exists(opts.out):
        db = FormDB.load(opts.out)
        if len(db) and db.d != d:
            raise ValueError(f"resume file holds dimension {db.d}, not {d}")
        db.d = d
        if len(db):
            for rec in db.records():
                if rec.treated is False:
                    rec.nneighbors = 0
            return db
    db = FormDB(d)
    db.add(record_for(root_form(d)))
    return db


def enumerate_forms(d: int, opts: EnumerateOptions | None = None) -> FormDB:
    """All perfect forms of dimension d up to similarity."""
    if d < 2:
        raise ValueError("dimension must be at least 2")
    opts = opts or EnumerateOptions()
    if opts.workers < 1:
        raise ValueError("need at least one worker")
    db = _initial_db(d, opts)
    if opts.workers == 1:
        _run_serial(db, opts)
    else:
        _run_sharded(db, opts)
    if opts.out:
        db.save(opts.out)
        if os.path.exists(resume_path(opts.out)):
            os.remove(resume_path(opts.out))
    return db


def _say(opts: EnumerateOptions, msg: str) -> None:
    log.info(msg)
    if opts.progress:
        opts.progress(msg)


def _run_serial(db: FormDB, opts: EnumerateOptions) -> None:
    last = time.monotonic()
    queue = deque(db.untreated())
    while queue:
        rec = queue.popleft()
        count, cands = treat(rec, opts)
        for c in cands:
            if db.add(c):
                queue.append(c)
        rec.nneighbors = count
        rec.treated = True
        _say(opts, f"treated {rec.hash:016x} halfmin={rec.halfmin} orbits={count} "
                   f"classes={len(db)} queue={len(queue)}")
        if opts.checkpoint_secs is not None and time.monotonic() - last >= opts.checkpoint_secs:
            _checkpoint(db, opts.out)
            last = time.monotonic()


# Sharded mode: worker k owns the records whose hash is k modulo the worker
# count.  Every message to a worker gets exactly one reply, so the
# coordinator knows the run is over when nothing is outstanding.

def _shard_main(k: int, inbox, outbox, opts: EnumerateOptions, d: int) -> None:
    shard = FormDB(d)
    while True:
        msg = inbox.get()
        kind = msg[0]
        if kind == "stop":
            return
        if kind == "dump":
            outbox.put(("dump", k, shard.records()))
            continue
        _, rec, origin, loading = msg
        try:
            new = shard.add(rec)
            stored = shard.find(rec)
            if stored.treated or not (new or loading):
                outbox.put(("dup", k, origin, stored))
                continue
            count, cands = treat(stored, opts)
            stored.nneighbors = count
            stored.treated = True
            outbox.put(("done", k, origin, stored, cands))
        except Exception as exc:  # pragma: no cover - reported by the coordinator
            outbox.put(("error", k, origin, repr(exc)))


def _run_sharded(db: FormDB, opts: EnumerateOptions) -> None:
    W = opts.workers
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:  # pragma: no cover
        ctx = multiprocessing.get_context("spawn")
    outbox = ctx.Queue()
    inboxes = [ctx.Queue() for _ in range(W)]
    procs = [ctx.Process(target=_shard_main, args=(k, inboxes[k], outbox, opts, db.d), daemon=True)
             for k in range(W)]
    for p in procs:
        p.start()
    outstanding = 0
    pending: dict[int, int] = {}    # treated form -> candidates not yet acknowledged

    def send(rec: FormRecord, origin: int, loading: bool) -> None:
        nonlocal outstanding
        outstanding += 1
        inboxes[rec.hash % W].put(("insert", rec, origin, loading))

    def settle(origin: int) -> None:
        if origin in pending:
            pending[origin] -= 1
            if pending[origin] == 0:
                del pending[origin]

    try:
        for rec in db.records():
            send(replace(rec), 0, True)
        last = time.monotonic()
        while outstanding:
            msg = outbox.get()
            outstanding -= 1
            kind = msg[0]
            if kind == "error":
                raise RuntimeError(f"worker {msg[1]} failed: {msg[3]}")
            origin, stored = msg[2], msg[3]
            if kind == "done":
                cands = msg[4]
                rec = db.find(stored)
                if rec is None:
                    db.add(replace(stored))
                    rec = db.find(stored)
                rec.nneighbors = stored.nneighbors
                rec.treated = True
                if cands:
                    pending[rec.hash] = len(cands)
                for c in cands:
                    db.add(replace(c))
                    send(c, rec.hash, False)
                _say(opts, f"treated {rec.hash:016x} halfmin={rec.halfmin} orbits={rec.nneighbors} "
                           f"classes={len(db)} outstanding={outstanding}")
            else:
                rec = db.find(stored)
                if rec is not None:
                    rec.parent = stored.parent
            settle(origin)
            if opts.checkpoint_secs is not None and time.monotonic() - last >= opts.checkpoint_secs:
                _checkpoint(db, opts.out, pending)
                last = time.monotonic()
        for box in inboxes:
            box.put(("dump",))
        shards = []
        for _ in range(W):
            msg = outbox.get()
            shards.extend(msg[2])
        final = FormDB(db.d, shards)
        db._buckets = final._buckets
    finally:
        for box in inboxes:
            box.put(("stop",))
        for p in procs:
            p.join(timeout=5)
            if p.is_alive():  # pragma: no cover
                p.terminate()


# ---------------------------------------------------------------- checks

def closure_violations(db: FormDB, opts: EnumerateOptions | None = None) -> list[tuple[int, int]]:
    """(form, neighbour) hash pairs where a treated form has a neighbour missing from db."""
    opts = opts or EnumerateOptions()
    bad = []
    for rec in db.records():
        if not rec.treated:
            continue
        _, cands = treat(rec, opts)
        for c in cands:
            if db.find(c) is None:
                bad.append((rec.hash, c.hash))
    return bad


def neighbour_graph(db: FormDB, opts: EnumerateOptions | None = None) -> dict[int, set[int]]:
    opts = opts or EnumerateOptions()
    return {rec.hash: {c.hash for c in treat(rec, opts)[1]} for rec in db.records()}


def record_problems(rec: FormRecord) -> list[str]:
    """Invariant violations of a single record."""
    problems = []
    try:
        can = canonical_pqf(rec.form)
    except Exception as exc:
        return [f"form rejected: {exc}"]
    if [list(r) for r in can.form] != rec.form:
        problems.append("form is not in canonical position")
    if can.hash != rec.hash:
        problems.append("hash does not match the canonical form")
    md = minimal_vectors(rec.form)
    if md.lambda1 != rec.lambda1:
        problems.append("stored minimum is wrong")
    if len(md.vectors) != rec.halfmin:
        problems.append("stored half kissing number is wrong")
    if rank([dyad_coordinates(x) for x in md.vectors]) != rec.d * (rec.d + 1) // 2:
        problems.append("form is not perfect")
    if can.aut_order != rec.aut_order:
        problems.append("stored automorphism order is wrong")
    if rec.treated and rec.nneighbors < 1:
        problems.append("treated record without neighbour count")
    return problems
