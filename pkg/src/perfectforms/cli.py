"""Command line front end: enumerate, classify, dualdesc, verify.

Exit codes: 0 success, 1 a check failed, 2 bad input or usage.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from typing import Sequence

from .classify import report
from .permgroup import PermGroup
from .polycone import (
    BANK_COST_THRESHOLD,
    DIRECT_THRESHOLD,
    SYMMETRY_THRESHOLD,
    ADMOptions,
    SavingBank,
    adm_facet_orbits,
    dual_description,
)
from .voronoi import (
    CorruptDatabase,
    EnumerateOptions,
    FormDB,
    closure_violations,
    enumerate_forms,
    record_problems,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    dimension: int
    workers: int = 1
    checkpoint_secs: float | None = None
    out: str | None = None
    bank: str | None = None
    resume: bool = False
    direct_threshold: int = DIRECT_THRESHOLD
    symmetry_threshold: int = SYMMETRY_THRESHOLD
    bank_cost_threshold: float = BANK_COST_THRESHOLD
    high_incidence_threshold: int | None = None
    verbosity: int = 0

    def __post_init__(self):
        if self.dimension < 2:
            raise InputError("dimension must be at least 2")
        if self.workers < 1:
            raise InputError("need at least one worker")

    def adm_options(self) -> ADMOptions:
        return ADMOptions(direct_threshold=self.direct_threshold,
                          symmetry_threshold=self.symmetry_threshold,
                          bank_cost_threshold=self.bank_cost_threshold)

    def enumerate_options(self) -> EnumerateOptions:
        return EnumerateOptions(workers=self.workers, checkpoint_secs=self.checkpoint_secs,
                                out=self.out, resume=self.resume,
                                high_incidence_threshold=self.high_incidence_threshold,
                                adm=self.adm_options(), bank_dir=self.bank)


# ---------------------------------------------------------------- file formats

def _int_rows(path: str) -> list[tuple[int, list[int]]]:
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    rows = []
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        try:
            rows.append((lineno, [int(x) for x in text.split()]))
        except ValueError:
            raise InputError(f"{path}:{lineno}: expected integers, got {text!r}") from None
    return rows


def read_cone(path: str) -> list[list[int]]:
    """One ray per line, integers separated by spaces; '#' starts a comment."""
    rows = _int_rows(path)
    if not rows:
        raise InputError(f"{path}: no rays")
    n = len(rows[0][1])
    for lineno, r in rows:
        if len(r) != n:
            raise InputError(f"{path}:{lineno}: ray has {len(r)} coordinates, expected {n}")
    return [r for _, r in rows]


def read_group(path: str, degree: int) -> PermGroup:
    """One generator per line, as the list of images of 0..degree-1."""
    gens = []
    for lineno, g in _int_rows(path):
        if sorted(g) != list(range(degree)):
            raise InputError(f"{path}:{lineno}: not a permutation of 0..{degree - 1}")
        gens.append(tuple(g))
    return PermGroup(degree, gens)


def format_cone(V: Sequence[Sequence[int]]) -> str:
    return "".join(" ".join(map(str, v)) + "\n" for v in V)


def format_group(G: PermGroup) -> str:
    return "".join(" ".join(map(str, g)) + "\n" for g in G.generators)


def _load_db(path: str) -> FormDB:
    if not os.path.exists(path):
        raise InputError(f"{path}: no such file")
    try:
        return FormDB.load(path)
    except CorruptDatabase as exc:
        raise InputError(f"{path}:{exc.line}: {exc.message}") from None


# ---------------------------------------------------------------- commands

def cmd_enumerate(config: RunConfig, expect: int | None = None) -> int:
    db = enumerate_forms(config.dimension, config.enumerate_options())
    print(f"dim={config.dimension} classes={len(db)}")
    if expect is not None and len(db) != expect:
        print(f"expected {expect} classes", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_classify(db_path: str) -> int:
    db = _load_db(db_path)
    rep = report(db)
    with open(db_path + ".report.txt", "w") as fh:
        fh.write(rep.to_text())
    with open(db_path + ".report.csv", "w") as fh:
        fh.write(rep.to_csv())
    sys.stdout.write(rep.to_text())
    return EXIT_OK


def cmd_dualdesc(cone_path: str, group_path: str | None, out: str | None, opts: ADMOptions) -> int:
    V = read_cone(cone_path)
    lines = []
    try:
        if group_path is None:
            facets = dual_description(V)
            lines = [" ".join(map(str, f)) for f in facets]
            summary = f"facets={len(facets)}"
        else:
            G = read_group(group_path, len(V))
            res = adm_facet_orbits(V, G, opts)
            lines = [f"{o.size}: " + " ".join(map(str, o.normal)) for o in res.orbits]
            summary = f"orbits={len(res.orbits)} facets={res.total}"
    except ValueError as exc:
        raise InputError(f"{cone_path}: {exc}") from None
    text = "".join(x + "\n" for x in lines)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(summary, file=sys.stderr if not out else sys.stdout)
    return EXIT_OK


def cmd_verify(db_path: str, expect: int | None, closure: bool = True) -> int:
    db = _load_db(db_path)
    ok = True
    if expect is not None and len(db) != expect:
        print(f"class count {len(db)} differs from the expected {expect}")
        ok = False
    for rec in db.records():
        for problem in record_problems(rec):
            print(f"record {rec.hash:016x}: {problem}")
            ok = False
        if not rec.treated:
            print(f"record {rec.hash:016x}: untreated")
            ok = False
    if ok and closure:
        for form, nb in closure_violations(db):
            print(f"record {form:016x}: neighbour {nb:016x} missing")
            ok = False
    print(f"dim={db.d} classes={len(db)} {'ok' if ok else 'FAILED'}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- argument parsing

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="perfectforms", description="Enumerate and classify perfect forms.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def thresholds(sp):
        sp.add_argument("--direct-threshold", type=int, default=DIRECT_THRESHOLD,
                        help="use a plain dual description when rays - dimension is at most this")
        sp.add_argument("--symmetry-threshold", type=int, default=SYMMETRY_THRESHOLD,
                        help="look for extra symmetry on ridges above this excess")
        sp.add_argument("--bank-cost-threshold", type=float, default=BANK_COST_THRESHOLD,
                        help="store dual descriptions that took longer than this many seconds")
        sp.add_argument("--bank", default=os.environ.get("PF_BANK_DIR"),
                        help="saving bank directory (default: $PF_BANK_DIR)")

    e = sub.add_parser("enumerate", help="run Voronoi's algorithm")
    e.add_argument("-d", "--dim", type=int, required=True)
    e.add_argument("-o", "--out")
    e.add_argument("-j", "--workers", type=int, default=1)
    e.add_argument("--resume", action="store_true")
    e.add_argument("--expect", type=int)
    e.add_argument("--checkpoint-secs", type=float)
    e.add_argument("--high-incidence-threshold", type=int)
    thresholds(e)

    c = sub.add_parser("classify", help="write eutaxy and invariant reports for a database")
    c.add_argument("db")

    dd = sub.add_parser("dualdesc", help="facets (or facet orbits) of a cone")
    dd.add_argument("cone")
    dd.add_argument("group", nargs="?")
    dd.add_argument("-o", "--out")
    thresholds(dd)

    v = sub.add_parser("verify", help="check a database")
    v.add_argument("db")
    v.add_argument("--expect", type=int)
    v.add_argument("--no-closure", action="store_true", help="skip recomputing neighbours")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(asctime)s %(message)s")
    try:
        if args.command == "enumerate":
            config = RunConfig(args.dim, args.workers, args.checkpoint_secs, args.out, args.bank,
                               args.resume, args.direct_threshold, args.symmetry_threshold,
                               args.bank_cost_threshold, args.high_incidence_threshold, args.verbose)
            if config.resume and not config.out:
                raise InputError("--resume needs -o/--out")
            return cmd_enumerate(config, args.expect)
        if args.command == "classify":
            return cmd_classify(args.db)
        if args.command == "dualdesc":
            opts = ADMOptions(direct_threshold=args.direct_threshold,
                              symmetry_threshold=args.symmetry_threshold,
                              bank_cost_threshold=args.bank_cost_threshold,
                              bank=SavingBank(args.bank) if args.bank else None)
            return cmd_dualdesc(args.cone, args.group, args.out, opts)
        return cmd_verify(args.db, args.expect, closure=not args.no_closure)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_FAIL
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
