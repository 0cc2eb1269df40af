"""Classification of perfect forms: eutaxy, extremeness, dual extremeness, report tables."""

from __future__ import annotations

import csv
import enum
import io
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .exactla import inverse, mat_mul, rank
from .lp import ExactLP, LPResult, lp_solve
from .quadform import (
    as_form,
    dyad_coordinates,
    has_a2_section,
    hermite_invariant,
    is_perfect,
    min_vectors_span,
    minimal_vectors,
    sym_pairs,
    upper_triangle,
)

__all__ = [
    "EutaxyStatus", "Eutaxy", "ExactLP", "LPResult", "lp_solve", "eutaxy_classify",
    "witness_holds", "is_eutactic", "is_extreme", "dual_extreme_check", "bm_invariant_sq",
    "Report", "report",
]


class EutaxyStatus(enum.IntEnum):
    NOT_SEMI_EUTACTIC = 0
    SEMI_EUTACTIC = 1
    EUTACTIC = 2
    STRONGLY_EUTACTIC = 3

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")


@dataclass
class Eutaxy:
    status: EutaxyStatus
    # one coefficient per +-pair of minimal vectors, in the order of `vectors`
    witness: list[Fraction] = field(default_factory=list)
    vectors: tuple[tuple[int, ...], ...] = ()


def _dyad_sum(vectors: Sequence[Sequence[int]], coeffs: Sequence[Fraction], d: int) -> list[list[Fraction]]:
    S = [[Fraction(0)] * d for _ in range(d)]
    for x, c in zip(vectors, coeffs):
        for i in range(d):
            for j in range(d):
                S[i][j] += c * x[i] * x[j]
    return S


def eutaxy_classify(Q) -> Eutaxy:
    """Decide how Q^-1 sits in the cone spanned by the dyads of Min(Q).

    Maximizes t subject to  sum_x c_x x x^T = Q^-1  and  c_x >= t,
    written with c_x = t + s_x and s_x >= 0.
    """
    Q = as_form(Q)
    d = len(Q)
    vecs = minimal_vectors(Q).vectors
    target = upper_triangle(inverse(Q))
    k = len(vecs)

    # all coefficients equal: the trace of Q times the dyad sum fixes the constant
    total = _dyad_sum(vecs, [1] * k, d)
    scale = Fraction(d) / sum(Q[i][j] * total[j][i] for i in range(d) for j in range(d))
    if [scale * v for v in upper_triangle(total)] == target:
        return Eutaxy(EutaxyStatus.STRONGLY_EUTACTIC, [scale] * k, vecs)

    dyads = [dyad_coordinates(x) for x in vecs]
    n = len(target)
    A_eq = [[dyads[x][r] for x in range(k)] + [sum(v[r] for v in dyads)] for r in range(n)]
    res = lp_solve([0] * k + [1], A_eq=A_eq, b_eq=target)
    if not res.optimal:
        return Eutaxy(EutaxyStatus.NOT_SEMI_EUTACTIC, [], vecs)
    t = res.value
    status = EutaxyStatus.EUTACTIC if t > 0 else EutaxyStatus.SEMI_EUTACTIC
    return Eutaxy(status, [s + t for s in res.x[:k]], vecs)


def witness_holds(Q, eutaxy: Eutaxy) -> bool:
    """Do the witness coefficients reproduce Q^-1 exactly (and have the claimed signs)?"""
    if eutaxy.status == EutaxyStatus.NOT_SEMI_EUTACTIC:
        return not eutaxy.witness
    Q = as_form(Q)
    if _dyad_sum(eutaxy.vectors, eutaxy.witness, len(Q)) != inverse(Q):
        return False
    if eutaxy.status == EutaxyStatus.SEMI_EUTACTIC:
        return all(c >= 0 for c in eutaxy.witness)
    if eutaxy.status == EutaxyStatus.STRONGLY_EUTACTIC and len(set(eutaxy.witness)) != 1:
        return False
    return all(c > 0 for c in eutaxy.witness)


def is_eutactic(Q) -> bool:
    return eutaxy_classify(Q).status >= EutaxyStatus.EUTACTIC


def is_extreme(Q) -> bool:
    return is_perfect(Q) and is_eutactic(Q)


def dual_extreme_check(Q) -> bool:
    """Dual-perfect and dual-eutactic, decided exactly.

    Dual eutaxy asks for positive a_x, b_y with
    Q (sum a_x x x^T) Q = sum b_y y y^T, x in Min(Q), y in Min(Q^-1).
    """
    Q = as_form(Q)
    d = len(Q)
    Qi = inverse(Q)
    xs = minimal_vectors(Q).vectors
    ys = minimal_vectors(Qi).vectors
    lhs = [upper_triangle(mat_mul(Q, mat_mul([[a * b for b in x] for a in x], Q))) for x in xs]
    rhs = [dyad_coordinates(y) for y in ys]
    if rank(lhs + rhs) < d * (d + 1) // 2:
        return False
    kx, ky = len(xs), len(ys)
    nvar = kx + ky
    n = len(sym_pairs(d))
    # coefficients t + s_v with s_v >= 0, normalized to sum 1
    cols = [lhs[x] for x in range(kx)] + [[-v for v in rhs[y]] for y in range(ky)]
    A_eq = [[col[r] for col in cols] + [sum(col[r] for col in cols)] for r in range(n)]
    A_eq.append([1] * nvar + [nvar])
    res = lp_solve([0] * nvar + [1], A_eq=A_eq, b_eq=[0] * n + [1])
    return res.optimal and res.value > 0


def bm_invariant_sq(Q) -> Fraction:
    """lambda_1(Q) * lambda_1(Q^-1)."""
    Q = as_form(Q)
    return minimal_vectors(Q).lambda1 * minimal_vectors(inverse(Q)).lambda1


# ---------------------------------------------------------------- report

@dataclass
class FormSummary:
    hash: str
    halfmin: int
    aut_order: int
    scale: int
    hermite: Fraction
    eutaxy: EutaxyStatus
    extreme: bool
    dual_extreme: bool
    bm_sq: Fraction
    a2_section: bool
    min_spans: bool


@dataclass
class Report:
    d: int
    forms: list[FormSummary]

    def histogram(self, key: str) -> list[tuple[object, int]]:
        counts = Counter(getattr(f, key) for f in self.forms)
        return sorted(counts.items())

    def tables(self) -> dict[str, list[tuple[object, int]]]:
        return {
            "halfmin": self.histogram("halfmin"),
            "aut_order": self.histogram("aut_order"),
            "scale": self.histogram("scale"),
            "eutaxy": [(s.label, c) for s, c in self.histogram("eutaxy")],
        }

    def densest(self) -> list[FormSummary]:
        if not self.forms:
            return []
        best = max(f.hermite for f in self.forms)
        return [f for f in self.forms if f.hermite == best]

    def hollow_candidates(self) -> list[FormSummary]:
        return [f for f in self.forms if not f.a2_section]

    def span_failures(self) -> list[FormSummary]:
        return [f for f in self.forms if not f.min_spans]

    def to_text(self) -> str:
        out = [f"dimension {self.d}: {len(self.forms)} forms"]
        for name, rows in self.tables().items():
            out.append("")
            width = max([len(name)] + [len(str(k)) for k, _ in rows])
            out.append(f"{name:>{width}}  count")
            out.extend(f"{str(k):>{width}}  {c:5d}" for k, c in rows)
            out.append(f"{'total':>{width}}  {sum(c for _, c in rows):5d}")
        out.append("")
        for f in self.densest():
            out.append(f"densest: {f.hash} hermite^d={f.hermite}")
        out.append("hollow candidates: " + (" ".join(f.hash for f in self.hollow_candidates()) or "none"))
        out.append("minimal vectors not spanning: " + (" ".join(f.hash for f in self.span_failures()) or "none"))
        return "\n".join(out) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["hash", "halfmin", "aut_order", "scale", "hermite_d", "eutaxy", "extreme",
                    "dual_extreme", "bm_invariant_sq", "a2_section", "min_spans"])
        for f in self.forms:
            w.writerow([f.hash, f.halfmin, f.aut_order, f.scale, f.hermite, f.eutaxy.label,
                        int(f.extreme), int(f.dual_extreme), f.bm_sq, int(f.a2_section), int(f.min_spans)])
        return buf.getvalue()


def summarize(Q, hash_hex: str, aut: int) -> FormSummary:
    Q = as_form(Q)
    md = minimal_vectors(Q)
    eu = eutaxy_classify(Q)
    perfect = rank([dyad_coordinates(x) for x in md.vectors]) == len(Q) * (len(Q) + 1) // 2
    return FormSummary(
        hash=hash_hex,
        halfmin=len(md.vectors),
        aut_order=aut,
        scale=int(md.lambda1),
        hermite=hermite_invariant(Q),
        eutaxy=eu.status,
        extreme=perfect and eu.status >= EutaxyStatus.EUTACTIC,
        dual_extreme=dual_extreme_check(Q),
        bm_sq=bm_invariant_sq(Q),
        a2_section=has_a2_section(Q),
        min_spans=min_vectors_span(Q),
    )


def report(db) -> Report:
    """Summaries of all records of a FormDB (forms are stored primitive integral)."""
    forms = [summarize(rec.form, f"{rec.hash:016x}", rec.aut_order) for rec in db.records()]
    return Report(db.d, forms)
