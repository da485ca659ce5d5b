"""Readiness constraints over ending-reset and location variables.

Literals are plain tuples:

* ``("b", r, pol)``       reset variable of row ``r`` equals ``pol``
* ``("eq", r1, r2, pol)`` location of ``r1`` equals (``pol``) or differs from that of ``r2``
* ``("is", r, k, pol)``   location of ``r`` is (or is not) ``k``
* ``("in", r, lo, hi)``   ``lo <= location(r) <= hi``

A clause is a disjunction of literals.  The reset variable of the empty word
(row 0) is pinned true and folded away during construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .table import S, S_PLUS, ObservationTable


class Infeasible(Exception):
    """More S rows than locations: N must grow before anything can be solved."""


@dataclass(frozen=True)
class Clause:
    lits: tuple
    tag: str


@dataclass
class ConstraintSystem:
    rows: list
    N: int
    base: list = field(default_factory=list)
    overlay: list = field(default_factory=list)
    overlay_kind: str = "C3"
    labels: dict = field(default_factory=dict)

    @property
    def clauses(self) -> list:
        return self.base + self.overlay

    def with_overlay(self, kind: str, overlay: list) -> "ConstraintSystem":
        return ConstraintSystem(self.rows, self.N, self.base, overlay, kind, self.labels)


@dataclass
class SolverModel:
    reset: dict
    loc: dict


def _norm_eq(r1: int, r2: int, pol: bool):
    return ("eq", r1, r2, pol) if r1 < r2 else ("eq", r2, r1, pol)


def encode_lr(table: ObservationTable, r: int, i: int) -> list[tuple[int, bool]]:
    """Conjunction for "the last reset of row r is at position i", as (row, polarity) pairs."""
    pids = table.prefix_ids[r]
    if not 0 <= i < len(pids):
        raise IndexError(f"reset position {i} out of range")
    lits = [] if pids[i] == 0 else [(pids[i], True)]
    lits.extend((p, False) for p in pids[i + 1:])
    return lits


def _clause(lits, tag: str) -> Optional[Clause]:
    """Drop duplicates and constant-false literals; None if the clause is a tautology."""
    out = []
    seen = set()
    for lit in lits:
        if lit[0] == "b" and lit[1] == 0:
            if lit[2]:
                return None
            continue
        if lit[0] == "eq" and lit[1] == lit[2]:
            if lit[3]:
                return None
            continue
        if lit in seen:
            continue
        if lit[0] in ("b", "eq") and lit[:-1] + (not lit[-1],) in seen:
            return None
        seen.add(lit)
        out.append(lit)
    return Clause(tuple(out), tag)


def _neg_lr(table, r1, i, r2, j) -> list:
    return [("b", x, not pol) for x, pol in encode_lr(table, r1, i) + encode_lr(table, r2, j)]


def _c1_pair(table: ObservationTable, r1: int, r2: int) -> list[Clause]:
    prof = table.f_profile(r1, r2)
    bad = [c for c, v in prof.items() if not v]
    if not bad:
        return []
    neq = _norm_eq(r1, r2, False)
    tag = f"C1 {r1},{r2}"
    if len(bad) == len(prof):
        return [Clause((neq,), tag)]
    out = []
    left = set(bad)
    for i in sorted({c[0] for c in bad}):
        row = [c for c in prof if c[0] == i]
        if all(not prof[c] for c in row):
            cl = _clause([("b", x, not p) for x, p in encode_lr(table, r1, i)] + [neq], tag)
            if cl:
                out.append(cl)
            left -= set(row)
    for i, j in sorted(left):
        cl = _clause(_neg_lr(table, r1, i, r2, j) + [neq], tag)
        if cl:
            out.append(cl)
    return out


def build_C1(table: ObservationTable) -> list[Clause]:
    """Distinctness.  Certainly distinct pairs collapse to one unconditional clause;
    a reset position whose every valid partner is distinguished collapses too.

    Per-pair results are cached on the table and reused while E is unchanged;
    certainly distinct pairs stay that way for good.
    """
    cache = table.derived.setdefault("C1", {})
    n_e = len(table.E)
    clauses = []
    for r2 in range(len(table.words)):
        for r1 in range(r2):
            hit = cache.get((r1, r2))
            if hit is None or (hit[0] != n_e and not hit[2]):
                cls = _c1_pair(table, r1, r2)
                final = len(cls) == 1 and len(cls[0].lits) == 1
                hit = cache[(r1, r2)] = (n_e, cls, final)
            clauses.extend(hit[1])
    return clauses


def build_C2(table: ObservationTable, quads=None) -> list[Clause]:
    """Consistency: equal parents under a reset combination force equal children."""
    clauses = []
    for p1, p2, i, j, c1, c2 in table.eligible_quadruples() if quads is None else quads:
        pre = [_norm_eq(p1, p2, False)] + _neg_lr(table, p1, i, p2, j)
        tag = f"C2 {p1},{p2}|{i},{j}->{c1},{c2}"
        if table.outputs_clash(c1, c2):
            cl = _clause(pre, tag + " out")
            if cl:
                clauses.append(cl)
            continue
        for tail in (
            [("b", c1, False), ("b", c2, True)],
            [("b", c1, True), ("b", c2, False)],
            [_norm_eq(c1, c2, True)],
        ):
            cl = _clause(pre + tail, tag)
            if cl:
                clauses.append(cl)
    return clauses


def build_C3_prime(table: ObservationTable, N: int) -> list[Clause]:
    return [Clause((("in", r, 1, N),), "C3'") for r in range(len(table.words))]


def build_C3(table: ObservationTable, N: int) -> list[Clause]:
    reps = table.rows(S, S_PLUS)
    onto = [Clause(tuple(("is", r, k, True) for r in reps), f"C3 {k}") for k in range(1, N + 1)]
    return onto + build_C3_prime(table, N)


def build_C4(table: ObservationTable, N: int) -> list[Clause]:
    srows = table.rows(S)
    if len(srows) > N:
        raise Infeasible(f"|S|={len(srows)} exceeds N={N}")
    return [Clause((("is", r, k, True),), "C4") for k, r in enumerate(srows, start=1)]


def complete_suffixes(table: ObservationTable) -> list[tuple]:
    """Run suffix discovery until E stops growing; returns suffixes added."""
    added = []
    while True:
        new = table.discover_suffixes()
        if not new:
            return added
        for e in new:
            if table.add_suffix(e):
                added.append(e)


def build_system(table: ObservationTable, N: int, overlay: str = "C3") -> ConstraintSystem:
    """Base C1 and C2 and C4 with the requested closedness overlay (``"C3"`` or ``"C3'"``)."""
    base = build_C4(table, N)
    base += build_C1(table)
    base += build_C2(table)
    labels = {r: w for r, w in enumerate(table.words)}
    system = ConstraintSystem(list(range(len(table.words))), N, base, [], overlay, labels)
    return system.with_overlay(overlay, build_C3(table, N) if overlay == "C3" else build_C3_prime(table, N))


def eval_literal(lit, model: SolverModel) -> bool:
    kind = lit[0]
    if kind == "b":
        return (True if lit[1] == 0 else model.reset[lit[1]]) == lit[2]
    if kind == "eq":
        return (model.loc[lit[1]] == model.loc[lit[2]]) == lit[3]
    if kind == "is":
        return (model.loc[lit[1]] == lit[2]) == lit[3]
    if kind == "in":
        return lit[2] <= model.loc[lit[1]] <= lit[3]
    raise ValueError(f"unknown literal {lit!r}")


def satisfies(system: ConstraintSystem, model: SolverModel) -> bool:
    if model.reset.get(0, True) is not True:
        return False
    if any(not 1 <= model.loc[r] <= system.N for r in system.rows):
        return False
    return all(any(eval_literal(l, model) for l in cl.lits) for cl in system.clauses)


def _smt_name(kind: str, r: int) -> str:
    return f"{kind}_eps" if r == 0 else f"{kind}_r{r}"


def _smt_lit(lit) -> str:
    kind = lit[0]
    if kind == "b":
        v = _smt_name("b", lit[1])
        return v if lit[2] else f"(not {v})"
    if kind == "eq":
        s = f"(= {_smt_name('q', lit[1])} {_smt_name('q', lit[2])})"
        return s if lit[3] else f"(not {s})"
    if kind == "is":
        s = f"(= {_smt_name('q', lit[1])} {lit[2]})"
        return s if lit[3] else f"(not {s})"
    q = _smt_name("q", lit[1])
    return f"(and (<= {lit[2]} {q}) (<= {q} {lit[3]}))"


def export_smtlib(system: ConstraintSystem) -> str:
    lines = ["(set-logic QF_LIA)"]
    for r in system.rows:
        lines.append(f"(declare-fun {_smt_name('b', r)} () Bool)")
        lines.append(f"(declare-fun {_smt_name('q', r)} () Int)")
    lines.append("(assert b_eps)")
    ranged = {cl.lits[0][1] for cl in system.clauses if len(cl.lits) == 1 and cl.lits[0][0] == "in"}
    for r in system.rows:
        if r not in ranged:
            lines.append(f"(assert {_smt_lit(('in', r, 1, system.N))})")
    for cl in system.clauses:
        if not cl.lits:
            lines.append(f"(assert false) ; {cl.tag}")
        elif len(cl.lits) == 1:
            lines.append(f"(assert {_smt_lit(cl.lits[0])}) ; {cl.tag}")
        else:
            lines.append(f"(assert (or {' '.join(_smt_lit(l) for l in cl.lits)})) ; {cl.tag}")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"
