"""Timed observation table with symbolic last-reset combinations.

Rows are identified by small integers in insertion order; row 0 is the empty
word.  ``f`` values are cached per (row pair, reset combination) together
with the number of suffixes already checked, so growing ``E`` only costs the
new tests.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .models import InputError, TimedAction, format_time, nu_c, region_of, word_str, word_to_json

S, S_PLUS, R = "S", "S+", "R"
ZERO = Fraction(0)


class TableError(RuntimeError):
    pass


def common_prefix_length(w1: Sequence, w2: Sequence) -> int:
    m = 0
    for a, b in zip(w1, w2):
        if a != b:
            break
        m += 1
    return m


def valid_reset_combinations(w1: Sequence, w2: Sequence) -> list[tuple[int, int]]:
    m = common_prefix_length(w1, w2)
    return [
        (i1, i2)
        for i1 in range(len(w1) + 1)
        for i2 in range(len(w2) + 1)
        if not (i1 <= m and i2 <= m) or i1 == i2
    ]


def align_suffix(w1: Sequence, w2: Sequence, i1: int, i2: int, e: Sequence):
    """Pad the first delay on the side with the smaller clock value."""
    if not e:
        raise InputError("alignment needs a nonempty suffix")
    if (i1, i2) not in valid_reset_combinations(w1, w2):
        raise TableError(f"invalid reset combination {(i1, i2)}")
    gap = nu_c(w1, i1) - nu_c(w2, i2)
    return _shift(e, -gap if gap < 0 else ZERO), _shift(e, gap if gap > 0 else ZERO)


def _shift(e: Sequence, d: Fraction) -> tuple:
    if not d:
        return tuple(e)
    return (TimedAction(e[0][0], e[0][1] + d),) + tuple(e[1:])


class ObservationTable:
    """``query`` answers membership (bool for DOTA, output tuple for DTMM)."""

    def __init__(
        self,
        alphabet: Iterable[str],
        query: Callable,
        mode: str = "dota",
        sink_query: Optional[Callable] = None,
    ):
        if mode not in ("dota", "dtmm"):
            raise InputError(f"unknown mode {mode!r}")
        self.alphabet = tuple(alphabet)
        self.mode = mode
        self._query = query
        self._sink_query = sink_query
        self.words: list[tuple] = []
        self.index: dict = {}
        self.status: list[str] = []
        self.obs: list = []
        self.sink: list[bool] = []
        self.parent: list[int] = []
        self.children: list[list[int]] = []
        self.prefix_ids: list[tuple] = []  # ids of w|0 .. w|n
        self.clock: list[tuple] = []  # nu_c(w, i) for i = 0..n
        self.E: list[tuple] = [()]
        self._E_set = {()}
        self._f: dict = {}
        self._ext: dict = {}
        self.derived: dict = {}  # caches kept by constraint builders
        self.add_row((), S)
        for a in self.alphabet:
            self.add_row((TimedAction(a, ZERO),), R)

    # --- rows ---------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.words)

    def rows(self, *statuses: str) -> list[int]:
        return [r for r, st in enumerate(self.status) if st in statuses]

    @property
    def S(self) -> list[tuple]:
        return [self.words[r] for r in self.rows(S)]

    @property
    def S_plus(self) -> list[tuple]:
        return [self.words[r] for r in self.rows(S_PLUS)]

    @property
    def R(self) -> list[tuple]:
        return [self.words[r] for r in self.rows(R)]

    def row_id(self, w) -> int:
        return self.index[tuple(w)]

    def add_row(self, w: tuple, status: str = R) -> int:
        w = tuple(TimedAction(a, Fraction(d)) for a, d in w)
        if w in self.index:
            return self.index[w]
        rid = len(self.words)
        if w:
            par = self.index.get(w[:-1])
            if par is None:
                raise TableError(f"prefix of {word_str(w)} is not a row")
            self.children[par].append(rid)
            prefix_ids = self.prefix_ids[par] + (rid,)
        else:
            par = -1
            prefix_ids = (rid,)
        self.words.append(w)
        self.index[w] = rid
        self.status.append(status)
        self.parent.append(par)
        self.children.append([])
        self.prefix_ids.append(prefix_ids)
        self.clock.append(tuple(nu_c(w, i) for i in range(len(w) + 1)))
        self.obs.append(self._query(w))
        self.sink.append(bool(self._sink_query(w)[1]) if self._sink_query else False)
        if status != R:
            self._add_successors(rid)
        return rid

    def _add_successors(self, rid: int) -> list[int]:
        w = self.words[rid]
        added = []
        for a in self.alphabet:
            succ = w + (TimedAction(a, ZERO),)
            if succ not in self.index:
                added.append(self.add_row(succ, R))
        return added

    def _promote(self, rid: int, status: str) -> None:
        if self.status[rid] != R:
            raise TableError(f"row {word_str(self.words[rid])} is not in R")
        self.status[rid] = status
        self._add_successors(rid)

    # --- distinguishing -----------------------------------------------------

    def valid_combinations(self, r1: int, r2: int) -> list[tuple[int, int]]:
        p1, p2 = self.prefix_ids[r1], self.prefix_ids[r2]
        m = common_prefix_length(p1, p2) - 1
        return [
            (i1, i2)
            for i1 in range(len(p1))
            for i2 in range(len(p2))
            if not (i1 <= m and i2 <= m) or i1 == i2
        ]

    def _ext_obs(self, rid: int, eid: int, shift: Fraction):
        key = (rid, eid, shift)
        hit = self._ext.get(key)
        if hit is None:
            w = self.words[rid]
            out = self._query(w + _shift(self.E[eid], shift))
            hit = out[len(w):] if self.mode == "dtmm" else out
            self._ext[key] = hit
        return hit

    def test(self, r1: int, r2: int, i1: int, i2: int, eid: int) -> bool:
        """The aligned test on suffix number ``eid`` of E."""
        if not self.E[eid]:
            return self.mode == "dtmm" or self.obs[r1] == self.obs[r2]
        gap = self.clock[r1][i1] - self.clock[r2][i2]
        if gap >= 0:
            return self._ext_obs(r1, eid, ZERO) == self._ext_obs(r2, eid, gap)
        return self._ext_obs(r1, eid, -gap) == self._ext_obs(r2, eid, ZERO)

    def test_suffix(self, w1, w2, i1: int, i2: int, e) -> bool:
        """Aligned test on an arbitrary suffix (not necessarily in E)."""
        w1, w2, e = tuple(w1), tuple(w2), tuple(e)
        if not e:
            if self.mode == "dtmm":
                return True
            return self._query(w1) == self._query(w2)
        e1, e2 = align_suffix(w1, w2, i1, i2, e)
        o1, o2 = self._query(w1 + e1), self._query(w2 + e2)
        if self.mode == "dtmm":
            return o1[len(w1):] == o2[len(w2):]
        return o1 == o2

    def f(self, r1: int, r2: int, i1: int, i2: int) -> bool:
        if r1 > r2:
            r1, r2, i1, i2 = r2, r1, i2, i1
        if r1 == r2:
            return i1 == i2
        if self.sink[r1] and self.sink[r2]:
            return True
        key = (r1, r2, i1, i2)
        hit = self._f.get(key)
        n = len(self.E)
        if hit is not None and (not hit[0] or hit[1] == n):
            return hit[0]
        start = 0 if hit is None else hit[1]
        value = True
        for eid in range(start, n):
            if not self.test(r1, r2, i1, i2, eid):
                value = False
                break
        self._f[key] = (value, n)
        return value

    def f_words(self, w1, w2, i1: int, i2: int) -> bool:
        return self.f(self.row_id(w1), self.row_id(w2), i1, i2)

    def f_from_scratch(self, r1: int, r2: int, i1: int, i2: int) -> bool:
        """Uncached reference computation, for auditing the cache."""
        w1, w2 = self.words[r1], self.words[r2]
        return all(self.test_suffix(w1, w2, i1, i2, e) for e in self.E)

    def certainly_distinct(self, r1: int, r2: int) -> bool:
        return not any(self.f(r1, r2, i, j) for i, j in self.valid_combinations(r1, r2))

    def f_profile(self, r1: int, r2: int) -> dict:
        return {c: self.f(r1, r2, *c) for c in self.valid_combinations(r1, r2)}

    # --- moves --------------------------------------------------------------

    def move_to_S(self) -> list[int]:
        """Promote R-rows certainly distinct from every S-row, to a fixpoint."""
        moved = []
        srows = self.rows(S)
        r = 0
        while r < len(self.words):
            if self.status[r] == R and all(self.certainly_distinct(r, s) for s in srows):
                self._promote(r, S)
                srows.append(r)
                moved.append(r)
            r += 1
        return moved

    def move_to_S_plus(self, loc: dict) -> list[tuple[int, str]]:
        """Move one R-row per location unused by S and S+ rows.

        A row that turns out certainly distinct from every S-row goes to S
        directly.  Returns ``(row, new status)`` pairs.
        """
        if any(r not in loc for r in range(len(self.words))):
            raise TableError("model does not assign every row")
        used = {loc[r] for r in self.rows(S, S_PLUS)}
        srows = self.rows(S)
        moved = []
        for r in self.rows(R):
            if loc[r] in used:
                continue
            used.add(loc[r])
            target = S if all(self.certainly_distinct(r, s) for s in srows) else S_PLUS
            self._promote(r, target)
            if target == S:
                srows.append(r)
            moved.append((r, target))
        return moved

    def process_counterexample(self, ctx: Sequence) -> list[int]:
        added = []
        ctx = tuple(ctx)
        for k in range(1, len(ctx) + 1):
            if ctx[:k] not in self.index:
                added.append(self.add_row(ctx[:k], R))
        return added

    def add_suffix(self, e) -> bool:
        e = tuple(TimedAction(a, Fraction(d)) for a, d in e)
        if e in self._E_set:
            return False
        self.E.append(e)
        self._E_set.add(e)
        return True

    # --- consistency ----------------------------------------------------------

    def eligible_quadruples(self) -> Iterator[tuple]:
        """``(p1, p2, i, j, c1, c2)`` for C2: children with the same action whose
        clock values fall in one region while f(p1, p2, i, j) holds."""
        parents = [r for r in range(len(self.words)) if self.children[r]]
        by_action = {}
        for p in parents:
            groups: dict = {}
            for c in self.children[p]:
                groups.setdefault(self.words[c][-1][0], []).append(c)
            by_action[p] = groups
        for x, p1 in enumerate(parents):
            for p2 in parents[x:]:
                shared = [a for a in by_action[p1] if a in by_action[p2]]
                if not shared:
                    continue
                for i, j in self.valid_combinations(p1, p2):
                    if not self.f(p1, p2, i, j):
                        continue
                    v1, v2 = self.clock[p1][i], self.clock[p2][j]
                    for a in shared:
                        kids2 = [(c, region_of(v2 + self.words[c][-1][1])) for c in by_action[p2][a]]
                        for c1 in by_action[p1][a]:
                            reg1 = region_of(v1 + self.words[c1][-1][1])
                            for c2, reg2 in kids2:
                                if reg1 == reg2 and (p1 != p2 or c1 < c2):
                                    yield (p1, p2, i, j, c1, c2)

    def outputs_clash(self, c1: int, c2: int) -> bool:
        """DTMM only: the last outputs of two rows differ."""
        return self.mode == "dtmm" and self.obs[c1][-1] != self.obs[c2][-1]

    def discover_suffixes(self, quads: Optional[Iterable] = None) -> list[tuple]:
        """Suffixes that would separate parents of inconsistent extension pairs."""
        found: list = []
        seen = set(self._E_set)
        for p1, p2, i, j, c1, c2 in self.eligible_quadruples() if quads is None else quads:
            t1, t2 = self.words[c1][-1][1], self.words[c2][-1][1]
            lead = (TimedAction(self.words[c1][-1][0], min(t1, t2)),)
            for reset in (False, True):
                ic1 = len(self.words[c1]) if reset else i
                ic2 = len(self.words[c2]) if reset else j
                e = self._first_separator(c1, c2, ic1, ic2)
                if e is not None and lead + e not in seen:
                    seen.add(lead + e)
                    found.append(lead + e)
        return found

    def _first_separator(self, c1: int, c2: int, i: int, j: int) -> Optional[tuple]:
        if self.outputs_clash(c1, c2):
            return ()
        for eid in range(len(self.E)):
            if not self.test(c1, c2, i, j, eid):
                return self.E[eid]
        return None

    # --- audits and dumps ---------------------------------------------------

    def wellformedness_errors(self) -> list[str]:
        errs = []
        if self.words[0] != () or self.status[0] != S:
            errs.append("empty word is not the first S row")
        if self.E[0] != ():
            errs.append("empty suffix missing from E")
        for r, w in enumerate(self.words):
            if w and w[:-1] not in self.index:
                errs.append(f"{word_str(w)}: prefix missing")
            if self.status[r] in (S, S_PLUS):
                for a in self.alphabet:
                    if w + (TimedAction(a, ZERO),) not in self.index:
                        errs.append(f"{word_str(w)}: successor ({a},0) missing")
        return errs

    def cell_expression(self, r1: int, r2: int) -> str:
        """f over all reset combinations written as a formula over reset variables."""
        prof = self.f_profile(r1, r2)
        if all(prof.values()):
            return "⊤"
        if not any(prof.values()):
            return "⊥"
        terms = []
        for (i, j), v in prof.items():
            if v:
                lits = _lr_literals(self, r1, i) | _lr_literals(self, r2, j)
                if any((x, not s) in lits for x, s in lits):
                    continue
                body = "∧".join(f"{'' if s else '¬'}b{x}" for x, s in sorted(lits)) or "⊤"
                if body not in terms:
                    terms.append(body)
        return " ∨ ".join(f"({t})" for t in terms) if terms else "⊥"

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "rows": [
                {
                    "id": r,
                    "word": word_to_json(w),
                    "status": self.status[r],
                    "observation": self.obs[r] if self.mode == "dota" else list(self.obs[r]),
                }
                for r, w in enumerate(self.words)
            ],
            "E": [word_to_json(e) for e in self.E],
            "f": [
                {"rows": [r1, r2], "combination": [i, j], "value": v[0]}
                for (r1, r2, i, j), v in sorted(self._f.items())
            ],
        }

    def dump_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def grid(self) -> str:
        """Row-by-row matrix of cell expressions against all S and S+ rows."""
        cols = self.rows(S, S_PLUS)
        lines = ["E = {" + ", ".join(word_str(e) for e in self.E) + "}"]
        header = ["", "obs"] + [f"{self.status[c]}:{word_str(self.words[c])}" for c in cols]
        body = []
        for r in range(len(self.words)):
            cells = [f"{self.status[r]:2} b{r} {word_str(self.words[r])}", _obs_str(self.obs[r])]
            cells += [self.cell_expression(r, c) for c in cols]
            body.append(cells)
        widths = [max(len(row[k]) for row in [header] + body) for k in range(len(header))]
        for row in [header] + body:
            lines.append(" | ".join(c.ljust(wd) for c, wd in zip(row, widths)))
        return "\n".join(lines)


def _lr_literals(table: ObservationTable, r: int, i: int) -> set:
    pids = table.prefix_ids[r]
    lits = set()
    if pids[i] != 0:
        lits.add((pids[i], True))
    for p in pids[i + 1:]:
        lits.add((p, False))
    return lits


def _obs_str(o) -> str:
    if isinstance(o, bool):
        return "+" if o else "-"
    return " ".join(o) if o else "ε"


__all__ = [
    "ObservationTable",
    "TableError",
    "valid_reset_combinations",
    "align_suffix",
    "common_prefix_length",
    "format_time",
]
