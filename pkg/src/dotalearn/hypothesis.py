"""Turning a ready table and a solver model into a candidate automaton."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple, Optional

from .constraints import SolverModel
from .models import (
    Dota,
    Dtmm,
    Guard,
    MealyTransition,
    Transition,
    guards_partition,
    region_of,
    run_dota,
    run_dtmm_full,
)
from .table import S, S_PLUS, ObservationTable


class ReadinessViolation(RuntimeError):
    """Two rows force different behaviour for one clock region."""


class AuxTransition(NamedTuple):
    source_loc: int
    action: str
    psi: Fraction
    reset: bool
    target_loc: int
    output: Optional[str] = None


def partition(values) -> list[Guard]:
    """Intervals g_0..g_n with values[i] in g_i, jointly covering [0, inf)."""
    mus = list(values)
    if not mus or mus[0] != 0:
        raise ValueError("partition needs a strictly increasing list starting at 0")
    for a, b in zip(mus, mus[1:]):
        if not a < b:
            raise ValueError("partition values must be strictly increasing")
        if a.denominator != 1 and b.denominator != 1 and math.floor(a) == math.floor(b):
            raise ReadinessViolation(f"values {a} and {b} share a region")
    out = []
    for k, mu in enumerate(mus):
        nxt = mus[k + 1] if k + 1 < len(mus) else None
        mu_int = Fraction(mu).denominator == 1
        lo, lo_closed = (int(mu), True) if mu_int else (math.floor(mu), False)
        if nxt is None:
            out.append(Guard(lo, lo_closed, None, False))
        elif Fraction(nxt).denominator == 1:
            out.append(Guard(lo, lo_closed, int(nxt), False))
        else:
            out.append(Guard(lo, lo_closed, math.floor(nxt), True))
    return out


def clock_value(table: ObservationTable, r: int, model: SolverModel) -> Fraction:
    nu = Fraction(0)
    w = table.words[r]
    for pos, p in enumerate(table.prefix_ids[r][1:]):
        if p not in model.reset:
            raise KeyError(f"no reset assigned to row {p}")
        nu = Fraction(0) if model.reset[p] else nu + w[pos][1]
    return nu


def auxiliary_transitions(table: ObservationTable, model: SolverModel) -> list[AuxTransition]:
    clocks = [clock_value(table, r, model) for r in range(len(table.words))]
    out = []
    for c in range(1, len(table.words)):
        p = table.parent[c]
        action, delay = table.words[c][-1]
        output = table.obs[c][-1] if table.mode == "dtmm" else None
        out.append(AuxTransition(model.loc[p], action, clocks[p] + delay, model.reset[c], model.loc[c], output))
    return out


def _grouped(table: ObservationTable, model: SolverModel) -> dict:
    """(location, action) -> sorted list of (psi, reset, target, output), one per region."""
    groups: dict = {}
    for aux in auxiliary_transitions(table, model):
        reg = region_of(aux.psi)
        slot = groups.setdefault((aux.source_loc, aux.action), {})
        prev = slot.get(reg)
        if prev is None:
            slot[reg] = aux
            continue
        if (prev.reset, prev.target_loc, prev.output) != (aux.reset, aux.target_loc, aux.output):
            raise ReadinessViolation(
                f"location {aux.source_loc}, action {aux.action}, region {reg}: "
                f"conflicting behaviour {prev} vs {aux}"
            )
        if aux.psi < prev.psi:
            slot[reg] = aux
    return {key: sorted(slot.values(), key=lambda a: a.psi) for key, slot in groups.items()}


def _guards_for(auxs: list) -> list[Guard]:
    psis = [a.psi for a in auxs]
    if psis[0] == 0:
        return partition(psis)
    # the clock can only arrive here with a positive value; stretch the first
    # interval down to 0 so the result stays complete
    gs = partition([Fraction(0)] + psis)[1:]
    first = gs[0]
    gs[0] = Guard(0, True, first.upper, first.upper_closed)
    return gs


def _locations(table: ObservationTable, model: SolverModel) -> list[int]:
    locs = sorted({model.loc[r] for r in table.rows(S, S_PLUS)})
    init = model.loc[0]
    return [init] + [q for q in locs if q != init]


def build_hypothesis(table: ObservationTable, model: SolverModel):
    """DOTA in "dota" mode, DTMM in "dtmm" mode."""
    locs = _locations(table, model)
    name = {q: f"q{k}" for k, q in enumerate(locs)}
    transitions = []
    groups = _grouped(table, model)
    for (q, action), auxs in groups.items():
        if q not in name or any(a.target_loc not in name for a in auxs):
            raise ReadinessViolation(f"location {q} is not represented by an S or S+ row")
    for (q, action) in sorted(groups, key=lambda key: (locs.index(key[0]), key[1])):
        auxs = groups[(q, action)]
        for aux, g in zip(auxs, _guards_for(auxs)):
            if table.mode == "dtmm":
                transitions.append(MealyTransition(name[q], action, aux.output, g, aux.reset, name[aux.target_loc]))
            else:
                transitions.append(Transition(name[q], action, g, aux.reset, name[aux.target_loc]))
    loc_names = [name[q] for q in locs]
    if table.mode == "dtmm":
        outputs = sorted({t.output for t in transitions})
        return Dtmm(table.alphabet, loc_names, name[model.loc[0]], outputs, transitions)
    accepting = {name[model.loc[r]] for r in table.rows(S, S_PLUS) if table.obs[r]}
    return Dota(table.alphabet, loc_names, name[model.loc[0]], accepting, transitions)


def audit_hypothesis(table: ObservationTable, model: SolverModel, hyp) -> list[str]:
    """Properties every constructed hypothesis must have; empty list when all hold."""
    problems = []
    for q in hyp.locations:
        for a in hyp.alphabet:
            gs = [t.guard for t in hyp.transitions if t.source == q and t[1] == a]
            if not guards_partition(gs):
                problems.append(f"guards of ({q},{a}) do not partition [0,inf): {[str(g) for g in gs]}")
    if problems:
        return problems
    final = {}
    for r, w in enumerate(table.words):
        if table.mode == "dtmm":
            outs, resets, loc = run_dtmm_full(hyp, w)
            if outs != table.obs[r]:
                problems.append(f"row {r}: outputs {outs} differ from observed {table.obs[r]}")
        else:
            res = run_dota(hyp, w)
            resets, loc = res.reset_word, res.location
            if res.accepted != table.obs[r]:
                problems.append(f"row {r}: hypothesis verdict differs from membership answer")
        final[r] = loc
        want = [model.reset[p] for p in table.prefix_ids[r][1:]]
        if [x.reset for x in resets] != want:
            problems.append(f"row {r}: hypothesis resets differ from the model's")
    last = {}
    for r in range(len(table.words)):
        pids = table.prefix_ids[r]
        last[r] = max(k for k, p in enumerate(pids) if model.reset[p])
    n = len(table.words)
    for r2 in range(n):
        for r1 in range(r2):
            if not table.f(r1, r2, last[r1], last[r2]):
                if model.loc[r1] == model.loc[r2]:
                    problems.append(f"rows {r1},{r2}: distinguished but share location {model.loc[r1]}")
                if final[r1] == final[r2]:
                    problems.append(f"rows {r1},{r2}: distinguished but reach the same hypothesis location")
    return problems
