"""Built-in finite-domain solver for readiness constraints.

Locations are one-hot encoded.  Exclusivity inside a row and unconditional
location disequalities are propagated natively instead of being expanded into
binary clauses; everything else goes through a small CDCL core with static
decision order (rows in table order, smaller location first, resets false
first), so answers are reproducible.
"""

from __future__ import annotations

import re
import subprocess
from typing import Optional

from .constraints import ConstraintSystem, SolverModel, export_smtlib, satisfies


class SolverError(RuntimeError):
    pass


class _Core:
    def __init__(self, nvars: int):
        self.n = nvars
        self.val = [0] * (nvars + 1)
        self.lev = [0] * (nvars + 1)
        self.reason: list = [None] * (nvars + 1)
        self.watch: list = [[] for _ in range(2 * nvars + 2)]
        self.trail: list = []
        self.lim: list = []
        self.qhead = 0
        self.ok = True
        self.native = None  # callable(lit) -> conflict clause or None
        self.conflicts = 0

    @staticmethod
    def _w(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def value(self, lit: int) -> int:
        v = self.val[lit if lit > 0 else -lit]
        return v if lit > 0 else -v

    def enqueue(self, lit: int, reason) -> None:
        v = lit if lit > 0 else -lit
        self.val[v] = 1 if lit > 0 else -1
        self.lev[v] = len(self.lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def add_clause(self, lits) -> None:
        """Only at decision level 0."""
        if not self.ok:
            return
        out = []
        for l in dict.fromkeys(lits):
            if -l in out:
                return
            v = self.value(l)
            if v == 1:
                return
            if v == 0:
                out.append(l)
        if not out:
            self.ok = False
        elif len(out) == 1:
            self.enqueue(out[0], None)
        else:
            self.watch[self._w(out[0])].append(out)
            self.watch[self._w(out[1])].append(out)

    def propagate(self):
        trail, val, watch = self.trail, self.val, self.watch
        while self.qhead < len(trail):
            lit = trail[self.qhead]
            self.qhead += 1
            if self.native is not None and lit > 0:
                confl = self.native(lit)
                if confl is not None:
                    return confl
            false_lit = -lit
            ws = watch[self._w(false_lit)]
            keep = []
            i, n = 0, len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                fv = val[first] if first > 0 else -val[-first]
                if fv == 1:
                    keep.append(c)
                    continue
                for k in range(2, len(c)):
                    l = c[k]
                    lv = val[l] if l > 0 else -val[-l]
                    if lv != -1:
                        c[1], c[k] = l, c[1]
                        watch[self._w(l)].append(c)
                        break
                else:
                    keep.append(c)
                    if fv == -1:
                        keep.extend(ws[i:])
                        watch[self._w(false_lit)] = keep
                        return c
                    self.enqueue(first, c)
            watch[self._w(false_lit)] = keep
        return None

    def analyze(self, confl):
        seen = set()
        learnt = [0]
        level = len(self.lim)
        counter = 0
        idx = len(self.trail) - 1
        clause, skip_first = confl, False
        while True:
            for q in clause[1:] if skip_first else clause:
                v = q if q > 0 else -q
                if v not in seen and self.lev[v] > 0:
                    seen.add(v)
                    if self.lev[v] == level:
                        counter += 1
                    else:
                        learnt.append(q)
            while True:
                p = self.trail[idx]
                idx -= 1
                if (p if p > 0 else -p) in seen:
                    break
            counter -= 1
            if counter == 0:
                break
            clause, skip_first = self.reason[p if p > 0 else -p], True
        learnt[0] = -p
        back = 0
        if len(learnt) > 1:
            best = max(range(1, len(learnt)), key=lambda k: self.lev[abs(learnt[k])])
            learnt[1], learnt[best] = learnt[best], learnt[1]
            back = self.lev[abs(learnt[1])]
        return learnt, back

    def backtrack(self, level: int, on_unassign) -> None:
        if len(self.lim) <= level:
            return
        start = self.lim[level]
        for lit in self.trail[start:]:
            v = lit if lit > 0 else -lit
            self.val[v] = 0
            self.reason[v] = None
            on_unassign(v)
        del self.trail[start:]
        del self.lim[level:]
        self.qhead = len(self.trail)

    def solve(self, order: list) -> bool:
        """``order`` lists preferred decision literals; every variable must appear."""
        if not self.ok:
            return False
        pos = {abs(l): k for k, l in enumerate(order)}
        ptr = [0]

        def on_unassign(v):
            k = pos.get(v)
            if k is not None and k < ptr[0]:
                ptr[0] = k

        while True:
            confl = self.propagate()
            if confl is not None:
                self.conflicts += 1
                if not self.lim:
                    return False
                learnt, back = self.analyze(confl)
                self.backtrack(back, on_unassign)
                if len(learnt) == 1:
                    self.enqueue(learnt[0], None)
                else:
                    self.watch[self._w(learnt[0])].append(learnt)
                    self.watch[self._w(learnt[1])].append(learnt)
                    self.enqueue(learnt[0], learnt)
                continue
            k = ptr[0]
            while k < len(order) and self.val[abs(order[k])] != 0:
                k += 1
            ptr[0] = k
            if k == len(order):
                return True
            self.lim.append(len(self.trail))
            self.enqueue(order[k], None)


class _Encoding:
    def __init__(self, system: ConstraintSystem):
        self.system = system
        self.rows = list(system.rows)
        self.N = N = system.N
        self.ri = {r: k for k, r in enumerate(self.rows)}
        nb = len(self.rows)
        self.bvar = {r: 1 + k for k, r in enumerate(self.rows)}
        self.xbase = nb + 1
        self.nx = nb * N
        self.nvars = nb + self.nx
        self.eqvar: dict = {}
        self.neigh: list = [[] for _ in self.rows]
        self.clauses: list = []
        for cl in system.clauses:
            self._add(cl)

    def x(self, r: int, k: int) -> int:
        return self.xbase + self.ri[r] * self.N + (k - 1)

    def _eq(self, r1: int, r2: int) -> int:
        key = (r1, r2)
        v = self.eqvar.get(key)
        if v is None:
            self.nvars += 1
            v = self.eqvar[key] = self.nvars
            for k in range(1, self.N + 1):
                a, b = self.x(r1, k), self.x(r2, k)
                self.clauses.append([-a, -b, v])
                self.clauses.append([-v, -a, b])
                self.clauses.append([-v, a, -b])
        return v

    def _add(self, cl) -> None:
        lits = cl.lits
        if len(lits) == 1 and lits[0][0] == "eq" and not lits[0][3] and lits[0][1] != lits[0][2]:
            _, r1, r2, _ = lits[0]
            self.neigh[self.ri[r1]].append(self.ri[r2])
            self.neigh[self.ri[r2]].append(self.ri[r1])
            return
        out = []
        for lit in lits:
            kind = lit[0]
            if kind == "b":
                if lit[1] == 0:
                    if lit[2]:
                        return
                    continue
                v = self.bvar[lit[1]]
                out.append(v if lit[2] else -v)
            elif kind == "is":
                if 1 <= lit[2] <= self.N:
                    v = self.x(lit[1], lit[2])
                    out.append(v if lit[3] else -v)
                elif not lit[3]:
                    return
            elif kind == "in":
                lo, hi = max(lit[2], 1), min(lit[3], self.N)
                if lo <= 1 and hi >= self.N:
                    return
                out.extend(self.x(lit[1], k) for k in range(lo, hi + 1))
            elif kind == "eq":
                if lit[1] == lit[2]:
                    if lit[3]:
                        return
                    continue
                v = self._eq(min(lit[1], lit[2]), max(lit[1], lit[2]))
                out.append(v if lit[3] else -v)
            else:
                raise SolverError(f"unknown literal {lit!r}")
        self.clauses.append(out)

    def native(self, core: _Core):
        N, xbase, xend = self.N, self.xbase, self.xbase + self.nx
        neigh, val = self.neigh, core.val
        enqueue = core.enqueue

        def prop(lit):
            if not xbase <= lit < xend:
                return None
            ri, k0 = divmod(lit - xbase, N)
            row0 = xbase + ri * N
            for u in range(row0, row0 + N):
                if u != lit:
                    s = val[u]
                    if s == 1:
                        return [-u, -lit]
                    if s == 0:
                        enqueue(-u, [-u, -lit])
            for rj in neigh[ri]:
                u = xbase + rj * N + k0
                s = val[u]
                if s == 1:
                    return [-u, -lit]
                if s == 0:
                    enqueue(-u, [-u, -lit])
            return None

        return prop

    def decision_order(self) -> list:
        order = []
        for r in self.rows:
            order.extend(self.x(r, k) for k in range(1, self.N + 1))
        order.extend(-self.bvar[r] for r in self.rows)
        order.extend(-v for v in self.eqvar.values())
        return order


def _clique_bound_exceeded(enc: _Encoding) -> bool:
    """Greedy clique in the unconditional disequality graph (plus C4 pins)."""
    adj = [set(ns) for ns in enc.neigh]
    verts = sorted(range(len(enc.rows)), key=lambda v: -len(adj[v]))
    for start in verts[:20]:
        clique = [start]
        cand = set(adj[start])
        while cand:
            v = max(cand, key=lambda u: (len(adj[u]), -u))
            clique.append(v)
            cand &= adj[v]
        if len(clique) > enc.N:
            return True
    return False


def solve_internal(system: ConstraintSystem) -> Optional[SolverModel]:
    if system.N < 1:
        return None
    enc = _Encoding(system)
    if _clique_bound_exceeded(enc):
        return None
    core = _Core(enc.nvars)
    for r in enc.rows:
        core.add_clause([enc.x(r, k) for k in range(1, enc.N + 1)])
    for c in enc.clauses:
        core.add_clause(c)
    core.native = enc.native(core)
    if not core.solve(enc.decision_order()):
        return None
    reset = {r: (True if r == 0 else core.val[enc.bvar[r]] == 1) for r in enc.rows}
    loc = {}
    for r in enc.rows:
        ks = [k for k in range(1, enc.N + 1) if core.val[enc.x(r, k)] == 1]
        if len(ks) != 1:
            raise SolverError(f"row {r} has no unique location")
        loc[r] = ks[0]
    model = SolverModel(reset, loc)
    if not satisfies(system, model):
        raise SolverError("internal solver produced a model violating the constraints")
    return model


_DEFINE = re.compile(r"\(define-fun\s+(\S+)\s+\(\)\s+(Bool|Int)\s+(true|false|\d+|\(-\s*\d+\))\s*\)")


def solve_external(system: ConstraintSystem, command: str, timeout: float = 600.0) -> Optional[SolverModel]:
    """Pipe the SMT-LIB export through an external solver binary (reads the script on stdin)."""
    script = export_smtlib(system)
    proc = subprocess.run([command, "-in"], input=script, capture_output=True, text=True, timeout=timeout)
    out = proc.stdout.strip()
    if out.startswith("unsat"):
        return None
    if not out.startswith("sat"):
        raise SolverError(f"external solver said: {out[:200]} {proc.stderr[:200]}")
    values = {name: val for name, _, val in _DEFINE.findall(out)}
    reset, loc = {}, {}
    for r in system.rows:
        tag = "eps" if r == 0 else f"r{r}"
        reset[r] = values.get(f"b_{tag}", "false") == "true"
        q = values.get(f"q_{tag}")
        loc[r] = int(q) if q is not None and q.isdigit() else 1
    model = SolverModel(reset, loc)
    if not satisfies(system, model):
        raise SolverError("external solver model violates the constraints")
    return model


def solve(system: ConstraintSystem, backend: str = "internal") -> Optional[SolverModel]:
    """SAT model or None.  ``backend`` is ``"internal"`` or ``"smtlib:<path>"``."""
    if backend == "internal":
        return solve_internal(system)
    if backend.startswith("smtlib:"):
        return solve_external(system, backend[len("smtlib:"):])
    raise SolverError(f"unknown solver backend {backend!r}")
