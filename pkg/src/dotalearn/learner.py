"""The learning loop: table upkeep, readiness solving, hypotheses and counterexamples."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

from .constraints import Infeasible, build_C3_prime, build_system, complete_suffixes
from .hypothesis import audit_hypothesis, build_hypothesis
from .models import InputError, run_dota, run_dtmm, word_str, word_to_json
from .solver import solve
from .table import S, S_PLUS, ObservationTable


class LearnerError(RuntimeError):
    pass


class LearnTimeout(LearnerError):
    """Iteration or time budget exhausted; ``stats`` holds what was collected so far."""

    def __init__(self, message: str, stats: "LearnerStats"):
        super().__init__(message)
        self.stats = stats


@dataclass
class LearnOptions:
    max_iterations: int = 500
    time_budget: float = 600.0
    solver: str = "internal"
    sink_info: bool = False
    audit: bool = True


@dataclass
class LearnerStats:
    membership: int = 0
    equivalence: int = 0
    iterations: int = 0
    final_N: int = 1
    wall_time: float = 0.0
    locations: int = 0
    table_sizes: list = field(default_factory=list)  # (|S|, |S+|, |R|, |E|) per iteration

    def as_dict(self) -> dict:
        d = asdict(self)
        d["table_sizes"] = [list(t) for t in self.table_sizes]
        return d


class Learner:
    """One learning session against one teacher.

    ``events`` collects the trace; ``hypotheses`` keeps every hypothesis sent
    to the teacher together with its audit result.
    """

    def __init__(self, teacher, options: Optional[LearnOptions] = None, on_event: Optional[Callable] = None):
        self.teacher = teacher
        self.options = options or LearnOptions()
        self.mode = teacher.mode
        self.on_event = on_event
        self.events: list[dict] = []
        self.hypotheses: list = []
        self.iteration = 0
        self.N = 1
        self.stats = LearnerStats()
        sink_query = None
        if self.options.sink_info:
            sink_query = teacher.mq_sink
        self.table = ObservationTable(teacher.alphabet, teacher.mq, self.mode, sink_query)

    # --- trace ----------------------------------------------------------------

    def _emit(self, event: str, **payload) -> None:
        rec = {"iteration": self.iteration, "event": event, "payload": payload}
        self.events.append(rec)
        if self.on_event is not None:
            self.on_event(rec)

    def _words(self, rows) -> list:
        return [word_to_json(self.table.words[r]) for r in rows]

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True, ensure_ascii=False) + "\n" for e in self.events)

    # --- loop -----------------------------------------------------------------

    def _sync_stats(self, start: float) -> None:
        st = self.teacher.stats
        self.stats.membership = st.membership_count
        self.stats.equivalence = st.equivalence_count
        self.stats.iterations = self.iteration
        self.stats.final_N = self.N
        self.stats.wall_time = time.perf_counter() - start

    def _check_budget(self, start: float) -> None:
        opts = self.options
        if self.iteration > opts.max_iterations:
            self._sync_stats(start)
            raise LearnTimeout(f"iteration budget of {opts.max_iterations} exceeded", self.stats)
        if time.perf_counter() - start > opts.time_budget:
            self._sync_stats(start)
            raise LearnTimeout(f"time budget of {opts.time_budget}s exceeded", self.stats)

    def _refresh_table(self) -> None:
        """move_to_S and suffix discovery until neither changes the table."""
        table = self.table
        while True:
            moved = table.move_to_S()
            if moved:
                self._emit("move_to_S", rows=self._words(moved))
            added = complete_suffixes(table)
            for e in added:
                self._emit("suffix-added", suffix=word_to_json(e))
            if not added:
                return

    def _raise_N(self, to: int, reason: str) -> None:
        self.N = to
        self._emit("N-increase", N=to, reason=reason)

    def _check_ctx(self, hyp, ctx) -> None:
        if any(x[0] not in self.table.alphabet for x in ctx):
            raise LearnerError(f"counterexample {word_str(ctx)} uses unknown actions")
        if self.mode == "dtmm":
            differs = self.teacher.mq(ctx) != run_dtmm(hyp, ctx)
        else:
            differs = self.teacher.mq(ctx) != run_dota(hyp, ctx).accepted
        if not differs:
            raise LearnerError(f"counterexample {word_str(ctx)} does not separate the hypothesis from the target")

    def run(self):
        start = time.perf_counter()
        table = self.table
        while True:
            self.iteration += 1
            self._check_budget(start)
            self._refresh_table()
            n_s = len(table.rows(S))
            if n_s > self.N:
                self._raise_N(n_s, "more S rows than locations")
            self.stats.table_sizes.append(
                (n_s, len(table.rows(S_PLUS)), len(table.words) - n_s - len(table.rows(S_PLUS)), len(table.E))
            )
            try:
                system = build_system(table, self.N, "C3")
            except Infeasible:  # pragma: no cover - guarded by the N update above
                self._raise_N(self.N + 1, "C4 infeasible")
                continue
            model = solve(system, self.options.solver)
            if model is not None:
                self._emit("SAT", constraints="C3", N=self.N)
                hyp = build_hypothesis(table, model)
                problems = audit_hypothesis(table, model, hyp) if self.options.audit else []
                self.hypotheses.append((hyp, problems))
                if problems:
                    raise LearnerError("hypothesis audit failed: " + "; ".join(problems[:5]))
                ctx = self.teacher.eq(hyp)
                if ctx is None:
                    self._sync_stats(start)
                    self.stats.locations = len(hyp.locations)
                    return hyp, self.stats
                ctx = tuple(ctx)
                self._check_ctx(hyp, ctx)
                added = table.process_counterexample(ctx)
                self._emit("ctx", word=word_to_json(ctx), rows_added=len(added))
                if not added:
                    raise LearnerError(f"counterexample {word_str(ctx)} added no rows")
                continue
            self._emit("UNSAT", constraints="C3", N=self.N)
            relaxed = solve(system.with_overlay("C3'", build_C3_prime(table, self.N)), self.options.solver)
            if relaxed is None:
                self._emit("UNSAT", constraints="C3'", N=self.N)
                self._raise_N(self.N + 1, "relaxed constraints unsatisfiable")
                continue
            self._emit("SAT", constraints="C3'", N=self.N)
            moved = table.move_to_S_plus(relaxed.loc)
            if not moved:
                raise LearnerError("relaxed model found but no row could be moved")
            for r, status in moved:
                if status == S:
                    self._emit("move_to_S", rows=self._words([r]))
                else:
                    self._emit("move_to_S+", rows=self._words([r]))


def learn(teacher, options: Optional[LearnOptions] = None):
    return Learner(teacher, options).run()


def learn_dota(teacher, options: Optional[LearnOptions] = None):
    if teacher.mode != "dota":
        raise InputError("learn_dota needs a DOTA teacher")
    return learn(teacher, options)


def learn_dtmm(teacher, options: Optional[LearnOptions] = None):
    if teacher.mode != "dtmm":
        raise InputError("learn_dtmm needs a DTMM teacher")
    return learn(teacher, options)
