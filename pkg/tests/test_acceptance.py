"""Acceptance gate.  Each test carries a ``criterion`` marker; the terminal
summary prints one PASS/FAIL line per criterion."""

import random
import time
from fractions import Fraction

import pytest

import dotalearn.learner as learner_mod
from conftest import (
    abp_sender,
    brute_force_sat,
    three_loc,
    random_dota,
    random_snapshot,
    random_system,
    sampled_words,
    scripted_ctxs,
    promotion_table,
)
from dotalearn.bench import GenParams, run_benchmark
from dotalearn.constraints import build_system, satisfies
from dotalearn.equivalence import dota_counterexample, equivalent
from dotalearn.hypothesis import partition
from dotalearn.learner import Learner, learn_dota, learn_dtmm
from dotalearn.models import Dota, Guard, Transition, guards_overlap, guards_partition, run_dota, tw, word_to_json
from dotalearn.solver import solve, solve_internal
from dotalearn.teacher import MealyTeacher, ScriptedTeacher, Teacher

F = Fraction


def crit(n, title):
    return pytest.mark.criterion(n, title)


# --- criterion 1: scripted golden run ------------------------------------------------

C1 = crit(1, "scripted counterexamples reproduce the worked example")


@pytest.fixture(scope="module")
def golden():
    start = time.perf_counter()
    L = Learner(ScriptedTeacher(Teacher(three_loc()), scripted_ctxs()))
    hyp, stats = L.run()
    return L, hyp, time.perf_counter() - start


def ctx_positions(events):
    return [k for k, e in enumerate(events) if e["event"] == "ctx"]


def suffixes_between(events, lo, hi):
    return [e["payload"]["suffix"] for e in events[lo:hi] if e["event"] == "suffix-added"]


def J(*items):
    return word_to_json(tw(*items))


@C1
def test_c1_suffix_after_third_counterexample(golden):
    ev = golden[0].events
    k3, k4 = ctx_positions(ev)[2:4]
    assert ev[k3]["payload"]["word"] == J(("a", 4), ("a", "5.5"))
    assert suffixes_between(ev, k3, k4) == [J(("a", "5.5"))]


@C1
def test_c1_unsat_then_relaxed_sat_and_promotion(golden):
    ev = golden[0].events
    k3, k4 = ctx_positions(ev)[2:4]
    kinds = [(e["event"], e["payload"].get("constraints")) for e in ev[k3:k4]]
    assert ("UNSAT", "C3") in kinds
    first_unsat = kinds.index(("UNSAT", "C3"))
    relaxed_sat = kinds.index(("SAT", "C3'"))
    assert first_unsat < relaxed_sat
    promoted = ev[k3 + relaxed_sat + 1]
    assert promoted == {**promoted, "event": "move_to_S+", "payload": {"rows": [J(("a", 4), ("a", "5.5"))]}}


@C1
def test_c1_suffixes_after_fourth_counterexample(golden):
    ev = golden[0].events
    k4 = ctx_positions(ev)[3]
    assert ev[k4]["payload"]["word"] == J(("a", 4), ("a", 0))
    got = suffixes_between(ev, k4, len(ev))
    assert sorted(map(str, got)) == sorted(map(str, [J(("a", 0)), J(("a", 0), ("a", "5.5"))]))


@C1
def test_c1_row_moved_to_S_last(golden):
    ev = golden[0].events
    k4 = ctx_positions(ev)[3]
    moves = [e["payload"]["rows"] for e in ev[k4:] if e["event"] == "move_to_S"]
    assert moves == [[J(("a", 4))]]
    assert golden[0].table.S == [(), tw(("a", 0)), tw(("a", 4))]


@C1
def test_c1_final_hypothesis_and_runtime(golden):
    _, hyp, elapsed = golden
    assert len(hyp.locations) == 3
    assert equivalent(three_loc(), hyp)
    assert elapsed < 5.0


# --- criterion 2: real oracle -----------------------------------------------------------

@crit(2, "learning the small example with oracle counterexamples")
def test_c2_real_oracle():
    start = time.perf_counter()
    hyp, stats = learn_dota(Teacher(three_loc()))
    elapsed = time.perf_counter() - start
    assert equivalent(three_loc(), hyp)
    assert stats.equivalence <= 15
    assert elapsed < 10.0


# --- criterion 3: memoised f ---------------------------------------------------------------

@crit(3, "memoised f equals recomputation on 200 random snapshots")
def test_c3_memoised_f():
    mismatches = 0
    checked = 0
    for seed in range(200):
        t = random_snapshot(seed)
        assert max(len(w) for w in t.words) <= 3 and len(t.E) <= 3
        for r2 in range(len(t.words)):
            for r1 in range(r2):
                for i, j in t.valid_combinations(r1, r2):
                    checked += 1
                    mismatches += t.f(r1, r2, i, j) != t.f_from_scratch(r1, r2, i, j)
    assert checked > 0 and mismatches == 0


# --- criterion 4: solver parity ---------------------------------------------------------------

C4 = crit(4, "internal solver agrees with exhaustive search")


@C4
def test_c4_random_systems():
    rng = random.Random(2024)
    disagreements = 0
    for _ in range(500):
        system = random_system(rng)
        model = solve_internal(system)
        if (model is not None) != brute_force_sat(system):
            disagreements += 1
        elif model is not None:
            assert satisfies(system, model)
    assert disagreements == 0


@C4
def test_c4_worked_example_system():
    t = promotion_table()
    assert solve(build_system(t, 2, "C3")) is None
    relaxed = build_system(t, 3, "C3'")
    m = solve(relaxed)
    assert m is not None and satisfies(relaxed, m)


# --- criterion 5: partition ---------------------------------------------------------------

C5 = crit(5, "partition function")


def random_partition_input(rng):
    values = [F(0)]
    for n in range(rng.randint(0, 15)):
        if n > 0 and rng.random() < 0.4:
            values.append(F(n))
        if rng.random() < 0.4:
            values.append(n + F(rng.randint(1, 99), 100))
    return values


@C5
def test_c5_random_lists():
    rng = random.Random(5)
    for _ in range(1000):
        values = random_partition_input(rng)
        gs = partition(values)
        assert guards_partition(gs)
        for a in range(len(gs)):
            for b in range(a + 1, len(gs)):
                assert not guards_overlap(gs[a], gs[b])
        assert all(g.contains(mu) for g, mu in zip(gs, values))


@C5
def test_c5_worked_example():
    gs = partition([F(0), F(4), F(11, 2), F(19, 2)])
    assert [str(g) for g in gs] == ["[0,4)", "[4,5]", "(5,9]", "(9,+)"]


# --- criterion 6: hypothesis properties --------------------------------------------------------

def independent_violations(table, model, hyp, target):
    """Checks written against the table and target directly, not via the built-in audit."""
    bad = []
    for q in hyp.locations:
        for a in hyp.alphabet:
            if not guards_partition([t.guard for t in hyp.transitions if t.source == q and t.action == a]):
                bad.append(f"guards at ({q},{a})")
    final = {}
    for r, w in enumerate(table.words):
        res = run_dota(hyp, w)
        if res.accepted != run_dota(target, w).accepted:
            bad.append(f"row {r} verdict")
        final[r] = res.location
    last = {r: max(k for k, p in enumerate(table.prefix_ids[r]) if model.reset[p]) for r in range(len(table.words))}
    for r2 in range(len(table.words)):
        for r1 in range(r2):
            if not table.f_from_scratch(r1, r2, last[r1], last[r2]):
                if model.loc[r1] == model.loc[r2] or final[r1] == final[r2]:
                    bad.append(f"rows {r1},{r2} distinguished but merged")
    return bad


_build_hypothesis = learner_mod.build_hypothesis


def learn_and_check(teacher, target, monkeypatch):
    seen = []

    def checked(table, model):
        hyp = _build_hypothesis(table, model)
        seen.append(independent_violations(table, model, hyp, target))
        return hyp

    monkeypatch.setattr(learner_mod, "build_hypothesis", checked)
    hyp, _ = Learner(teacher).run()
    assert equivalent(target, hyp)
    return seen


@crit(6, "every constructed hypothesis is deterministic, agrees with rows and separates rows")
def test_c6_hypothesis_properties(monkeypatch):
    runs = [
        (ScriptedTeacher(Teacher(three_loc()), scripted_ctxs()), three_loc()),
        (Teacher(three_loc()), three_loc()),
    ]
    for seed in range(20):
        target = random_dota(3, 2, 6, seed)
        runs.append((Teacher(target), target))
    total = 0
    for teacher, target in runs:
        seen = learn_and_check(teacher, target, monkeypatch)
        total += len(seen)
        assert all(v == [] for v in seen), [v for v in seen if v]
    assert total >= len(runs)


# --- criterion 7: scalability ------------------------------------------------------------------

C7 = crit(7, "random benchmark groups are learned and verified in time")


def bench_group(group, count, limit):
    rep = run_benchmark(GenParams.from_group(group, seed=0), count, timeout=600.0)
    print(f"\n{group}: learnt {rep['learnt']}/{count}, mean time {rep['time_mean']:.1f}s, "
          f"MQ mean {rep['membership']['mean']}, EQ mean {rep['equivalence']['mean']}")
    assert rep["learnt"] == count
    assert all(r["ok"] for r in rep["instances"])
    assert rep["time_mean"] < limit


@pytest.mark.slow
@C7
def test_c7_group_4_4_20():
    bench_group("4_4_20", 10, 30.0)


@pytest.mark.slow
@C7
def test_c7_group_6_2_10():
    bench_group("6_2_10", 10, 30.0)


@pytest.mark.slow
@C7
def test_c7_group_10_4_20():
    bench_group("10_4_20", 1, 120.0)


# --- criterion 8: timed Mealy machine ------------------------------------------------------------

@crit(8, "alternating-bit sender learned as a timed Mealy machine")
def test_c8_alternating_bit_sender():
    start = time.perf_counter()
    M = abp_sender()
    hyp, _ = learn_dtmm(MealyTeacher(M))
    elapsed = time.perf_counter() - start
    assert equivalent(M, hyp)
    assert len(hyp.locations) == 4
    assert elapsed < 30.0


# --- criterion 9: equivalence oracle --------------------------------------------------------------

def relabelled(A, rng):
    names = list(A.locations)
    shuffled = names[:]
    rng.shuffle(shuffled)
    ren = {q: f"p{k}" for k, q in enumerate(shuffled)}
    trs = [Transition(ren[t.source], t.action, t.guard, t.reset, ren[t.target]) for t in A.transitions]
    rng.shuffle(trs)
    return Dota(A.alphabet, [ren[q] for q in names], ren[A.initial], [ren[q] for q in A.accepting], trs,
                None if A.sink is None else ren[A.sink])


def split_guards(A, rng):
    """Same language: cut some guards at an interior integer point."""
    trs = []
    for t in A.transitions:
        g = t.guard
        hi = g.upper if g.upper is not None else g.lower + 3
        inner = [m for m in range(g.lower + 1, hi)]
        if inner and rng.random() < 0.5:
            m = rng.choice(inner)
            closed = rng.random() < 0.5
            trs.append(t._replace(guard=Guard(g.lower, g.lower_closed, m, closed)))
            trs.append(t._replace(guard=Guard(m, not closed, g.upper, g.upper_closed)))
        else:
            trs.append(t)
    return Dota(A.alphabet, A.locations, A.initial, A.accepting, trs, A.sink)


def mutated(A, rng):
    """Usually a different language: flip one transition's reset or target, or one accepting flag."""
    trs = list(A.transitions)
    k = rng.choice([i for i, t in enumerate(trs) if t.source != A.sink])
    choice = rng.random()
    accepting = list(A.accepting)
    if choice < 0.35:
        trs[k] = trs[k]._replace(reset=not trs[k].reset)
    elif choice < 0.7:
        trs[k] = trs[k]._replace(target=rng.choice(list(A.locations)))
    else:
        q = rng.choice([q for q in A.locations if q != A.sink] or list(A.locations))
        accepting = [x for x in accepting if x != q] if q in accepting else accepting + [q]
    return Dota(A.alphabet, A.locations, A.initial, accepting, trs, A.sink)


def refuted(A, B, rng):
    for w in sampled_words(list(A.alphabet), max(A.kappa, B.kappa), 4, 1500, rng):
        if run_dota(A, w).accepted != run_dota(B, w).accepted:
            return w
    return None


@crit(9, "equivalence oracle counterexamples replay and equivalent verdicts survive sampling")
def test_c9_equivalence_oracle():
    rng = random.Random(99)
    counts = {"equivalent": 0, "different": 0}
    for k in range(100):
        n, a, kappa = rng.randint(1, 5), rng.randint(1, 2), rng.randint(1, 10)
        A = random_dota(n, a, kappa, 1000 + k)
        kind = k % 4
        if kind == 0:
            B = relabelled(A, rng)
        elif kind == 1:
            B = split_guards(A, rng)
        elif kind == 2:
            B = mutated(A, rng)
        else:
            B = random_dota(n, a, kappa, 5000 + k)
        ctx = dota_counterexample(A, B)
        if ctx is not None:
            counts["different"] += 1
            assert run_dota(A, ctx).accepted != run_dota(B, ctx).accepted
        else:
            counts["equivalent"] += 1
            assert refuted(A, B, rng) is None, (k, kind)
        if kind < 2:
            assert ctx is None
    print(f"\npairs: {counts}")
    assert counts["equivalent"] >= 50 and counts["different"] >= 25
