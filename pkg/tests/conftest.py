import itertools
import json
import random
from fractions import Fraction
from pathlib import Path

import pytest

from dotalearn.bench import GenParams, generate_random_dota
from dotalearn.modelio import load_model
from dotalearn.models import Dota, Guard, MealyTransition, Dtmm, TimedAction, Transition, tw, word_from_json

DATA = Path(__file__).resolve().parents[1] / "src" / "dotalearn" / "data"


def three_loc():
    return load_model(DATA / "three_loc.json")


def abp_sender():
    return load_model(DATA / "abp_sender.json")


def scripted_ctxs():
    return [word_from_json(w) for w in json.loads((DATA / "scripted_ctx.json").read_text())]


def random_dota(locations, alphabet, kappa, seed):
    return generate_random_dota(GenParams(locations, alphabet, kappa, seed))


def half_grid(kappa):
    return [Fraction(k, 2) for k in range(0, 2 * kappa + 4)]


def sampled_words(alphabet, kappa, max_len, n, rng):
    """All words up to length 2 on the half grid, then ``n`` random ones up to ``max_len``."""
    grid = half_grid(kappa)
    for length in range(0, 3):
        for acts in itertools.product(alphabet, repeat=length):
            for ds in itertools.product(grid, repeat=length):
                yield tuple(TimedAction(a, d) for a, d in zip(acts, ds))
    for _ in range(n):
        length = rng.randint(1, max_len)
        yield tuple(TimedAction(rng.choice(alphabet), rng.choice(grid)) for _ in range(length))


def echo_machine():
    g = Guard.parse("[0,+)")
    return Dtmm(["i"], ["q0"], "q0", ["o"], [MealyTransition("q0", "i", "o", g, False, "q0")])


def toggle_machine():
    """Two locations; input 'x' toggles only when the clock is at least 3."""
    P = Guard.parse
    trs = [
        MealyTransition("q0", "x", "lo", P("[0,3)"), False, "q0"),
        MealyTransition("q0", "x", "up", P("[3,+)"), True, "q1"),
        MealyTransition("q1", "x", "hi", P("[0,3)"), False, "q1"),
        MealyTransition("q1", "x", "down", P("[3,+)"), True, "q0"),
    ]
    return Dtmm(["x"], ["q0", "q1"], "q0", ["lo", "up", "hi", "down"], trs)


@pytest.fixture
def three_loc_model():
    return three_loc()


@pytest.fixture
def rng():
    return random.Random(1234)


def promotion_table():
    """Table right after the third scripted counterexample and suffix completion."""
    from dotalearn.constraints import complete_suffixes
    from dotalearn.table import ObservationTable
    from dotalearn.teacher import Teacher

    T = Teacher(three_loc())
    table = ObservationTable(T.alphabet, T.mq)
    table.move_to_S()
    for ctx in scripted_ctxs()[:3]:
        table.process_counterexample(ctx)
    complete_suffixes(table)
    return table


def random_snapshot(seed, rng=None):
    """Random table over a small random target, with f queried between growth steps."""
    from dotalearn.table import ObservationTable
    from dotalearn.teacher import Teacher

    rng = rng or random.Random(seed)
    target = random_dota(rng.randint(1, 4), rng.randint(1, 2), rng.randint(1, 6), seed)
    T = Teacher(target)
    table = ObservationTable(T.alphabet, T.mq)
    grid = [Fraction(k, 2) for k in range(0, 2 * target.kappa + 3)]

    def word(max_len):
        return tuple(TimedAction(rng.choice(target.alphabet), rng.choice(grid)) for _ in range(rng.randint(1, max_len)))

    for _ in range(rng.randint(1, 4)):
        table.process_counterexample(word(3))
        if len(table.E) < 3 and rng.random() < 0.7:
            table.add_suffix(word(2))
        for r2 in range(len(table.words)):
            for r1 in range(r2):
                for i, j in table.valid_combinations(r1, r2):
                    if rng.random() < 0.5:
                        table.f(r1, r2, i, j)
    return table


def random_system(rng):
    """Random constraint system: up to 12 reset and 8 constrained location variables."""
    from dotalearn.constraints import Clause, ConstraintSystem

    n = rng.randint(1, 12)
    nq = min(n, rng.randint(1, 8))
    N = rng.randint(1, 4)
    clauses = []
    for _ in range(rng.randint(0, 3 * n)):
        lits = []
        for _ in range(rng.randint(1, 4)):
            kind = rng.choice("bbeeii")
            if kind == "b":
                lits.append(("b", rng.randrange(n), rng.random() < 0.5))
            elif kind == "e":
                r1, r2 = sorted(rng.sample(range(nq), 2)) if nq > 1 else (0, 0)
                lits.append(("eq", r1, r2, rng.random() < 0.4))
            elif rng.random() < 0.5:
                lits.append(("is", rng.randrange(nq), rng.randint(1, N + 1), rng.random() < 0.5))
            else:
                lo = rng.randint(1, N)
                lits.append(("in", rng.randrange(nq), lo, rng.randint(lo, N)))
        clauses.append(Clause(tuple(lits), "rand"))
    return ConstraintSystem(list(range(n)), N, clauses)


def brute_force_sat(system):
    """Plain backtracking over every reset and location variable.

    A clause is checked as soon as all its variables have values, so the
    search only skips assignments that already falsify some clause.
    """
    from dotalearn.constraints import SolverModel, eval_literal

    def vars_of(lit):
        if lit[0] == "b":
            return [] if lit[1] == 0 else [("b", lit[1])]
        if lit[0] == "eq":
            return [("q", lit[1]), ("q", lit[2])]
        return [("q", lit[1])]

    # most frequent variables first so clauses become checkable early
    count: dict = {}
    for c in system.clauses:
        for v in {v for l in c.lits for v in vars_of(l)}:
            count[v] = count.get(v, 0) + 1
    order = sorted(count, key=lambda v: (-count[v], v))
    pos = {v: k for k, v in enumerate(order)}
    due = [[] for _ in range(len(order) + 1)]
    for c in system.clauses:
        last = max((pos[v] for l in c.lits for v in vars_of(l)), default=-1)
        due[last + 1].append(c)
    reset = {r: True for r in system.rows}
    loc = {r: 1 for r in system.rows}
    model = SolverModel(reset, loc)

    def ok(k):
        return all(any(eval_literal(l, model) for l in c.lits) for c in due[k])

    def go(k):
        if not ok(k):
            return False
        if k == len(order):
            return True
        kind, r = order[k]
        values = (False, True) if kind == "b" else range(1, system.N + 1)
        for v in values:
            (reset if kind == "b" else loc)[r] = v
            if go(k + 1):
                return True
        return False

    return go(0)


# --- acceptance reporting ----------------------------------------------------------

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed or rep.skipped):
        return
    number, title = mark.args
    entry = _criteria.setdefault(number, {"title": title, "results": {}})
    prev = entry["results"].get(item.nodeid)
    if prev in (None, "passed"):
        entry["results"][item.nodeid] = rep.outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        res = list(entry["results"].values())
        ok = sum(r == "passed" for r in res)
        verdict = "PASS" if ok == len(res) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict} ({ok}/{len(res)} checks) {entry['title']}")
