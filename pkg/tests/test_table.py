from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import three_loc, random_snapshot, scripted_ctxs, promotion_table
from dotalearn.models import TimedAction, tw, word_str
from dotalearn.table import (
    R,
    S,
    S_PLUS,
    ObservationTable,
    TableError,
    align_suffix,
    common_prefix_length,
    valid_reset_combinations,
)
from dotalearn.teacher import MealyTeacher, Teacher


def fresh():
    T = Teacher(three_loc())
    return ObservationTable(T.alphabet, T.mq)


def test_initial_table():
    t = fresh()
    assert t.S == [()] and t.R == [tw(("a", 0))] and t.S_plus == [] and t.E == [()]
    assert t.wellformedness_errors() == []


def test_move_to_S_first_step():
    t = fresh()
    moved = t.move_to_S()
    assert [t.words[r] for r in moved] == [tw(("a", 0))]
    assert t.R == [tw(("a", 0), ("a", 0))]
    assert t.wellformedness_errors() == []


def test_golden_row_numbering():
    t = promotion_table()
    names = [word_str(w) for w in t.words]
    assert names == ["ε", "(a,0)", "(a,0)(a,0)", "(a,4)", "(a,9.5)", "(a,4)(a,5.5)"]
    assert t.E == [(), tw(("a", "5.5"))]


def test_alignment_example():
    # (a,4) against ε on (a,5.5): correct resets separate them, a reset at (a,4) does not
    t = promotion_table()
    assert t.f(3, 0, 0, 0) is False
    assert t.f(3, 0, 1, 0) is True
    assert t.cell_expression(3, 0) == "(b3)"
    e1, e2 = align_suffix(tw(("a", 4)), (), 0, 0, tw(("a", "5.5")))
    assert e1 == tw(("a", "5.5")) and e2 == tw(("a", "9.5"))


def test_certainly_distinct_pairs_in_promotion_table():
    t = promotion_table()
    assert t.certainly_distinct(1, 0)
    assert t.certainly_distinct(3, 5)
    assert not t.certainly_distinct(3, 0)


def test_valid_reset_combinations():
    w1 = tw(("a", 4), ("a", "5.5"))
    w2 = tw(("a", 4), ("a", 0))
    assert common_prefix_length(w1, w2) == 1
    combos = valid_reset_combinations(w1, w2)
    assert (0, 1) not in combos and (1, 0) not in combos
    assert (0, 0) in combos and (1, 1) in combos and (2, 0) in combos and (0, 2) in combos
    assert len(combos) == 9 - 2


def test_process_counterexample_adds_prefixes():
    t = fresh()
    added = t.process_counterexample(tw(("a", 4), ("a", "5.5")))
    assert [word_str(t.words[r]) for r in added] == ["(a,4)", "(a,4)(a,5.5)"]
    assert all(t.status[r] == R for r in added)
    assert t.process_counterexample(tw(("a", 4))) == []


def test_add_row_needs_prefix():
    with pytest.raises(TableError):
        fresh().add_row(tw(("a", 1), ("a", 1)))


def test_move_to_S_plus_one_row_per_fresh_location():
    t = promotion_table()
    loc = {0: 1, 1: 2, 2: 2, 3: 1, 4: 2, 5: 3}
    moved = t.move_to_S_plus(loc)
    assert moved == [(5, S_PLUS)]
    assert t.status[5] == S_PLUS
    assert t.row_id(tw(("a", 4), ("a", "5.5"), ("a", 0))) > 5


def test_sink_pairs_short_circuit():
    T = Teacher(three_loc(), sink_info=True)
    t = ObservationTable(T.alphabet, T.mq, sink_query=T.mq_sink)
    t.process_counterexample(tw(("a", 1), ("a", 2)))
    a0, a1 = t.row_id(tw(("a", 0))), t.row_id(tw(("a", 1)))
    assert t.sink[a0] and t.sink[a1]
    assert t.f(a0, a1, 0, 0) and t.f(a0, a1, 1, 0)


def test_dtmm_tests_compare_suffix_outputs():
    from conftest import abp_sender

    T = MealyTeacher(abp_sender())
    t = ObservationTable(T.alphabet, T.mq, mode="dtmm")
    a = t.row_id(tw(("in", 0)))
    b = t.row_id(tw(("ack0", 0)))
    # ε never separates rows in output mode; the suffix portion does
    assert t.test(a, b, 1, 1, 0) is True
    t.add_suffix(tw(("void", 3)))
    assert t.test(a, b, 1, 1, 1) is False


def test_dump_json_has_rows_and_suffixes():
    import json

    d = json.loads(promotion_table().dump_json())
    assert len(d["rows"]) == 6 and len(d["E"]) == 2
    assert d["rows"][0]["status"] == S


def test_grid_renders():
    g = promotion_table().grid()
    assert "(a,4)(a,5.5)" in g and "E = {ε, (a,5.5)}" in g


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_f_cache_matches_from_scratch(seed):
    t = random_snapshot(seed)
    for r2 in range(len(t.words)):
        for r1 in range(r2):
            for i, j in t.valid_combinations(r1, r2):
                assert t.f(r1, r2, i, j) == t.f_from_scratch(r1, r2, i, j)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_f_is_monotone_in_E(seed):
    """Adding suffixes can only turn ⊤ into ⊥."""
    t = random_snapshot(seed)
    before = {(r1, r2, c): t.f(r1, r2, *c) for r2 in range(len(t.words)) for r1 in range(r2) for c in t.valid_combinations(r1, r2)}
    t.add_suffix((TimedAction(t.alphabet[0], Fraction(1, 2)),))
    for (r1, r2, c), v in before.items():
        assert t.f(r1, r2, *c) <= v


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_f_symmetric(seed):
    t = random_snapshot(seed)
    for r2 in range(len(t.words)):
        for r1 in range(r2):
            for i, j in t.valid_combinations(r1, r2):
                assert t.f(r1, r2, i, j) == t.f(r2, r1, j, i)
