"""Timed words, guards, regions and the two automaton models.

All time values are ``fractions.Fraction``; nothing here touches floats.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence, Union

TimeLike = Union[Fraction, int, str]


class ModelError(ValueError):
    """Malformed or nondeterministic automaton."""


class InputError(ValueError):
    """Query or argument outside the model's domain."""


def to_time(value: TimeLike) -> Fraction:
    if isinstance(value, float):
        raise TypeError("floats are not accepted as time values")
    t = Fraction(value)
    if t < 0:
        raise InputError(f"negative delay {value!r}")
    return t


def format_time(t: Fraction) -> str:
    """Decimal string when the value has a finite expansion, else ``p/q``."""
    if t.denominator == 1:
        return str(t.numerator)
    den = t.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{t.numerator}/{t.denominator}"
    digits = max(twos, fives)
    scaled = t * 10**digits
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled.numerator), 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


# --- timed words -----------------------------------------------------------


class TimedAction(NamedTuple):
    action: str
    delay: Fraction


class ResetAction(NamedTuple):
    action: str
    delay: Fraction
    reset: bool


TimedWord = tuple  # tuple[TimedAction, ...]
EMPTY: TimedWord = ()


def tw(*items) -> TimedWord:
    """Build a timed word: ``tw(("a", 4), ("a", "5.5"))`` or ``tw("a", 4, "a", "5.5")``."""
    if items and not isinstance(items[0], (tuple, list)):
        if len(items) % 2:
            raise InputError("flat timed word needs action/delay pairs")
        items = tuple(zip(items[0::2], items[1::2]))
    return tuple(TimedAction(str(a), to_time(d)) for a, d in items)


def word_str(w: Sequence) -> str:
    if not w:
        return "ε"
    return "".join(f"({x[0]},{format_time(x[1])})" for x in w)


def word_to_json(w: Sequence) -> list:
    return [[x[0], format_time(x[1])] for x in w]


def word_from_json(data: Iterable) -> TimedWord:
    return tuple(TimedAction(str(a), to_time(d)) for a, d in data)


def nu_c(w: Sequence, i: int) -> Fraction:
    """Clock value after ``w`` if its last reset happened at position ``i``."""
    if not 0 <= i <= len(w):
        raise InputError(f"reset index {i} out of range for word of length {len(w)}")
    return sum((x[1] for x in w[i:]), Fraction(0))


# --- regions ---------------------------------------------------------------


class Region(NamedTuple):
    """``[n,n]`` when ``point`` else ``(n,n+1)``."""

    n: int
    point: bool

    def __str__(self) -> str:
        return f"[{self.n},{self.n}]" if self.point else f"({self.n},{self.n + 1})"


def region_of(v: Fraction) -> Region:
    fl = math.floor(v)
    return Region(fl, fl == v)


# --- guards ----------------------------------------------------------------

_GUARD_RE = re.compile(r"^\s*([\[(])\s*(\d+)\s*,\s*(\d+|\+)\s*([\])])\s*$")


@dataclass(frozen=True, order=True)
class Guard:
    """Integer-bounded interval; ``upper is None`` means infinity."""

    lower: int
    lower_closed: bool
    upper: Optional[int]
    upper_closed: bool

    def __post_init__(self):
        if self.lower < 0:
            raise ModelError("guard lower bound must be a natural number")
        if self.upper is None:
            if self.upper_closed:
                raise ModelError("infinite upper bound cannot be closed")
        elif self.upper < self.lower or (
            self.upper == self.lower and not (self.lower_closed and self.upper_closed)
        ):
            raise ModelError(f"empty guard {self}")

    @classmethod
    def parse(cls, text: str) -> "Guard":
        m = _GUARD_RE.match(text)
        if not m:
            raise ModelError(f"bad guard syntax {text!r}")
        lo, up = int(m.group(2)), m.group(3)
        if up == "+":
            if m.group(4) != ")":
                raise ModelError(f"'+' must pair with ')' in {text!r}")
            return cls(lo, m.group(1) == "[", None, False)
        return cls(lo, m.group(1) == "[", int(up), m.group(4) == "]")

    @classmethod
    def closed(cls, lo: int, up: int) -> "Guard":
        return cls(lo, True, up, True)

    def __str__(self) -> str:
        up = "+" if self.upper is None else str(self.upper)
        return f"{'[' if self.lower_closed else '('}{self.lower},{up}{']' if self.upper_closed else ')'}"

    def contains(self, v: Fraction) -> bool:
        if v < self.lower or (v == self.lower and not self.lower_closed):
            return False
        if self.upper is None:
            return True
        return v < self.upper or (v == self.upper and self.upper_closed)

    def max_constant(self) -> int:
        return self.lower if self.upper is None else self.upper

    def _start_key(self):
        # sort key on the left endpoint: [n before (n
        return (self.lower, 0 if self.lower_closed else 1)


def guards_partition(guards: Sequence[Guard]) -> bool:
    """True iff the guards are disjoint and cover [0, inf)."""
    gs = sorted(guards, key=Guard._start_key)
    if not gs or gs[0].lower != 0 or not gs[0].lower_closed:
        return False
    for a, b in zip(gs, gs[1:]):
        if a.upper is None or a.upper != b.lower or a.upper_closed == b.lower_closed:
            return False
    return gs[-1].upper is None


def guards_overlap(a: Guard, b: Guard) -> bool:
    lo, lo_closed = max((a.lower, not a.lower_closed), (b.lower, not b.lower_closed))
    lo_closed = not lo_closed
    ups = [(g.upper, g.upper_closed) for g in (a, b) if g.upper is not None]
    if not ups:
        return True
    up, up_closed = min(ups, key=lambda u: (u[0], u[1]))
    return lo < up or (lo == up and lo_closed and up_closed)


def complement(guards: Sequence[Guard]) -> list[Guard]:
    """Guards covering the part of [0, inf) not covered by ``guards`` (assumed disjoint)."""
    out = []
    pos, pos_closed = 0, True  # next uncovered point starts here
    for g in sorted(guards, key=Guard._start_key):
        if (g.lower, not g.lower_closed) > (pos, not pos_closed):
            out.append(Guard(pos, pos_closed, g.lower, not g.lower_closed))
        if g.upper is None:
            return out
        pos, pos_closed = g.upper, not g.upper_closed
    out.append(Guard(pos, pos_closed, None, False))
    return out


# --- automata --------------------------------------------------------------


class Transition(NamedTuple):
    source: str
    action: str
    guard: Guard
    reset: bool
    target: str


class MealyTransition(NamedTuple):
    source: str
    input: str
    output: str
    guard: Guard
    reset: bool
    target: str


class RunResult(NamedTuple):
    accepted: bool
    reset_word: tuple
    reached_sink: bool
    location: str


def _index(transitions, key_of) -> dict:
    table: dict = {}
    for tr in transitions:
        table.setdefault(key_of(tr), []).append(tr)
    for (loc, sym), trs in table.items():
        trs.sort(key=lambda t: t.guard._start_key())
        for a, b in zip(trs, trs[1:]):
            if guards_overlap(a.guard, b.guard):
                raise ModelError(f"overlapping guards {a.guard} and {b.guard} at ({loc},{sym})")
    return table


@dataclass(frozen=True)
class _Automaton:
    alphabet: tuple
    locations: tuple
    initial: str

    def _check_common(self, transitions, sym_of):
        locs = set(self.locations)
        if self.initial not in locs:
            raise ModelError(f"initial location {self.initial} not declared")
        for tr in transitions:
            if tr.source not in locs or tr.target not in locs:
                raise ModelError(f"transition {tr} uses an undeclared location")
            if sym_of(tr) not in self.alphabet:
                raise ModelError(f"transition {tr} uses an unknown symbol")

    @property
    def kappa(self) -> int:
        return max((tr.guard.max_constant() for tr in self.transitions), default=0)

    def is_complete(self) -> bool:
        return all(
            guards_partition([tr.guard for tr in self._table.get((q, s), ())])
            for q in self.locations
            for s in self.alphabet
        )

    def step(self, loc: str, sym: str, clock: Fraction):
        for tr in self._table.get((loc, sym), ()):
            if tr.guard.contains(clock):
                return tr
        return None


@dataclass(frozen=True)
class Dota(_Automaton):
    accepting: frozenset = frozenset()
    transitions: tuple = ()
    sink: Optional[str] = None
    _table: dict = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        object.__setattr__(self, "transitions", tuple(Transition(*t) for t in self.transitions))
        self._check_common(self.transitions, lambda t: t.action)
        if not self.accepting <= set(self.locations):
            raise ModelError("accepting set mentions undeclared locations")
        object.__setattr__(self, "_table", _index(self.transitions, lambda t: (t.source, t.action)))
        if self.sink is not None:
            if self.sink not in self.locations:
                raise ModelError(f"sink {self.sink} not declared")
            if self.sink in self.accepting:
                raise ModelError("sink location must not be accepting")
            for tr in self.transitions:
                if tr.source == self.sink and (tr.target != self.sink or not tr.reset):
                    raise ModelError("sink transitions must be resetting self-loops")


@dataclass(frozen=True)
class Dtmm(_Automaton):
    outputs: tuple = ()
    transitions: tuple = ()
    sink: Optional[str] = None
    _table: dict = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "locations", tuple(self.locations))
        trs = tuple(MealyTransition(*t) for t in self.transitions)
        object.__setattr__(self, "transitions", trs)
        outs = list(self.outputs)
        for tr in trs:
            if tr.output not in outs:
                outs.append(tr.output)
        object.__setattr__(self, "outputs", tuple(outs))
        self._check_common(trs, lambda t: t.input)
        object.__setattr__(self, "_table", _index(trs, lambda t: (t.source, t.input)))

    @property
    def inputs(self) -> tuple:
        return self.alphabet


def run_dota(A: Dota, w: Sequence) -> RunResult:
    loc, clock = A.initial, Fraction(0)
    resets = []
    for sym, delay in w:
        if sym not in A.alphabet:
            raise InputError(f"unknown action {sym!r}")
        clock += delay
        tr = A.step(loc, sym, clock)
        if tr is None:
            raise ModelError(f"no transition from {loc} on ({sym},{format_time(clock)}); model incomplete")
        resets.append(ResetAction(sym, delay, tr.reset))
        loc = tr.target
        if tr.reset:
            clock = Fraction(0)
    return RunResult(loc in A.accepting, tuple(resets), loc == A.sink, loc)


def run_dtmm(M: Dtmm, w: Sequence) -> tuple:
    return run_dtmm_full(M, w)[0]


def run_dtmm_full(M: Dtmm, w: Sequence):
    """Outputs, reset word and final location."""
    loc, clock = M.initial, Fraction(0)
    outs, resets = [], []
    for sym, delay in w:
        if sym not in M.alphabet:
            raise InputError(f"unknown input {sym!r}")
        clock += delay
        tr = M.step(loc, sym, clock)
        if tr is None:
            raise ModelError(f"no transition from {loc} on ({sym},{format_time(clock)}); model incomplete")
        outs.append(tr.output)
        resets.append(ResetAction(sym, delay, tr.reset))
        loc = tr.target
        if tr.reset:
            clock = Fraction(0)
    return tuple(outs), tuple(resets), loc


def _fresh_name(taken, base="sink") -> str:
    name, k = base, 0
    while name in taken:
        k += 1
        name = f"{base}{k}"
    return name


def complete_dota(A: Dota) -> Dota:
    """Route every uncovered (location, action, clock) to a sink; unchanged if already complete."""
    if A.is_complete():
        return A
    sink = A.sink or _fresh_name(A.locations)
    extra = []
    for q in A.locations:
        for s in A.alphabet:
            for g in complement([tr.guard for tr in A._table.get((q, s), ())]):
                extra.append(Transition(q, s, g, True, sink))
    if sink not in A.locations:
        for s in A.alphabet:
            extra.append(Transition(sink, s, Guard(0, True, None, False), True, sink))
    locs = A.locations + ((sink,) if sink not in A.locations else ())
    return Dota(A.alphabet, locs, A.initial, A.accepting, A.transitions + tuple(extra), sink)


def complete_dtmm(M: Dtmm, idle_output: str = "void") -> Dtmm:
    """Fill gaps with non-resetting self-loops that emit ``idle_output`` (the input is ignored)."""
    if M.is_complete():
        return M
    extra = []
    for q in M.locations:
        for s in M.alphabet:
            for g in complement([tr.guard for tr in M._table.get((q, s), ())]):
                extra.append(MealyTransition(q, s, idle_output, g, False, q))
    return Dtmm(M.alphabet, M.locations, M.initial, M.outputs, M.transitions + tuple(extra), M.sink)
