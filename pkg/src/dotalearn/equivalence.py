"""Exact language equivalence of two complete one-clock machines.

The synchronized product carries two clocks.  Exploration is breadth-first
over concrete valuation pairs, deduplicated by their two-clock region (capped
integer parts, integrality flags and the order of the fractional parts), so
the search is finite and every stored state already has concrete delays
leading to it.
"""

from __future__ import annotations

import math
from collections import deque
from fractions import Fraction
from typing import NamedTuple, Optional

from .models import Dota, Dtmm, InputError, ModelError, TimedAction, run_dota, run_dtmm

HALF = Fraction(1, 2)


def _clock_key(v: Fraction, cap: int):
    if v > cap:
        return (cap + 1, False)
    fl = math.floor(v)
    return (fl, fl == v)


class ProductState(NamedTuple):
    loc_target: str
    loc_hyp: str
    region_pair: tuple  # (key of x, key of y, order of fractional parts)


def region_pair(x: Fraction, y: Fraction, cap: int) -> tuple:
    kx, ky = _clock_key(x, cap), _clock_key(y, cap)
    tag = 0
    if x <= cap and y <= cap and not kx[1] and not ky[1]:
        fx, fy = x - kx[0], y - ky[0]
        tag = (fx > fy) - (fx < fy)
    return (kx, ky, tag)


def delay_representatives(x: Fraction, y: Fraction, cap: int) -> list[Fraction]:
    """One delay per time-successor region of (x, y), in increasing order."""
    points = {Fraction(0)}
    for v in (x, y):
        n = math.floor(v) + 1
        while n <= cap:
            points.add(n - v)
            n += 1
    pts = sorted(points)
    out = []
    for a, b in zip(pts, pts[1:]):
        out.append(a)
        out.append((a + b) / 2)
    out.append(pts[-1])
    out.append(pts[-1] + HALF)
    return out


def _scaled_delays(X: int, Y: int, L: int, cap: int) -> list[int]:
    """``delay_representatives`` in units of 1/L (X, Y and L even)."""
    points = {0}
    for V in (X, Y):
        for n in range(V // L + 1, cap + 1):
            points.add(n * L - V)
    pts = sorted(points)
    out = []
    for a, b in zip(pts, pts[1:]):
        out.append(a)
        out.append((a + b) // 2)
    out.append(pts[-1])
    out.append(pts[-1] + L // 2)
    return out


def _stepper(M, cap: int):
    """Transition lookup memoised on the clock region (guards only see regions)."""
    memo: dict = {}
    half = Fraction(1, 2)

    def step(loc, a, key):
        k = (loc, a, key)
        tr = memo.get(k, memo)
        if tr is memo:
            n, is_int = key
            tr = memo[k] = M.step(loc, a, Fraction(n) if is_int else n + half)
        return tr

    return step


def _search(A, B, observe_state, observe_step) -> Optional[tuple]:
    if set(A.alphabet) != set(B.alphabet):
        raise InputError(f"alphabet mismatch: {sorted(A.alphabet)} vs {sorted(B.alphabet)}")
    cap = max(A.kappa, B.kappa)
    alphabet = sorted(A.alphabet)
    zero = Fraction(0)
    if observe_state(A, A.initial) != observe_state(B, B.initial):
        return ()
    step_a, step_b = _stepper(A, cap), _stepper(B, cap)
    over = (cap + 1, False)
    seen = {ProductState(A.initial, B.initial, region_pair(zero, zero, cap))}
    queue = deque([((A.initial, B.initial, zero, zero), ())])
    while queue:
        (p, q, x, y), path = queue.popleft()
        # work in integers: every value below is a multiple of 1/L
        L = 2 * math.lcm(x.denominator, y.denominator)
        X, Y = x.numerator * (L // x.denominator), y.numerator * (L // y.denominator)
        capL = cap * L
        steps = []
        for D in _scaled_delays(X, Y, L, cap):
            XD, YD = X + D, Y + D
            kx = over if XD > capL else (XD // L, XD % L == 0)
            ky = over if YD > capL else (YD // L, YD % L == 0)
            steps.append((D, XD, YD, kx, ky))
        for a in alphabet:
            for D, XD, YD, kx, ky in steps:
                ta, tb = step_a(p, a, kx), step_b(q, a, ky)
                if ta is None or tb is None:
                    raise ModelError("equivalence check needs complete models")
                if observe_step(ta) != observe_step(tb) or observe_state(A, ta.target) != observe_state(B, tb.target):
                    return path + (TimedAction(a, Fraction(D, L)),)
                nkx = (0, True) if ta.reset else kx
                nky = (0, True) if tb.reset else ky
                tag = 0
                if nkx != over and nky != over and not nkx[1] and not nky[1]:
                    fx, fy = XD % L, YD % L
                    tag = (fx > fy) - (fx < fy)
                st = ProductState(ta.target, tb.target, (nkx, nky, tag))
                if st not in seen:
                    seen.add(st)
                    nx = zero if ta.reset else Fraction(XD, L)
                    ny = zero if tb.reset else Fraction(YD, L)
                    queue.append(((ta.target, tb.target, nx, ny), path + (TimedAction(a, Fraction(D, L)),)))
    return None


def _dota_state(M, loc):
    return loc in M.accepting


def _no_obs(_):
    return None


def _dtmm_step(tr):
    return tr.output


def _no_state(M, loc):
    return None


def dota_counterexample(target: Dota, hyp: Dota) -> Optional[tuple]:
    """None if the languages agree, else a verified distinguishing timed word."""
    ctx = _search(target, hyp, _dota_state, _no_obs)
    if ctx is not None and run_dota(target, ctx).accepted == run_dota(hyp, ctx).accepted:
        raise AssertionError(f"counterexample failed replay: {ctx}")
    return ctx


def dtmm_counterexample(target: Dtmm, hyp: Dtmm) -> Optional[tuple]:
    ctx = _search(target, hyp, _no_state, _dtmm_step)
    if ctx is not None and run_dtmm(target, ctx) == run_dtmm(hyp, ctx):
        raise AssertionError(f"counterexample failed replay: {ctx}")
    return ctx


def equivalent(A, B) -> bool:
    if isinstance(A, Dota):
        return dota_counterexample(A, B) is None
    return dtmm_counterexample(A, B) is None
