"""Simulated teachers answering membership and equivalence queries."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Optional

from .equivalence import dota_counterexample, dtmm_counterexample
from .models import Dota, Dtmm, InputError, complete_dota, run_dota, run_dtmm


class CapabilityError(RuntimeError):
    pass


@dataclass
class TeacherStats:
    membership_count: int = 0
    equivalence_count: int = 0
    cache_hits: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


class _CachingTeacher:
    def __init__(self):
        self.stats = TeacherStats()
        self._cache: dict = {}

    def _answer(self, w):
        raise NotImplementedError

    def _lookup(self, w):
        w = tuple(w)
        hit = self._cache.get(w)
        if hit is not None:
            self.stats.cache_hits += 1
            return hit
        res = self._answer(w)
        self._cache[w] = res
        self.stats.membership_count += 1
        return res


class Teacher(_CachingTeacher):
    """Holds a hidden DOTA; completes it with a sink if necessary."""

    mode = "dota"

    def __init__(self, target: Dota, sink_info: bool = False):
        super().__init__()
        self.target = complete_dota(target)
        self.sink_info = sink_info

    @property
    def alphabet(self) -> tuple:
        return self.target.alphabet

    def _answer(self, w):
        r = run_dota(self.target, w)
        return (r.accepted, r.reached_sink)

    def mq(self, w) -> bool:
        return self._lookup(w)[0]

    def mq_sink(self, w) -> tuple:
        if not self.sink_info:
            raise CapabilityError("sink information is not enabled for this teacher")
        return self._lookup(w)

    def eq(self, hyp: Dota) -> Optional[tuple]:
        self.stats.equivalence_count += 1
        if set(hyp.alphabet) != set(self.target.alphabet):
            raise InputError("hypothesis alphabet differs from the target's")
        return dota_counterexample(self.target, hyp)


class MealyTeacher(_CachingTeacher):
    mode = "dtmm"

    def __init__(self, target: Dtmm):
        super().__init__()
        if not target.is_complete():
            raise InputError("target DTMM must be complete")
        self.target = target
        self.sink_info = False

    @property
    def alphabet(self) -> tuple:
        return self.target.alphabet

    def _answer(self, w):
        return run_dtmm(self.target, w)

    def mq(self, w) -> tuple:
        return self._lookup(w)

    def eq(self, hyp: Dtmm) -> Optional[tuple]:
        self.stats.equivalence_count += 1
        if set(hyp.alphabet) != set(self.target.alphabet):
            raise InputError("hypothesis input alphabet differs from the target's")
        return dtmm_counterexample(self.target, hyp)


class ScriptedTeacher:
    """Replays fixed counterexamples, then falls back to the exact oracle."""

    def __init__(self, base, counterexamples: Iterable):
        self.base = base
        self.script = [tuple(c) for c in counterexamples]
        self.mode = base.mode
        self.sink_info = base.sink_info

    def __getattr__(self, name):
        return getattr(self.base, name)

    def eq(self, hyp):
        if self.script:
            self.base.stats.equivalence_count += 1
            return self.script.pop(0)
        return self.base.eq(hyp)
