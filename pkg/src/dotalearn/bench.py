"""Random DOTA generation and the batch benchmark runner."""

from __future__ import annotations

import csv
import io
import math
import random
import statistics
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional

from .equivalence import delay_representatives, equivalent
from .learner import LearnerError, LearnOptions, learn_dota
from .models import Dota, Guard, Transition
from .teacher import Teacher

SINK = "sink"


@dataclass(frozen=True)
class GenParams:
    locations: int
    alphabet_size: int
    kappa: int
    seed: int = 0
    density: float = 3.0  # expected guard segments per (location, action)

    def __post_init__(self):
        if self.locations < 1 or self.alphabet_size < 1 or self.kappa < 1:
            raise ValueError("locations, alphabet_size and kappa must all be at least 1")
        if self.density < 1:
            raise ValueError("density must be at least 1")

    @property
    def group(self) -> str:
        return f"{self.locations}_{self.alphabet_size}_{self.kappa}"

    @classmethod
    def from_group(cls, group: str, seed: int = 0, density: float = 3.0) -> "GenParams":
        try:
            n, k, c = (int(x) for x in group.split("_"))
        except ValueError:
            raise ValueError(f"group must look like N_K_C, got {group!r}") from None
        return cls(n, k, c, seed, density)


def _segments(rng: random.Random, kappa: int, max_cuts: int) -> list[Guard]:
    """Partition of [0, inf) cut at up to ``max_cuts`` integer points from 0..kappa."""
    k = rng.randint(1, max_cuts)
    cuts = sorted(set(rng.randint(0, kappa) for _ in range(k)) - {0})
    guards = []
    lo, lo_closed = 0, True
    for c in cuts:
        # the cut point itself goes left or right at random
        left_closed = rng.random() < 0.5
        guards.append(Guard(lo, lo_closed, c, left_closed))
        lo, lo_closed = c, not left_closed
    guards.append(Guard(lo, lo_closed, None, False))
    return guards


def reachable_locations(A: Dota) -> set:
    """Locations reachable by some timed word (single-clock region search)."""
    cap = A.kappa

    def key(v):
        return (cap + 1, False) if v > cap else (math.floor(v), v == math.floor(v))

    zero = Fraction(0)
    seen = {(A.initial, key(zero))}
    queue = deque([(A.initial, zero)])
    while queue:
        q, v = queue.popleft()
        for a in A.alphabet:
            for d in delay_representatives(v, v, cap):
                tr = A.step(q, a, v + d)
                if tr is None:
                    continue
                nv = zero if tr.reset else v + d
                if (tr.target, key(nv)) not in seen:
                    seen.add((tr.target, key(nv)))
                    queue.append((tr.target, nv))
    return {q for q, _ in seen}


def generate_random_dota(params: GenParams, max_tries: int = 1000) -> Dota:
    """Complete DOTA with ``params.locations`` locations plus an optional sink; deterministic in the seed."""
    rng = random.Random(params.seed)
    names = [f"q{k}" for k in range(params.locations)]
    alphabet = [chr(ord("a") + k) if params.alphabet_size <= 26 else f"a{k}" for k in range(params.alphabet_size)]
    max_cuts = max(1, int(round(2 * params.density - 3)))
    for _ in range(max_tries):
        transitions = []
        for q in names:
            for a in alphabet:
                for g in _segments(rng, params.kappa, max_cuts):
                    target = rng.choice(names + [SINK])
                    transitions.append(Transition(q, a, g, rng.random() < 0.5, target))
        if not any(t.guard.max_constant() == params.kappa for t in transitions):
            continue
        accepting = [q for q in names if rng.random() < 0.5]
        if not accepting:
            accepting = [rng.choice(names)]
        uses_sink = any(t.target == SINK for t in transitions)
        locs = names + ([SINK] if uses_sink else [])
        if uses_sink:
            transitions += [Transition(SINK, a, Guard(0, True, None, False), True, SINK) for a in alphabet]
        A = Dota(alphabet, locs, names[0], accepting, transitions, SINK if uses_sink else None)
        if set(names) <= reachable_locations(A):
            return A
    raise RuntimeError(f"no reachable model found for {params} in {max_tries} tries")


# --- benchmark runner ------------------------------------------------------------

CSV_COLUMNS = [
    "group",
    "transitions_mean",
    "mq_min",
    "mq_mean",
    "mq_max",
    "eq_min",
    "eq_mean",
    "eq_max",
    "locations_mean",
    "learnt",
    "time_mean",
]


def instance_seed(base_seed: int, k: int) -> int:
    return random.Random(f"{base_seed}:{k}").getrandbits(64)


def _run_instance(args) -> dict:
    params, timeout, sink_info = args
    target = generate_random_dota(params)
    rec = {
        "seed": params.seed,
        "transitions": sum(1 for t in target.transitions if t.target != target.sink and t.source != target.sink),
        "ok": False,
    }
    start = time.perf_counter()
    try:
        teacher = Teacher(target, sink_info=sink_info)
        hyp, stats = learn_dota(teacher, LearnOptions(time_budget=timeout, sink_info=sink_info))
    except LearnerError as exc:
        rec.update(error=str(exc), wall_time=time.perf_counter() - start)
        return rec
    rec["wall_time"] = time.perf_counter() - start
    rec.update(membership=stats.membership, equivalence=stats.equivalence, locations=len(hyp.locations))
    # success only counts when an independent check agrees
    rec["ok"] = equivalent(teacher.target, hyp)
    if not rec["ok"]:
        rec["error"] = "learned model is not equivalent to the target"
    return rec


def _agg(values) -> dict:
    if not values:
        return {"min": None, "mean": None, "max": None}
    return {"min": min(values), "mean": statistics.fmean(values), "max": max(values)}


def run_benchmark(
    params: GenParams,
    count: int,
    timeout: float = 600.0,
    workers: int = 1,
    sink_info: bool = False,
) -> dict:
    """Learn ``count`` generated models of one group; failures are recorded, not raised."""
    jobs = []
    for k in range(count):
        p = GenParams(params.locations, params.alphabet_size, params.kappa, instance_seed(params.seed, k), params.density)
        jobs.append((p, timeout, sink_info))
    if workers > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_instance, jobs))
    else:
        records = [_run_instance(j) for j in jobs]
    good = [r for r in records if r["ok"]]
    return {
        "group": params.group,
        "count": count,
        "seed": params.seed,
        "density": params.density,
        "learnt": len(good),
        "success_ratio": (len(good) / count) if count else None,
        "transitions_mean": statistics.fmean(r["transitions"] for r in records) if records else None,
        "membership": _agg([r["membership"] for r in good]),
        "equivalence": _agg([r["equivalence"] for r in good]),
        "locations_mean": statistics.fmean(r["locations"] for r in good) if good else None,
        "time_mean": statistics.fmean(r["wall_time"] for r in records) if records else None,
        "instances": records,
    }


def report_csv(reports: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        mq, eq = rep["membership"], rep["equivalence"]
        w.writerow([
            rep["group"],
            _fmt(rep["transitions_mean"]),
            mq["min"], _fmt(mq["mean"]), mq["max"],
            eq["min"], _fmt(eq["mean"]), eq["max"],
            _fmt(rep["locations_mean"]),
            f"{rep['learnt']}/{rep['count']}",
            _fmt(rep["time_mean"], 2),
        ])
    return buf.getvalue()


def _fmt(x: Optional[float], digits: int = 1) -> str:
    return "" if x is None else f"{x:.{digits}f}"


def params_dict(params: GenParams) -> dict:
    return asdict(params)
