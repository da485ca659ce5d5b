"""Command line entry point: learn, check-equiv, gen, bench."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import GenParams, generate_random_dota, instance_seed, report_csv, run_benchmark
from .equivalence import dota_counterexample, dtmm_counterexample
from .learner import Learner, LearnerError, LearnOptions, LearnTimeout
from .modelio import load_model, save_model
from .models import Dota, Dtmm, InputError, ModelError, complete_dota, word_from_json, word_to_json
from .solver import SolverError
from .teacher import MealyTeacher, ScriptedTeacher, Teacher


def _write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def cmd_learn(args) -> int:
    target = load_model(args.target)
    if args.mode == "dota":
        if not isinstance(target, Dota):
            raise InputError("--mode dota needs a DOTA target")
        teacher = Teacher(target, sink_info=args.sink_info)
    else:
        if not isinstance(target, Dtmm):
            raise InputError("--mode dtmm needs a DTMM target")
        if args.sink_info:
            raise InputError("--sink-info is only available for DOTA targets")
        teacher = MealyTeacher(target)
    if args.scripted_ctx:
        words = json.loads(Path(args.scripted_ctx).read_text())
        teacher = ScriptedTeacher(teacher, [word_from_json(w) for w in words])
    opts = LearnOptions(
        max_iterations=args.max_iterations,
        time_budget=args.time_budget,
        solver=args.solver,
        sink_info=args.sink_info,
    )
    learner = Learner(teacher, opts)
    code = 0
    try:
        hyp, stats = learner.run()
    except LearnTimeout as exc:
        print(f"error: {exc}", file=sys.stderr)
        hyp, stats, code = None, exc.stats, 3
    finally:
        if args.trace:
            Path(args.trace).write_text(learner.trace_jsonl())
    if hyp is not None and args.out:
        save_model(hyp, args.out)
    if args.stats:
        _write_json(args.stats, stats.as_dict())
    if hyp is not None:
        print(f"learned {len(hyp.locations)} locations with {stats.membership} membership "
              f"and {stats.equivalence} equivalence queries")
    return code


def cmd_check_equiv(args) -> int:
    a, b = load_model(args.a), load_model(args.b)
    if type(a) is not type(b):
        raise InputError("both models must be of the same type")
    if isinstance(a, Dota):
        ctx = dota_counterexample(complete_dota(a), complete_dota(b))
    else:
        if not (a.is_complete() and b.is_complete()):
            raise InputError("DTMM models must be complete")
        ctx = dtmm_counterexample(a, b)
    if ctx is None:
        print("equivalent")
        return 0
    print(json.dumps(word_to_json(ctx)))
    return 1


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        p = GenParams(args.locations, args.alphabet, args.kappa, instance_seed(args.seed, k), args.density)
        path = out / f"{p.group}_{k:02d}.json"
        save_model(generate_random_dota(p), path)
        print(path)
    return 0


def cmd_bench(args) -> int:
    params = GenParams.from_group(args.group, seed=args.seed, density=args.density)
    report = run_benchmark(params, args.count, timeout=args.timeout, workers=args.workers, sink_info=args.sink_info)
    if args.report:
        _write_json(args.report, report)
    if args.csv:
        Path(args.csv).write_text(report_csv([report]))
    sys.stdout.write(report_csv([report]))
    return 0 if report["learnt"] == report["count"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dotalearn", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn a model from a simulated teacher")
    p.add_argument("--target", required=True)
    p.add_argument("--mode", choices=["dota", "dtmm"], default="dota")
    p.add_argument("--solver", default="internal", help="internal or smtlib:<path to solver binary>")
    p.add_argument("--sink-info", action="store_true")
    p.add_argument("--scripted-ctx", help="JSON list of counterexamples replayed before the exact oracle")
    p.add_argument("--out")
    p.add_argument("--stats")
    p.add_argument("--trace")
    p.add_argument("--max-iterations", type=int, default=500)
    p.add_argument("--time-budget", type=float, default=600.0)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("check-equiv", help="exact equivalence of two models")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_check_equiv)

    p = sub.add_parser("gen", help="generate random DOTA models")
    p.add_argument("--locations", type=int, required=True)
    p.add_argument("--alphabet", type=int, required=True)
    p.add_argument("--kappa", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density", type=float, default=3.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="learn a group of random models and report")
    p.add_argument("--group", required=True, help="N_K_C: locations, alphabet size, kappa")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--timeout", type=float, default=600.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--density", type=float, default=3.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--sink-info", action="store_true")
    p.add_argument("--report")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ModelError, LearnerError, SolverError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
