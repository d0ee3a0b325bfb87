"""Command-line front end.

Subcommands: check (solve queries), stats (size of the built system),
bench (sweep the REQUESTS constant over all engines), export (write the
transition system), prune (minimality check and repair).  Results go to
stdout as key=value records (or one JSON document under --json);
diagnostics go to stderr.  Exit codes: 0 success, 1 error, 2 a threshold
property was violated.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import encode, intervals, language, solve
from .api import (
    apply_engine,
    composed_system,
    parse_constant,
    prune_edges,
    run_pipeline,
)
from .automata import location_str
from .elaborate import resolve
from .errors import IptaError
from .explore import Build, BuildSettings, build, export_text, prepare, warn_if_strict
from .language import parse_model, parse_queries_file, parse_query, pretty


def _add_common(p):
    p.add_argument("model", help="model file (.ipta)")
    p.add_argument(
        "--const",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="bind or override a constant (repeatable)",
    )


def _add_engine(p):
    p.add_argument("--engine", choices=("ipta", "ptastar", "sample"), default="ipta")
    p.add_argument("--value", default=None, help="sampled probability for --engine sample")
    p.add_argument("--no-compress", action="store_true", help="build every unit-tick state")
    p.add_argument(
        "--no-truncate",
        action="store_true",
        help="keep exploring past target and provably-doomed states",
    )
    p.add_argument("--state-cap", type=int, default=10_000_000)


def _add_solver(p):
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--criterion", choices=("absolute", "relative"), default="absolute")


def make_parser():
    parser = argparse.ArgumentParser(
        prog="ipta", description="Model checker for interval probabilistic timed automata"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="compute reachability values or verdicts")
    _add_common(p)
    p.add_argument("query", help="query string or .props file")
    _add_engine(p)
    _add_solver(p)
    p.add_argument("--prune", action="store_true", help="prune distributions before solving")
    p.add_argument("--export", metavar="PATH", help="also write the built system")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("stats", help="print state/choice/transition counts")
    _add_common(p)
    _add_engine(p)
    p.add_argument("--query", default=None, help="optional query giving the build context")
    p.add_argument("--export", metavar="PATH")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("bench", help="sweep REQUESTS over a range, all engines")
    _add_common(p)
    p.add_argument("query")
    p.add_argument("--requests", required=True, metavar="LO..HI[..STEP]")
    p.add_argument("--value", default=None, help="sampled probability for the sample engine")
    p.add_argument("--reps", type=int, default=3, help="repetitions; the median time is reported")
    p.add_argument("--no-compress", action="store_true")
    p.add_argument("--no-truncate", action="store_true")
    p.add_argument("--state-cap", type=int, default=10_000_000)
    _add_solver(p)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("export", help="write the transition system")
    _add_common(p)
    _add_engine(p)
    p.add_argument("--query", default=None)
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")

    p = sub.add_parser("prune", help="check distributions for minimality")
    _add_common(p)
    p.add_argument("--fix", metavar="PATH", help="write the model with pruned bounds")

    return parser


def _constants(pairs):
    out = {}
    for item in pairs:
        name, sep, value = item.partition("=")
        if not sep:
            raise IptaError(f"--const expects NAME=VALUE, got {item!r}")
        out[name.strip()] = parse_constant(value)
    return out


def _build_settings(args) -> BuildSettings:
    return BuildSettings(
        state_cap=args.state_cap,
        compress=not args.no_compress,
        truncate=not args.no_truncate,
    )


def _report_timelocks(build: Build):
    locked = build.imdp.timelocked
    if not locked:
        return
    shown = ", ".join(
        _state_str(build, sid) for sid in locked[:5]
    )
    more = "" if len(locked) <= 5 else f" and {len(locked) - 5} more"
    print(
        f"warning: {len(locked)} state(s) admit neither waiting nor any action: "
        f"{shown}{more}",
        file=sys.stderr,
    )


def _state_str(build: Build, sid: int) -> str:
    st = build.imdp.states[sid]
    clocks = ",".join(
        f"{n}={v}" for n, v in zip(build.imdp.clock_names, st.clocks or ())
    )
    return f"{location_str(st.location) if st.location else '?'}[{clocks}]"


def _emit_records(records, as_json):
    if as_json:
        print(json.dumps(records, indent=2, default=str))
    else:
        for record in records:
            for key, value in record.items():
                print(f"{key}={value}")
            print()


def cmd_check(args) -> int:
    model_text = Path(args.model).read_text()
    constants = _constants(args.const)
    if args.query.endswith(".props"):
        queries = parse_queries_file(Path(args.query).read_text())
    else:
        queries = [parse_query(args.query)]
    settings = _build_settings(args)
    solve_settings = solve.SolveSettings(args.epsilon, args.max_iters, args.criterion)
    sample_value = parse_constant(args.value) if args.value is not None else None
    if args.engine == "sample" and sample_value is None:
        raise IptaError("--engine sample requires --value")

    records = []
    exit_code = 0
    src = parse_model(model_text)
    system, resolved = composed_system(src, constants)
    if args.prune:
        system = prune_edges(system)
    system = apply_engine(system, args.engine, sample_value)
    for query in queries:
        prep = prepare(system, resolved.env, resolved.label_table, query)
        warn_if_strict(prep)
        start = time.perf_counter()
        built = build(prep, settings)
        outcome = solve.check(built, solve_settings)
        elapsed = time.perf_counter() - start
        _report_timelocks(built)
        record = {
            "query": str(query),
            "engine": args.engine,
            "states": built.imdp.n_states,
            "choices": built.imdp.n_choices,
            "transitions": built.imdp.n_transitions,
        }
        if outcome.verdict is not None:
            record["verdict"] = str(outcome.verdict).lower()
            direction, result = next(iter(outcome.direction_values.items()))
            record[f"p{direction}"] = repr(result.value_at_initial)
            if not outcome.verdict:
                exit_code = 2
        else:
            record["value"] = repr(outcome.value)
        record["iterations"] = outcome.iterations
        record["converged"] = str(outcome.converged).lower()
        if not outcome.converged:
            print(
                "warning: iteration cap reached before the convergence "
                "threshold; values may be below the fixpoint",
                file=sys.stderr,
            )
        record["seconds"] = f"{elapsed:.6f}"
        records.append(record)
        if args.export:
            Path(args.export).write_text(export_text(built.imdp))
    _emit_records(records, args.json)
    return exit_code


def cmd_stats(args) -> int:
    model_text = Path(args.model).read_text()
    constants = _constants(args.const)
    sample_value = parse_constant(args.value) if args.value is not None else None
    if args.engine == "sample" and sample_value is None:
        raise IptaError("--engine sample requires --value")
    src = parse_model(model_text)
    system, resolved = composed_system(src, constants)
    system = apply_engine(system, args.engine, sample_value)
    query = parse_query(args.query) if args.query else None
    prep = prepare(system, resolved.env, resolved.label_table, query)
    warn_if_strict(prep)
    settings = _build_settings(args)
    built = build(prep, settings)
    _report_timelocks(built)
    record = {
        "engine": args.engine,
        "states": built.imdp.n_states,
        "choices": built.imdp.n_choices,
        "transitions": built.imdp.n_transitions,
        "timelocked": len(built.imdp.timelocked),
    }
    _emit_records([record], args.json)
    if args.export:
        Path(args.export).write_text(export_text(built.imdp))
    return 0


def _parse_range(spec: str):
    parts = spec.split("..")
    if len(parts) == 2:
        lo, hi, step = int(parts[0]), int(parts[1]), None
    elif len(parts) == 3:
        lo, hi, step = int(parts[0]), int(parts[1]), int(parts[2])
    else:
        raise IptaError(f"--requests expects LO..HI[..STEP], got {spec!r}")
    if step is None:
        step = 10 if (hi - lo) % 10 == 0 and hi > lo else max(1, hi - lo)
    if lo > hi or step <= 0:
        raise IptaError(f"bad range {spec!r}")
    return list(range(lo, hi + 1, step))


def cmd_bench(args) -> int:
    import gc

    model_text = Path(args.model).read_text()
    constants = _constants(args.const)
    query = parse_query(args.query)
    requests = _parse_range(args.requests)
    settings = BuildSettings(
        state_cap=args.state_cap,
        compress=not args.no_compress,
        truncate=not args.no_truncate,
    )
    solve_settings = solve.SolveSettings(args.epsilon, args.max_iters, args.criterion)
    src = parse_model(model_text)

    rows = []
    for n in requests:
        consts = dict(constants)
        consts["REQUESTS"] = n
        # each engine checks its own pre-encoded automaton, so the reported
        # time covers building the transition system and solving it; parsing
        # and the engine encodings are modeling-side work and stay untimed
        system, resolved = composed_system(src, consts)
        sample_value = (
            parse_constant(args.value)
            if args.value is not None
            else encode.default_sample_value(system)
        )
        for engine in ("sample", "ipta", "ptastar"):
            engine_system = apply_engine(system, engine, sample_value)
            times = []
            result = None
            for _ in range(max(1, args.reps)):
                gc_was_enabled = gc.isenabled()
                gc.collect()
                gc.disable()
                try:
                    start = time.perf_counter()
                    prep = prepare(engine_system, resolved.env, resolved.label_table, query)
                    built = build(prep, settings)
                    outcome = solve.check(built, solve_settings)
                    times.append(time.perf_counter() - start)
                finally:
                    if gc_was_enabled:
                        gc.enable()
                result = (built, outcome)
            times.sort()
            median = times[len(times) // 2]
            built, outcome = result
            rows.append(
                {
                    "requests": n,
                    "states": built.imdp.n_states,
                    "engine": engine,
                    "transitions": built.imdp.n_transitions,
                    "seconds": f"{median:.6f}",
                    "value": repr(outcome.value),
                }
            )
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print("requests,states,engine,transitions,seconds,value")
        for row in rows:
            print(
                f"{row['requests']},{row['states']},{row['engine']},"
                f"{row['transitions']},{row['seconds']},{row['value']}"
            )
    return 0


def cmd_export(args) -> int:
    model_text = Path(args.model).read_text()
    constants = _constants(args.const)
    sample_value = parse_constant(args.value) if args.value is not None else None
    if args.engine == "sample" and sample_value is None:
        raise IptaError("--engine sample requires --value")
    src = parse_model(model_text)
    system, resolved = composed_system(src, constants)
    system = apply_engine(system, args.engine, sample_value)
    query = parse_query(args.query) if args.query else None
    prep = prepare(system, resolved.env, resolved.label_table, query)
    built = build(prep, _build_settings(args))
    text = export_text(built.imdp)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_prune(args) -> int:
    model_text = Path(args.model).read_text()
    constants = _constants(args.const)
    src = parse_model(model_text)
    resolved = resolve(src, constants)
    any_violation = False
    fixed_commands = {}
    for mod_index, (mod, ipta) in enumerate(zip(src.modules, resolved.modules)):
        for cmd_index, cmd in enumerate(mod.commands):
            weights = []
            for upd in cmd.updates:
                if upd.low is None:
                    weights.append((Fraction(1), Fraction(1)))
                else:
                    from .elaborate import eval_const

                    lo = Fraction(eval_const(upd.low, resolved.env))
                    hi = (
                        Fraction(eval_const(upd.high, resolved.env))
                        if upd.high is not None
                        else lo
                    )
                    weights.append((lo, hi))
            dist = intervals.IntervalDistribution.of(
                (i, lo, hi) for i, (lo, hi) in enumerate(weights)
            )
            problems = intervals.validate(dist)
            where = f"module {mod.name} command {cmd_index + 1}"
            if problems:
                print(f"{where}: invalid: {'; '.join(problems)}")
                any_violation = True
                continue
            report = intervals.minimality_report(dist)
            if report:
                any_violation = True
                for outcome, condition in report:
                    print(
                        f"{where}: not minimal, condition {condition} violated "
                        f"at alternative {outcome + 1}"
                    )
                pruned = intervals.prune(dist)
                fixed_commands[(mod_index, cmd_index)] = {
                    o: pruned.bounds(o) for o in pruned.outcomes
                }
            else:
                print(f"{where}: minimal")
    if args.fix:
        new_text = _rewrite_weights(src, fixed_commands)
        Path(args.fix).write_text(new_text)
        print(f"pruned model written to {args.fix}")
    return 0


def _rewrite_weights(src, fixed_commands):
    from .language import (
        Command,
        ModelSource,
        ModuleDecl,
        Num,
        WeightedUpdate,
    )

    new_modules = []
    for mod_index, mod in enumerate(src.modules):
        new_commands = []
        for cmd_index, cmd in enumerate(mod.commands):
            key = (mod_index, cmd_index)
            if key not in fixed_commands:
                new_commands.append(cmd)
                continue
            bounds = fixed_commands[key]
            new_updates = []
            for i, upd in enumerate(cmd.updates):
                lo, hi = bounds.get(i, (Fraction(0), Fraction(0)))
                if lo == hi:
                    new_updates.append(WeightedUpdate(Num(lo), None, upd.assignments))
                else:
                    new_updates.append(WeightedUpdate(Num(lo), Num(hi), upd.assignments))
            new_commands.append(Command(cmd.action, cmd.guard, tuple(new_updates)))
        new_modules.append(
            ModuleDecl(mod.name, mod.variables, mod.clocks, mod.invariant, tuple(new_commands))
        )
    return pretty(ModelSource(src.constants, tuple(new_modules), src.labels))


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    handlers = {
        "check": cmd_check,
        "stats": cmd_stats,
        "bench": cmd_bench,
        "export": cmd_export,
        "prune": cmd_prune,
    }
    try:
        return handlers[args.command](args)
    except IptaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
