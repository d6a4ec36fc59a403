"""Command-line interface.

Exit codes: 0 success, 1 a checked property was refuted, 2 bad input or usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import automaton
from .analysis import (
    adequacy_check,
    conservative_check,
    membership,
    project,
)
from .bench import TreeBenchConfig, bench_run, sweep, sweep_table
from .construct import run_construction
from .merge import explain_text, merge
from .spec import guard_table, dump_spec, load_spec
from .traces import (
    DEFAULT_DELAY_RANGE,
    OmniscientTrace,
    TraceError,
    load_traces,
    random_walk,
    save_traces,
    traces_to_json,
)

EXIT_OK, EXIT_REFUTED, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _jobs(v: int | None) -> int:
    return v if v else (os.cpu_count() or 1)


def _delay_range(args) -> tuple[float, float]:
    lo, hi = args.delay_min, args.delay_max
    if not 0 < lo <= hi:
        raise InputError(f"invalid delay range [{lo}, {hi}]")
    return lo, hi


def cmd_construct(args) -> int:
    spec = load_spec(args.spec)
    traces = load_traces(args.traces)
    st = run_construction(traces, spec)
    if args.keep_tree:
        automaton.save(st.aut, args.keep_tree)
    explain: list | None = [] if args.explain_merges else None
    merged = merge(st, fixpoint=args.fixpoint, explain=explain)
    automaton.save(merged, args.out)
    if args.dot:
        Path(args.dot).write_text(automaton.to_dot(merged))
    if explain is not None:
        Path(args.explain_merges).write_text(explain_text(explain))
    print(f"tree: {len(st.aut.flows)} modes, {len(st.aut.edges)} edges")
    print(f"merged: {len(merged.flows)} modes, {len(merged.edges)} edges")
    return EXIT_OK


def cmd_simulate(args) -> int:
    a = automaton.load(args.model)
    rng = _delay_range(args)
    walks = [random_walk(a, args.max_steps, args.seed + i, rng) for i in range(args.walks)]
    if args.out:
        save_traces(walks, args.out)
    else:
        print(json.dumps(traces_to_json(walks), indent=1))
    return EXIT_OK


def _omniscient(traces, what: str) -> list[OmniscientTrace]:
    if not all(isinstance(t, OmniscientTrace) for t in traces):
        raise InputError(f"{what} needs omniscient traces (every labelled step with an edge)")
    return traces


def cmd_project(args) -> int:
    a = automaton.load(args.model)
    traces = _omniscient(load_traces(args.traces), "project")
    automaton.save(project(a, traces), args.out)
    return EXIT_OK


def cmd_adequacy(args) -> int:
    a = automaton.load(args.model)
    traces = _omniscient(load_traces(args.traces), "adequacy")
    spec = load_spec(args.spec) if args.spec else None
    if spec is not None and a.alpha is None:
        raise InputError("the model has no abstract-state tags to check against the specification")
    rep = adequacy_check(a, traces, spec, a.alpha if spec else None)
    if args.out:
        Path(args.out).write_text(json.dumps(rep.to_json(), indent=1) + "\n")
    print("mode\tactions\tneeded\ttraversals\tvisits\tstrict\teffective")
    for r in sorted(rep.modes.values(), key=lambda r: r.mode):
        print(f"{r.mode}\t{r.actions}\t{r.threshold + 1}\t{r.traversals}\t{r.visits}\t"
              f"{'pass' if r.passed else 'FAIL'}\t{'pass' if r.effective else 'FAIL'}")
    if rep.coarser is not None:
        print(f"coarser than specification: {rep.coarser}")
    for v in rep.guard_violations:
        print(f"guard violation: {v}")
    ok = rep.ok and (rep.traversals_strict or not args.strict)
    print("ADEQUATE" if ok else "NOT ADEQUATE")
    return EXIT_OK if ok else EXIT_REFUTED


def cmd_check_membership(args) -> int:
    a = automaton.load(args.model)
    traces = load_traces(args.traces)
    results = membership(a, traces, args.eps)
    for i, w in enumerate(results):
        print(f"trace {i}: {'ACCEPT' if w is not None else 'REJECT'}")
    return EXIT_OK if all(w is not None for w in results) else EXIT_REFUTED


def cmd_check_conservative(args) -> int:
    built = automaton.load(args.model)
    ref = automaton.load(args.reference)
    rep = conservative_check(
        built, ref, args.samples, args.seed, args.max_steps, _delay_range(args), args.eps, _jobs(args.jobs)
    )
    print(f"# {rep.header}")
    print(f"samples: {rep.samples}  seed: {rep.seed}  counterexamples: {len(rep.counterexamples)}")
    for i, _ in rep.counterexamples:
        print(f"walk {i}: REJECT")
    if args.out and rep.counterexamples:
        save_traces([w for _, w in rep.counterexamples], args.out)
    return EXIT_OK if rep.ok else EXIT_REFUTED


def cmd_bench_tree(args) -> int:
    c = TreeBenchConfig(args.depth, args.dim, args.spec, args.traces, args.seed)
    run = bench_run(c, verify=not args.no_verify, samples=args.samples, jobs=_jobs(args.jobs))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        automaton.save(run.truth, out / "truth.json")
        (out / "spec.hspec").write_text(dump_spec(run.spec))
        save_traces(run.traces, out / "traces.json")
        automaton.save(run.merged, out / "constructed.json")
        (out / "metrics.json").write_text(json.dumps(run.metrics, indent=1) + "\n")
    print(json.dumps(run.metrics, indent=1))
    flags = [run.metrics.get(k, True) for k in ("adequate", "replay_ok", "conservative_ok")]
    return EXIT_OK if all(flags) else EXIT_REFUTED


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def cmd_bench_sweep(args) -> int:
    rows = sweep(_int_list(args.depths), _int_list(args.dims), args.specs.split(","), args.seed)
    _write(args.out, sweep_table(rows))
    return EXIT_OK


def cmd_spec_dump(args) -> int:
    spec = load_spec(args.spec, args.dim)
    print(dump_spec(spec), end="")
    print("# guard table")
    for line in guard_table(spec).splitlines():
        print(f"# {line}")
    return EXIT_OK


def cmd_export_dot(args) -> int:
    _write(args.out, automaton.to_dot(automaton.load(args.model)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conservative-ha", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def walk_opts(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--max-steps", type=int, default=64)
        sp.add_argument("--delay-min", type=float, default=DEFAULT_DELAY_RANGE[0])
        sp.add_argument("--delay-max", type=float, default=DEFAULT_DELAY_RANGE[1])

    sp = sub.add_parser("construct", help="build a conservative automaton from a specification and traces")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--traces", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--dot")
    sp.add_argument("--keep-tree")
    sp.add_argument("--explain-merges")
    sp.add_argument("--fixpoint", action="store_true", help="repeat merging until stable")
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("simulate", help="random walks of an automaton")
    sp.add_argument("--model", required=True)
    sp.add_argument("--walks", type=int, default=1)
    sp.add_argument("--out")
    walk_opts(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("project", help="projection of an automaton onto omniscient traces")
    sp.add_argument("--model", required=True)
    sp.add_argument("--traces", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("adequacy", help="check a trace set (and specification) for adequacy")
    sp.add_argument("--model", required=True)
    sp.add_argument("--traces", required=True)
    sp.add_argument("--spec")
    sp.add_argument("--out")
    sp.add_argument("--strict", action="store_true", help="require traversals for roots and leaves too")
    sp.set_defaults(func=cmd_adequacy)

    sp = sub.add_parser("check", help="membership and sampled conservativeness checks")
    csub = sp.add_subparsers(dest="check", required=True)
    c = csub.add_parser("membership")
    c.add_argument("--model", required=True)
    c.add_argument("--traces", required=True)
    c.add_argument("--eps", type=float, default=0.0)
    c.set_defaults(func=cmd_check_membership)
    c = csub.add_parser("conservative")
    c.add_argument("--model", required=True)
    c.add_argument("--reference", required=True)
    c.add_argument("--samples", type=int, default=1000)
    c.add_argument("--eps", type=float, default=0.0)
    c.add_argument("--jobs", type=int)
    c.add_argument("--out", help="write rejected walks here")
    walk_opts(c)
    c.set_defaults(func=cmd_check_conservative)

    sp = sub.add_parser("bench", help="binary-tree benchmarks")
    bsub = sp.add_subparsers(dest="bench", required=True)
    b = bsub.add_parser("tree")
    b.add_argument("--depth", type=int, required=True)
    b.add_argument("--dim", type=int, default=3)
    b.add_argument("--spec", choices=("layer", "id"), default="layer")
    b.add_argument("--traces", type=int, default=0, help="minimum trace count")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--samples", type=int, default=100)
    b.add_argument("--jobs", type=int)
    b.add_argument("--out-dir")
    b.add_argument("--no-verify", action="store_true")
    b.set_defaults(func=cmd_bench_tree)
    b = bsub.add_parser("sweep")
    b.add_argument("--depths", default="1-8")
    b.add_argument("--dims", default="3")
    b.add_argument("--specs", default="layer,id")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench_sweep)

    sp = sub.add_parser("spec", help="specification tools")
    ssub = sp.add_subparsers(dest="spec_cmd", required=True)
    s = ssub.add_parser("dump")
    s.add_argument("--spec", required=True)
    s.add_argument("--dim", type=int)
    s.set_defaults(func=cmd_spec_dump)

    sp = sub.add_parser("export", help="export an automaton")
    esub = sp.add_subparsers(dest="export", required=True)
    e = esub.add_parser("dot")
    e.add_argument("--model", required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_export_dot)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, TraceError, automaton.AutomatonError, ValueError, OSError) as exc:
        _err(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
