"""Binary-tree ground truths, matching specifications and adequate trace sets.

Modes of a depth-d tree use heap numbering: the root is 0 and mode i has
children 2i+1 and 2i+2.  Flows are singular with dyadic rates and walks use
dyadic delays, so every continuous value in a generated trace is exact.

Two specification styles are produced.  The layer style has one abstract
state per depth and labels every edge into depth k with ``a<k>``, so all modes
of one depth become action-similar.  The id style has one abstract state per
mode and a unique label per edge, so nothing but copies of the same mode can
ever merge.
"""

from __future__ import annotations

import random
import time
from dataclasses import asdict, dataclass
from typing import Iterable

from .analysis import adequacy_check, conservative_check, project
from .automaton import HybridAutomaton
from .construct import run_construction
from .geometry import Rect, full
from .merge import merge
from .spec import SpecModel
from .traces import (
    DEFAULT_DELAY_QUANTUM,
    DEFAULT_DELAY_RANGE,
    OmniscientTrace,
    Step,
    _quantize,
    _realize,
    accepts,
    observe,
    random_walk,
)

MAX_DEPTH = 20
SPEC_KINDS = ("layer", "id")


@dataclass(frozen=True)
class TreeBenchConfig:
    depth: int
    dim: int = 3
    spec_kind: str = "layer"
    trace_count: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.depth <= MAX_DEPTH:
            raise ValueError(f"depth must lie in [1, {MAX_DEPTH}], got {self.depth}")
        if self.dim < 1:
            raise ValueError("dim must be at least 1")
        if self.spec_kind not in SPEC_KINDS:
            raise ValueError(f"spec kind must be one of {SPEC_KINDS}, got {self.spec_kind!r}")
        if self.trace_count < 0:
            raise ValueError("trace_count must be non-negative")


def depth_of(m: int) -> int:
    return (m + 1).bit_length() - 1


def _label(c: TreeBenchConfig, child: int) -> str:
    return f"a{depth_of(child)}" if c.spec_kind == "layer" else f"e{child}"


def _state(c: TreeBenchConfig, m: int) -> str:
    return f"L{depth_of(m)}" if c.spec_kind == "layer" else f"s{m}"


def gen_tree(c: TreeBenchConfig) -> tuple[HybridAutomaton, SpecModel, dict[int, str]]:
    rng = random.Random(c.seed)
    n_modes = 2 ** (c.depth + 1) - 1
    flows = {m: Rect.point([rng.randint(-40, 40) / 4 for _ in range(c.dim)]) for m in range(n_modes)}
    vacuous = full(c.dim)
    edges = {}
    for m in range(n_modes // 2):
        for child in (2 * m + 1, 2 * m + 2):
            edges[(m, _label(c, child), child)] = vacuous
    abstraction = {m: _state(c, m) for m in range(n_modes)}
    truth = HybridAutomaton(
        dim=c.dim,
        flows=flows,
        edges=edges,
        init_mode=0,
        init_x=(0.0,) * c.dim,
        alpha=abstraction,
    )
    guards = {}
    for (s, lab, t) in edges:
        key = (abstraction[s], lab, abstraction[t])
        guards[key] = vacuous
    spec = SpecModel(dim=c.dim, states=frozenset(abstraction.values()), init=abstraction[0], guards=guards)
    return truth, spec, abstraction


def traces_per_leaf(truth: HybridAutomaton) -> int:
    """Smallest number of root-to-leaf traces per leaf meeting the traversal bound."""
    n_modes = len(truth.flows)
    depth = depth_of(n_modes - 1)

    def acts(m: int) -> int:
        ins = {lab for _, lab, _ in truth.predecessors[m]}
        outs = {lab for _, lab, _ in truth.successors[m]}
        return len(ins) + len(outs)

    k = 1
    while True:
        ok = True
        for m in range(n_modes):
            a = acts(m)
            through = k * 2 ** (depth - depth_of(m))
            if through <= a * (a - 1) // 2:
                ok = False
                break
        if ok:
            return k
        k += 1


def leaf_trace(
    truth: HybridAutomaton,
    leaf: int,
    rng: random.Random,
    delay_range: tuple[float, float] = DEFAULT_DELAY_RANGE,
    quantum: float = DEFAULT_DELAY_QUANTUM,
) -> OmniscientTrace:
    path = [leaf]
    while path[-1] != 0:
        path.append((path[-1] - 1) // 2)
    path.reverse()
    dmin, dmax = delay_range
    x = truth.init_x
    steps = []
    edges = []
    for i, m in enumerate(path):
        d = min(max(_quantize(rng.uniform(dmin, dmax), quantum), dmin), dmax)
        x = tuple(_realize(v, iv.lo, iv.lo, iv.hi, d) for v, iv in zip(x, truth.flows[m].dims))
        label = None
        if i:
            e = next(e for e in truth.predecessors[m])
            edges.append(e)
            label = e[1]
        steps.append(Step(label, d, x))
    return OmniscientTrace(truth.init_x, tuple(steps), tuple(edges))


def gen_adequate_traces(
    truth: HybridAutomaton, spec: SpecModel, abstraction: dict[int, str], c: TreeBenchConfig
) -> list[OmniscientTrace]:
    """Root-to-leaf traces, the same number for every leaf, padded with
    random walks up to ``c.trace_count``."""
    rng = random.Random(c.seed + 1)
    n_modes = len(truth.flows)
    leaves = range(n_modes // 2, n_modes)
    k = traces_per_leaf(truth)
    out = [leaf_trace(truth, leaf, rng) for _ in range(k) for leaf in leaves]
    i = 0
    while len(out) < c.trace_count:
        out.append(random_walk(truth, c.depth + 1, c.seed * 1_000_003 + i))
        i += 1
    return out


@dataclass
class BenchRun:
    metrics: dict
    truth: HybridAutomaton
    spec: SpecModel
    abstraction: dict[int, str]
    traces: list[OmniscientTrace]
    tree: HybridAutomaton
    merged: HybridAutomaton


def run_benchmark(c: TreeBenchConfig, verify: bool = True, samples: int = 100, jobs: int = 1) -> dict:
    """Construct and merge one instance, timing the two phases separately."""
    return bench_run(c, verify, samples, jobs).metrics


def bench_run(c: TreeBenchConfig, verify: bool = True, samples: int = 100, jobs: int = 1) -> BenchRun:
    truth, spec, abstraction = gen_tree(c)
    traces = gen_adequate_traces(truth, spec, abstraction, c)
    observed = [observe(t) for t in traces]

    t0 = time.perf_counter()
    st = run_construction(observed, spec)
    t1 = time.perf_counter()
    merged = merge(st)
    t2 = time.perf_counter()

    metrics = {
        "config": asdict(c),
        "truth_modes": len(truth.flows),
        "traces": len(traces),
        "construct_s": t1 - t0,
        "merge_s": t2 - t1,
        "total_s": t2 - t0,
        "tree_modes": len(st.aut.flows),
        "tree_edges": len(st.aut.edges),
        "merged_modes": len(merged.flows),
        "merged_edges": len(merged.edges),
    }
    if verify:
        metrics["adequate"] = adequacy_check(truth, traces, spec, abstraction).ok
        metrics["replay_ok"] = all(accepts(merged, t) is not None for t in observed)
        ref = project(truth, traces)
        rep = conservative_check(merged, ref, samples, c.seed, max_steps=c.depth + 1, jobs=jobs)
        metrics["conservative_samples"] = samples
        metrics["conservative_ok"] = rep.ok
    return BenchRun(metrics, truth, spec, abstraction, traces, st.aut, merged)


def sweep(
    depths: Iterable[int],
    dims: Iterable[int] = (3,),
    kinds: Iterable[str] = ("layer",),
    seed: int = 0,
    verify: bool = False,
) -> list[dict]:
    rows = []
    for kind in kinds:
        for dim in dims:
            for d in depths:
                m = run_benchmark(TreeBenchConfig(d, dim, kind, 0, seed), verify=verify, samples=20)
                rows.append(m)
    return rows


def sweep_table(rows: list[dict]) -> str:
    cols = ["spec", "depth", "dim", "traces", "tree_modes", "merged_modes", "construct_s", "merge_s", "total_s"]
    lines = ["\t".join(cols)]
    for r in rows:
        c = r["config"]
        vals = [c["spec_kind"], c["depth"], c["dim"], r["traces"], r["tree_modes"], r["merged_modes"]]
        vals += [f"{r[k]:.4f}" for k in ("construct_s", "merge_s", "total_s")]
        lines.append("\t".join(str(v) for v in vals))
    return "\n".join(lines) + "\n"
