"""Reference automata and checks for the construction's guarantees.

The projection of an automaton onto a set of omniscient traces keeps only
what the traces exercised and tightens flows and guards to the observed
extremes.  It is the yardstick for conservativeness: a construction is
conservative when every behaviour of the projection is also a behaviour of
the constructed automaton.  Inclusion is checked by sampling, which can
refute it but never prove it.
"""

from __future__ import annotations

from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .automaton import (
    Edge,
    HybridAutomaton,
    Partition,
    discretely_bisimilar,
    quotient,
    spec_as_automaton,
)
from .geometry import hull_of_points, intersect, rate, shrink, subset, zero
from .spec import SpecModel
from .traces import (
    DEFAULT_DELAY_RANGE,
    ObservableTrace,
    OmniscientTrace,
    Step,
    _realize,
    accepts,
    observe,
    random_walk,
    validate_omniscient,
)


class UnsupportedAutomaton(ValueError):
    pass


# -- projection --------------------------------------------------------------


def project(a: HybridAutomaton, ts: Sequence[OmniscientTrace]) -> HybridAutomaton:
    """Restrict ``a`` to the modes and edges the traces use.

    Flows become the per-dimension range of observed rates and guards the
    per-dimension range of the points at which each edge was taken.  An
    initial mode without any observed delay gets the zero flow.
    """
    rates: dict[int, list[tuple[float, ...]]] = defaultdict(list)
    points: dict[Edge, list[tuple[float, ...]]] = defaultdict(list)
    for i, t in enumerate(ts):
        v = validate_omniscient(a, t)
        if not v:
            raise ValueError(f"trace {i} is not a valid trace of the automaton ({v.reason} at step {v.step})")
        x = t.x0
        for j, (mode, s) in enumerate(zip(t.modes(a.init_mode), t.steps)):
            if j > 0:
                points[t.edges[j - 1]].append(x)
            rates[mode].append(rate(x, s.x, s.delay))
            x = s.x
    flows = {m: hull_of_points(rs) for m, rs in rates.items()}
    flows.setdefault(a.init_mode, zero(a.dim))
    edges = {e: hull_of_points(ps) for e, ps in points.items()}
    return HybridAutomaton(
        dim=a.dim,
        flows=flows,
        edges=edges,
        init_mode=a.init_mode,
        init_x=a.init_x,
        alpha=None if a.alpha is None else {m: a.alpha[m] for m in flows},
    )


# -- adequacy ----------------------------------------------------------------


@dataclass(frozen=True)
class ModeAdequacy:
    mode: int
    actions: int
    traversals: int
    visits: int
    threshold: int
    passed: bool
    # roots and leaves can never be traversed; for them the visit count stands in
    effective: bool


@dataclass(frozen=True)
class AdequacyReport:
    modes: dict[int, ModeAdequacy]
    guard_violations: list[str] = field(default_factory=list)
    coarser: bool | None = None

    @property
    def traversals_strict(self) -> bool:
        return all(r.passed for r in self.modes.values())

    @property
    def traversals_ok(self) -> bool:
        return all(r.effective for r in self.modes.values())

    @property
    def ok(self) -> bool:
        return self.coarser is not False and not self.guard_violations and self.traversals_ok

    def to_json(self) -> dict:
        return {
            "coarser": self.coarser,
            "guard_violations": list(self.guard_violations),
            "traversals_strict": self.traversals_strict,
            "traversals_ok": self.traversals_ok,
            "ok": self.ok,
            "modes": [
                {
                    "mode": r.mode,
                    "actions": r.actions,
                    "traversals": r.traversals,
                    "visits": r.visits,
                    "threshold": r.threshold,
                    "needed": r.threshold + 1,
                    "passed": r.passed,
                    "effective": r.effective,
                }
                for r in sorted(self.modes.values(), key=lambda r: r.mode)
            ],
        }


def action_count(a: HybridAutomaton, m: int) -> int:
    ins = {lab for _, lab, _ in a.predecessors[m]}
    outs = {lab for _, lab, _ in a.successors[m]}
    return len(ins) + len(outs)


def adequacy_check(
    a: HybridAutomaton,
    ts: Sequence[OmniscientTrace],
    s: SpecModel | None = None,
    abstraction: Mapping[int, str] | None = None,
) -> AdequacyReport:
    """Check the traversal bound per mode and, given a specification and an
    abstraction map, the guard and coarseness conditions."""
    trav = {m: 0 for m in a.flows}
    visits = {m: 0 for m in a.flows}
    for t in ts:
        for m in t.modes(a.init_mode):
            if m in visits:
                visits[m] += 1
        for e1, e2 in zip(t.edges, t.edges[1:]):
            if e1[2] == e2[0] and e1[2] in trav:
                trav[e1[2]] += 1
    modes = {}
    for m in a.modes:
        act = action_count(a, m)
        threshold = act * (act - 1) // 2
        passed = trav[m] > threshold
        boundary = not a.predecessors[m] or not a.successors[m]
        effective = passed or (boundary and visits[m] > threshold)
        modes[m] = ModeAdequacy(m, act, trav[m], visits[m], threshold, passed, effective)

    violations: list[str] = []
    coarser = None
    if s is not None and abstraction is not None:
        for m in a.flows:
            if m not in abstraction:
                raise ValueError(f"abstraction is missing mode {m}")
        for (m1, lab, m2), g in sorted(a.edges.items()):
            v1, v2 = abstraction[m1], abstraction[m2]
            if v1 == v2:
                continue
            sg = s.guards.get((v1, lab, v2))
            if sg is None:
                violations.append(f"edge {(m1, lab, m2)} maps to missing abstract edge {(v1, lab, v2)}")
            elif not subset(g, sg):
                violations.append(f"guard {g!r} of edge {(m1, lab, m2)} is not within {sg!r}")
        coarse = quotient(a.replace(alpha=dict(abstraction)), Partition.from_key(a.flows, abstraction))
        coarser = discretely_bisimilar(coarse, spec_as_automaton(s.states, s.edges, s.init, s.dim))
    return AdequacyReport(modes=modes, guard_violations=violations, coarser=coarser)


def connectivity_holds(
    built: HybridAutomaton,
    truth: HybridAutomaton,
    ts=None,
    abstraction: Mapping[int, str] | None = None,
) -> bool:
    """Every in/out label pair of a truth mode reappears on one built mode of
    the same abstract state."""
    return not connectivity_failures(built, truth, abstraction)


def connectivity_failures(
    built: HybridAutomaton, truth: HybridAutomaton, abstraction: Mapping[int, str] | None = None
) -> list[tuple[int, str, str]]:
    if abstraction is None:
        abstraction = truth.alpha
    tagged = abstraction is not None and built.alpha is not None
    have: set[tuple[str | None, str, str]] = set()
    for m in built.flows:
        tag = built.alpha[m] if tagged else None
        ins = {lab for _, lab, _ in built.predecessors[m]}
        outs = {lab for _, lab, _ in built.successors[m]}
        have.update((tag, i, o) for i in ins for o in outs)
    missing = []
    for mu in truth.modes:
        tag = abstraction[mu] if tagged else None
        ins = sorted({lab for _, lab, _ in truth.predecessors[mu]})
        outs = sorted({lab for _, lab, _ in truth.successors[mu]})
        for i in ins:
            for o in outs:
                if (tag, i, o) not in have:
                    missing.append((mu, i, o))
    return missing


# -- perfect trace sets --------------------------------------------------------


def perfect_trace_count(a: HybridAutomaton) -> int:
    return len(a.edges) + a.dim * (5 * len(a.flows) + sum(len(v) for v in a.successors.values()))


def _topo_order(a: HybridAutomaton) -> list[int]:
    indeg = {m: 0 for m in a.flows}
    for _, _, t in a.edges:
        indeg[t] += 1
    ready = sorted(m for m, d in indeg.items() if d == 0)
    order = []
    while ready:
        m = ready.pop(0)
        order.append(m)
        for _, _, t in a.successors[m]:
            indeg[t] -= 1
            if indeg[t] == 0:
                ready.append(t)
        ready.sort()
    return order


class _Planner:
    """Builds omniscient traces from explicit per-mode dwell choices."""

    def __init__(self, a: HybridAutomaton, delay_range: tuple[float, float]):
        self.a = a
        self.dmin, self.dmax = delay_range
        self.order = _topo_order(a)
        # first-found path from the initial mode, used when nothing is extremised
        self.default_path: dict[int, list[Edge]] = {a.init_mode: []}
        for m in self.order:
            if m not in self.default_path:
                continue
            for e in a.successors[m]:
                self.default_path.setdefault(e[2], self.default_path[m] + [e])
        self._best: dict[tuple[int, int], tuple[dict, dict]] = {}

    def corner(self, m: int, d: int, sense: int) -> tuple[float, float]:
        """(delay, rate) in mode m extremising the displacement along d."""
        iv = self.a.flows[m].dims[d]
        cands = [(dl, f) for dl in (self.dmin, self.dmax) for f in (iv.lo, iv.hi)]
        return max(cands, key=lambda c: (sense * c[0] * c[1], -c[0]))

    def extreme_paths(self, d: int, sense: int) -> tuple[dict, dict]:
        key = (d, sense)
        if key in self._best:
            return self._best[key]
        a = self.a
        best = {a.init_mode: a.init_x[d]}
        via: dict[int, Edge] = {}
        for m in self.order:
            if m not in best:
                continue
            dl, f = self.corner(m, d, sense)
            out = best[m] + dl * f
            for e in a.successors[m]:
                t = e[2]
                if t not in best or sense * out > sense * best[t]:
                    best[t] = out
                    via[t] = e
        self._best[key] = (best, via)
        return best, via

    def extreme_path(self, m: int, d: int, sense: int) -> list[Edge]:
        _, via = self.extreme_paths(d, sense)
        path = []
        while m in via:
            e = via[m]
            path.append(e)
            m = e[0]
        return path[::-1]

    def trace(self, path: list[Edge], choose, final) -> OmniscientTrace:
        """``choose(mode)`` gives the dwell for modes along the path, ``final``
        the dwell in the last mode."""
        a = self.a
        modes = [a.init_mode] + [e[2] for e in path]
        x = a.init_x
        steps = []
        for i, m in enumerate(modes):
            dl, rates = final if i == len(modes) - 1 else choose(m)
            x2 = tuple(
                _realize(v, f, iv.lo, iv.hi, dl) for v, f, iv in zip(x, rates, a.flows[m].dims)
            )
            steps.append(Step(None if i == 0 else path[i - 1][1], dl, x2))
            x = x2
        return OmniscientTrace(a.init_x, tuple(steps), tuple(path))

    def default_dwell(self, m: int) -> tuple[float, tuple[float, ...]]:
        return self.dmin, self.a.flows[m].lo

    def extreme_dwell(self, d: int, sense: int):
        def choose(m: int):
            dl, f = self.corner(m, d, sense)
            rates = list(self.a.flows[m].lo)
            rates[d] = f
            return dl, tuple(rates)

        return choose


def perfect_trace_set(
    a: HybridAutomaton, delay_range: tuple[float, float] = DEFAULT_DELAY_RANGE
) -> list[OmniscientTrace]:
    """A trace set whose projection has the same language as ``a`` for walks
    with delays in ``delay_range``.

    Per edge one covering trace; per mode and dimension the minimal and
    maximal rate, and per outgoing edge the minimal and maximal point at
    which it is taken (for a mode without outgoing edges: the minimal and
    maximal reached value).  Each (mode, dimension) group is padded with
    plain dwell traces to 5 + outdeg members so the total is
    |E| + n(5|M| + sum of outdegrees).
    """
    if not a.is_acyclic():
        raise UnsupportedAutomaton("perfect trace sets are only built for acyclic automata")
    if a.reachable() != set(a.flows):
        raise UnsupportedAutomaton("every mode must be reachable")
    for m, r in a.flows.items():
        if not r.bounded:
            raise UnsupportedAutomaton(f"flow of mode {m} is unbounded")
    dmin, dmax = delay_range
    if not 0 < dmin <= dmax:
        raise ValueError(f"invalid delay range {delay_range}")
    pl = _Planner(a, delay_range)
    out: list[OmniscientTrace] = []

    for e in sorted(a.edges):
        path = pl.default_path[e[0]] + [e]
        out.append(pl.trace(path, pl.default_dwell, pl.default_dwell(e[2])))

    for m in a.modes:
        succ = a.successors[m]
        quota = 5 + len(succ)
        needed = 2 + (2 * len(succ) if succ else 2)
        if needed > quota:
            raise UnsupportedAutomaton(
                f"mode {m} has {len(succ)} outgoing edges; the trace budget covers at most 3"
            )
        for d in range(a.dim):
            group = []
            iv = a.flows[m].dims[d]
            for f in (iv.lo, iv.hi):
                rates = list(a.flows[m].lo)
                rates[d] = f
                group.append(pl.trace(pl.default_path[m], pl.default_dwell, (dmin, tuple(rates))))
            for sense in (-1, 1):
                choose = pl.extreme_dwell(d, sense)
                path = pl.extreme_path(m, d, sense)
                if not succ:
                    group.append(pl.trace(path, choose, choose(m)))
                for e in succ:
                    group.append(pl.trace(path + [e], choose, pl.default_dwell(e[2])))
            while len(group) < quota:
                group.append(pl.trace(pl.default_path[m], pl.default_dwell, pl.default_dwell(m)))
            out.extend(group)

    for i, t in enumerate(out):
        v = validate_omniscient(a, t)
        if not v:
            raise UnsupportedAutomaton(
                f"planned trace {i} violates the automaton ({v.reason} at step {v.step}); "
                "guards narrower than the reachable region are not supported"
            )
    return out


# -- sampled inclusion ---------------------------------------------------------


@dataclass(frozen=True)
class ConservativeReport:
    samples: int
    seed: int
    counterexamples: list[tuple[int, ObservableTrace]]

    header = "sampled check: a counterexample refutes inclusion; none found proves nothing"

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def _walk_and_check(args) -> tuple[int, ObservableTrace | None]:
    built, reference, seed, index, max_steps, delay_range, eps = args
    w = observe(random_walk(reference, max_steps, seed + index, delay_range))
    return index, (None if accepts(built, w, eps) is not None else w)


def conservative_check(
    built: HybridAutomaton,
    reference: HybridAutomaton,
    samples: int,
    seed: int,
    max_steps: int = 64,
    delay_range: tuple[float, float] = DEFAULT_DELAY_RANGE,
    eps: float = 0.0,
    jobs: int = 1,
) -> ConservativeReport:
    """Replay ``samples`` random walks of ``reference`` (walk i uses seed + i)
    against ``built`` and collect the rejected ones."""
    work = [(built, reference, seed, i, max_steps, delay_range, eps) for i in range(samples)]
    if jobs > 1 and samples > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_walk_and_check, work, chunksize=max(1, samples // (4 * jobs))))
    else:
        results = [_walk_and_check(w) for w in work]
    bad = sorted((i, w) for i, w in results if w is not None)
    return ConservativeReport(samples=samples, seed=seed, counterexamples=bad)


def language_discrepancies(
    a: HybridAutomaton,
    b: HybridAutomaton,
    samples: int,
    seed: int,
    max_steps: int = 64,
    delay_range: tuple[float, float] = DEFAULT_DELAY_RANGE,
) -> list[tuple[str, int]]:
    """Walks of either automaton rejected by the other, as (direction, index)."""
    out = []
    for name, src, dst in (("a->b", a, b), ("b->a", b, a)):
        rep = conservative_check(dst, src, samples, seed, max_steps, delay_range)
        out.extend((name, i) for i, _ in rep.counterexamples)
    return out


def mutate_guard(
    built: HybridAutomaton,
    reference: HybridAutomaton,
    fraction: float = 0.1,
    samples: int = 200,
    seed: int = 0,
    max_steps: int = 64,
    delay_range: tuple[float, float] = DEFAULT_DELAY_RANGE,
) -> tuple[HybridAutomaton, Edge]:
    """Shrink the most used guard of ``built`` by ``fraction``.

    Walks of ``reference`` are replayed on ``built``; the edge taken most
    often (with a spread of take-off points) gets its guard clipped to the
    hull of those points and then shrunk.  Clipping matters because guards
    of constructed automata are usually unbounded, where shrinking alone
    changes nothing.  The shrunk guard excludes at least one observed point.
    """
    points: dict[Edge, list[tuple[float, ...]]] = defaultdict(list)
    for i in range(samples):
        w = accepts(built, observe(random_walk(reference, max_steps, seed + i, delay_range)))
        if w is None:
            continue
        for e, s in zip(w.edges, w.steps):
            points[e].append(s.x)
    best = None
    for e in sorted(points):
        clip = intersect(built.edges[e], hull_of_points(points[e]))
        if clip is None or not any(iv.width > 0 for iv in clip.dims):
            continue
        if best is None or len(points[e]) > best[0]:
            best = (len(points[e]), e, clip)
    if best is None:
        raise ValueError("no edge is taken at more than one point by the sampled walks")
    _, e, clip = best
    edges = dict(built.edges)
    edges[e] = shrink(clip, fraction)
    return built.replace(edges=edges, labels=built.labels), e


def membership(a: HybridAutomaton, traces: Sequence, eps: float = 0.0) -> list[OmniscientTrace | None]:
    return [accepts(a, t if isinstance(t, ObservableTrace) else observe(t), eps) for t in traces]
