"""Fold a trace set into a tree-shaped hybrid automaton guided by a specification.

Construction starts from a single mode tagged with the specification's
initial phase.  Every labelled step of every trace then hangs a fresh mode
below the mode that trace currently occupies, so before merging the result
is one isolated path per trace.  Guards never come from the data: an edge
whose label fires a specification trigger gets that trigger's rectangle, all
others get the vacuous guard.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .automaton import Edge, HybridAutomaton
from .geometry import Rect, box_hull, full, rate
from .spec import SpecModel, monitor_fires
from .traces import ObservableTrace, as_observable


class ConstructionError(ValueError):
    """Inputs the construction cannot start from."""


def solve(x: Sequence[float], x2: Sequence[float], delay: float) -> Rect:
    """The singular flow that moves ``x`` to ``x2`` in time ``delay``."""
    if len(x) != len(x2):
        raise ConstructionError(f"dimension mismatch: {len(x)} vs {len(x2)}")
    if not delay > 0:
        raise ConstructionError(f"delay must be positive, got {delay}")
    return Rect.point(rate(x, x2, delay))


@dataclass(frozen=True)
class ConstructionState:
    aut: HybridAutomaton
    mode_map: Mapping[int, int]
    alpha: Mapping[int, str]
    k: int


def _observable(traces) -> list[ObservableTrace]:
    return [as_observable(t) for t in traces]


def init(traces: Sequence, s: SpecModel) -> ConstructionState:
    ts = _observable(traces)
    if not ts:
        raise ConstructionError("the trace set is empty")
    x0 = ts[0].x0
    for i, t in enumerate(ts):
        if t.x0 != x0:
            raise ConstructionError(f"trace {i} starts at {t.x0}, trace 0 at {x0}")
        if not t.steps:
            raise ConstructionError(f"trace {i} has no steps")
    if len(x0) != s.dim:
        raise ConstructionError(f"traces have dimension {len(x0)}, specification {s.dim}")
    flow = box_hull(solve(x0, t.steps[0].x, t.steps[0].delay) for t in ts)
    aut = HybridAutomaton(
        dim=s.dim,
        flows={0: flow},
        edges={},
        init_mode=0,
        init_x=x0,
        alpha={0: s.init},
    )
    return ConstructionState(aut=aut, mode_map={i: 0 for i in range(len(ts))}, alpha={0: s.init}, k=1)


def step(st: ConstructionState, traces: Sequence, s: SpecModel) -> ConstructionState:
    """Process the k-th labelled step of every trace that still has one."""
    ts = _observable(traces)
    k = st.k
    flows = dict(st.aut.flows)
    edges: dict[Edge, Rect] = dict(st.aut.edges)
    alpha = dict(st.alpha)
    mode_map = dict(st.mode_map)
    next_id = max(flows) + 1
    vacuous = full(s.dim)
    for i, t in enumerate(ts):
        if len(t.steps) <= k:
            continue
        x = t.steps[k - 1].x
        cur = t.steps[k]
        src = mode_map[i]
        m = next_id
        next_id += 1
        flows[m] = solve(x, cur.x, cur.delay)
        fired = monitor_fires(s, alpha[src], cur.label, x)
        if fired is None:
            alpha[m] = alpha[src]
            guard = vacuous
        else:
            alpha[m] = fired[2]
            guard = s.guards[fired]
        edges[(src, cur.label, m)] = guard
        mode_map[i] = m
    aut = HybridAutomaton(
        dim=st.aut.dim,
        flows=flows,
        edges=edges,
        init_mode=st.aut.init_mode,
        init_x=st.aut.init_x,
        alpha=alpha,
    )
    return ConstructionState(aut=aut, mode_map=mode_map, alpha=alpha, k=k + 1)


def run_construction(
    traces: Sequence,
    s: SpecModel,
    on_step: Callable[[ConstructionState], None] | None = None,
) -> ConstructionState:
    """Initialise and then step until every trace is exhausted.

    ``on_step`` sees the initial state and the state after every step.
    """
    ts = _observable(traces)
    st = init(ts, s)
    if on_step:
        on_step(st)
    longest = max(len(t.steps) for t in ts)
    while st.k < longest:
        st = step(st, ts, s)
        if on_step:
            on_step(st)
    return st
