"""Observable and omniscient traces and their semantics on an automaton.

A trace starts at ``x0`` and is a sequence of steps.  The first step is a pure
delay in the initial mode; every later step first takes a labelled discrete
transition at the current point and then delays in the mode it entered.  The
omniscient variant additionally records which edge each labelled step took.

Delay validity is judged on the observed rate ``(x' - x) / delay`` against the
flow rectangle.  Over the reals this is the same as ``x' in x + delay*flow``;
in floating point it agrees exactly with the rates the construction stores.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .automaton import Edge, HybridAutomaton
from .geometry import contains_point, num_from_json, num_to_json, rate

DEFAULT_DELAY_RANGE = (1.0, 10.0)
DEFAULT_DELAY_QUANTUM = 1 / 16


class TraceError(ValueError):
    """A trace document or trace value is malformed."""


@dataclass(frozen=True, slots=True)
class Step:
    label: str | None
    delay: float
    x: tuple[float, ...]


@dataclass(frozen=True)
class ObservableTrace:
    x0: tuple[float, ...]
    steps: tuple[Step, ...]

    def __post_init__(self) -> None:
        _check_steps(self.x0, self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def dim(self) -> int:
        return len(self.x0)

    def points(self) -> list[tuple[float, ...]]:
        return [self.x0] + [s.x for s in self.steps]


@dataclass(frozen=True)
class OmniscientTrace:
    """A trace plus the edge taken by each labelled step.

    ``edges[i]`` belongs to ``steps[i + 1]``.
    """

    x0: tuple[float, ...]
    steps: tuple[Step, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        _check_steps(self.x0, self.steps)
        if len(self.edges) != max(len(self.steps) - 1, 0):
            raise TraceError("one edge annotation is required per labelled step")
        for i, e in enumerate(self.edges):
            if e[1] != self.steps[i + 1].label:
                raise TraceError(f"edge {e} does not carry the label of step {i + 1}")
            if i and self.edges[i - 1][2] != e[0]:
                raise TraceError(f"edges {self.edges[i - 1]} and {e} do not chain")

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def dim(self) -> int:
        return len(self.x0)

    def modes(self, init_mode: int) -> list[int]:
        """Mode occupied during each step's delay."""
        if not self.steps:
            return []
        return [init_mode] + [e[2] for e in self.edges]


Witness = OmniscientTrace


def _check_steps(x0: Sequence[float], steps: Sequence[Step]) -> None:
    n = len(x0)
    if n < 1:
        raise TraceError("traces need at least one dimension")
    for i, s in enumerate(steps):
        if len(s.x) != n:
            raise TraceError(f"step {i} has dimension {len(s.x)}, expected {n}")
        if (i == 0) != (s.label is None):
            raise TraceError("only the first step is unlabelled" if i else "the first step must be unlabelled")
        if not (s.delay >= 0) or math.isinf(s.delay):
            raise TraceError(f"step {i} has invalid delay {s.delay}")


def observe(t: OmniscientTrace) -> ObservableTrace:
    return ObservableTrace(t.x0, t.steps)


def annotate(t: ObservableTrace, edges: Sequence[Edge]) -> OmniscientTrace:
    return OmniscientTrace(t.x0, t.steps, tuple(edges))


def traverses(t: OmniscientTrace, m: int) -> int:
    """Count consecutive edge pairs that first enter and then leave ``m``."""
    return sum(1 for a, b in zip(t.edges, t.edges[1:]) if a[2] == m and b[0] == m)


class Validity(NamedTuple):
    ok: bool
    reason: str | None = None
    step: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def delay_ok(flow, x: Sequence[float], x2: Sequence[float], delay: float, eps: float = 0.0) -> bool:
    if delay <= 0:
        # a zero delay is only consistent with standing still
        return delay == 0 and all(abs(a - b) <= eps for a, b in zip(x, x2))
    for iv, r in zip(flow.dims, rate(x, x2, delay)):
        if not (iv.lo - eps <= r <= iv.hi + eps):
            return False
    return True


def validate_omniscient(a: HybridAutomaton, t: OmniscientTrace, eps: float = 0.0) -> Validity:
    if t.dim != a.dim:
        return Validity(False, "dimension", None)
    if any(abs(u - v) > eps for u, v in zip(t.x0, a.init_x)):
        return Validity(False, "bad-init", 0)
    if t.edges and t.edges[0][0] != a.init_mode:
        return Validity(False, "bad-chain", 1)
    mode = a.init_mode
    x = t.x0
    for i, s in enumerate(t.steps):
        if i > 0:
            e = t.edges[i - 1]
            if e[0] != mode:
                return Validity(False, "bad-chain", i)
            guard = a.edges.get(e)
            if guard is None:
                return Validity(False, "bad-chain", i)
            if not contains_point(guard, x, eps):
                return Validity(False, "guard", i)
            mode = e[2]
        if not delay_ok(a.flows[mode], x, s.x, s.delay, eps):
            return Validity(False, "flow", i)
        x = s.x
    return Validity(True)


def accepts(a: HybridAutomaton, t: ObservableTrace, eps: float = 0.0) -> Witness | None:
    """Search for a mode assignment under which ``t`` is a valid trace of ``a``.

    Depth-first over (step index, mode) with memoisation of pairs already
    known to fail.  Candidate edges are tried in (label, dst) order, so the
    returned witness is deterministic.
    """
    if t.dim != a.dim:
        return None
    if any(abs(u - v) > eps for u, v in zip(t.x0, a.init_x)):
        return None
    steps = t.steps
    if not steps:
        return Witness(t.x0, (), ())
    if not delay_ok(a.flows[a.init_mode], t.x0, steps[0].x, steps[0].delay, eps):
        return None
    n = len(steps)
    out = a.out_index
    failed: set[tuple[int, int]] = set()
    path: list[Edge] = []
    # stack holds (next step index, mode, iterator over candidate edges)
    stack = [(1, a.init_mode, None)]
    while stack:
        i, mode, it = stack[-1]
        if i == n:
            return Witness(t.x0, steps, tuple(path))
        if it is None:
            prev_x = steps[i - 1].x
            s = steps[i]
            cands = [
                dst
                for dst, guard in out.get((mode, s.label), ())
                if (i + 1, dst) not in failed
                and contains_point(guard, prev_x, eps)
                and delay_ok(a.flows[dst], prev_x, s.x, s.delay, eps)
            ]
            it = iter(cands)
            stack[-1] = (i, mode, it)
        dst = next(it, None)
        if dst is None:
            failed.add((i, mode))
            stack.pop()
            if path:
                path.pop()
            continue
        path.append((mode, steps[i].label, dst))
        stack.append((i + 1, dst, None))
    return None


def _quantize(v: float, quantum: float | None) -> float:
    if not quantum:
        return v
    return round(v / quantum) * quantum


def _realize(x: float, f: float, lo: float, hi: float, delay: float) -> float:
    """Float endpoint whose observed rate from ``x`` lies in [lo, hi]."""
    x2 = x + delay * f
    for _ in range(64):
        r = (x2 - x) / delay
        if r < lo:
            x2 = math.nextafter(x2, math.inf)
        elif r > hi:
            x2 = math.nextafter(x2, -math.inf)
        else:
            return x2
    raise ValueError(
        f"cannot realise rate in [{lo}, {hi}] from {x} with delay {delay} in floating point"
    )


def random_walk(
    a: HybridAutomaton,
    max_steps: int,
    seed: int,
    delay_range: tuple[float, float] = DEFAULT_DELAY_RANGE,
    delay_quantum: float | None = DEFAULT_DELAY_QUANTUM,
) -> OmniscientTrace:
    """Simulate ``a`` from its initial state for at most ``max_steps`` steps.

    Each delay draws a rate uniformly per dimension from the current flow and
    a delay uniformly from ``delay_range`` (snapped to ``delay_quantum``); an
    enabled outgoing edge is then chosen uniformly.  The walk ends early when
    no edge is enabled.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    dmin, dmax = delay_range
    if not (0 < dmin <= dmax):
        raise ValueError(f"invalid delay range {delay_range}")
    for m, r in a.flows.items():
        if not r.bounded:
            raise ValueError(f"flow of mode {m} is unbounded; cannot sample rates")
    rng = random.Random(seed)
    succ = a.successors

    def delay_in(mode: int, x: tuple[float, ...]) -> tuple[float, tuple[float, ...]]:
        d = min(max(_quantize(rng.uniform(dmin, dmax), delay_quantum), dmin), dmax)
        x2 = []
        for iv, v in zip(a.flows[mode].dims, x):
            f = iv.lo if iv.singular else rng.uniform(iv.lo, iv.hi)
            x2.append(_realize(v, f, iv.lo, iv.hi, d))
        return d, tuple(x2)

    mode = a.init_mode
    d, x = delay_in(mode, a.init_x)
    steps = [Step(None, d, x)]
    edges: list[Edge] = []
    while len(steps) < max_steps:
        enabled = [e for e in succ[mode] if contains_point(a.edges[e], x)]
        if not enabled:
            break
        e = enabled[rng.randrange(len(enabled))]
        mode = e[2]
        d, x2 = delay_in(mode, x)
        steps.append(Step(e[1], d, x2))
        edges.append(e)
        x = x2
    return OmniscientTrace(a.init_x, tuple(steps), tuple(edges))


# -- serialization -----------------------------------------------------------


def _vec(data, n: int | None, where: str) -> tuple[float, ...]:
    try:
        v = tuple(num_from_json(c) for c in data)
    except (TypeError, ValueError) as exc:
        raise TraceError(f"{where}: {exc}") from None
    if n is not None and len(v) != n:
        raise TraceError(f"{where}: expected {n} components, got {len(v)}")
    return v


def trace_from_json(data: dict, dim: int | None = None, positive_delays: bool = True):
    """Parse one trace.

    The result is an OmniscientTrace when every labelled step carries an
    ``edge`` (or, for traces without labelled steps, when the document sets
    ``"omniscient": true``), otherwise an ObservableTrace.
    """
    try:
        x0 = _vec(data["x0"], dim, "x0")
        steps = []
        edges = []
        annotated = []
        for i, s in enumerate(data["steps"]):
            label = s.get("label")
            delay = num_from_json(s["delay"])
            if positive_delays and not delay > 0:
                raise TraceError(f"step {i}: delay must be positive, got {delay}")
            steps.append(Step(None if label is None else str(label), delay, _vec(s["x"], len(x0), f"step {i}")))
            if i > 0:
                edge = s.get("edge")
                annotated.append(edge is not None)
                if edge is not None:
                    edges.append((int(edge["src"]), str(label), int(edge["dst"])))
        omniscient = all(annotated) if annotated else bool(data.get("omniscient"))
        if any(annotated) and not omniscient:
            raise TraceError("edge annotations must be given for every labelled step or none")
        if omniscient:
            return OmniscientTrace(x0, tuple(steps), tuple(edges))
        return ObservableTrace(x0, tuple(steps))
    except (KeyError, TypeError, AttributeError) as exc:
        raise TraceError(f"malformed trace: {exc!r}") from None
    except TraceError:
        raise
    except ValueError as exc:
        raise TraceError(str(exc)) from None


def trace_to_json(t) -> dict:
    out_steps = []
    for i, s in enumerate(t.steps):
        entry = {"label": s.label, "delay": num_to_json(s.delay), "x": [num_to_json(v) for v in s.x]}
        if isinstance(t, OmniscientTrace) and i > 0:
            e = t.edges[i - 1]
            entry["edge"] = {"src": e[0], "dst": e[2]}
        out_steps.append(entry)
    out = {"x0": [num_to_json(v) for v in t.x0], "steps": out_steps}
    if isinstance(t, OmniscientTrace):
        out["omniscient"] = True
    return out


def traces_to_json(traces: Sequence) -> dict:
    if not traces:
        raise TraceError("cannot infer the dimension of an empty trace set")
    return {"dim": traces[0].dim, "traces": [trace_to_json(t) for t in traces]}


def traces_from_json(data: dict) -> list:
    try:
        dim = int(data["dim"])
        raw = data["traces"]
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceError(f"malformed trace document: {exc!r}") from None
    return [trace_from_json(t, dim) for t in raw]


def load_traces(path) -> list:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TraceError(f"{path}: invalid JSON: {exc}") from None
    return traces_from_json(data)


def save_traces(traces: Iterable, path) -> None:
    with open(path, "w") as fh:
        json.dump(traces_to_json(list(traces)), fh, indent=1)
        fh.write("\n")


def from_arrow_rows(x0: Sequence[float], rows: Sequence[Sequence]) -> ObservableTrace:
    """Read rows ``(label, delay, x)`` written as ``x_prev --label,delay--> x``.

    In that notation the delay comes first and the label is the transition
    taken once ``x`` is reached, so each label moves one step later; the last
    row carries no label.
    """
    if not rows:
        return ObservableTrace(tuple(float(v) for v in x0), ())
    if rows[-1][0] is not None:
        raise TraceError("the last row must be a plain delay")
    labels = [None] + [r[0] for r in rows[:-1]]
    steps = tuple(
        Step(lab, float(delay), tuple(float(v) for v in x)) for lab, (_, delay, x) in zip(labels, rows)
    )
    return ObservableTrace(tuple(float(v) for v in x0), steps)


def as_observable(t) -> ObservableTrace:
    return observe(t) if isinstance(t, OmniscientTrace) else t
