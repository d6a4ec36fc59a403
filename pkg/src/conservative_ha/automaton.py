"""Multi-rectangular hybrid automata.

An automaton is a plain value: modes are dense integers, each mode has a flow
rectangle, and each labelled edge ``(src, label, dst)`` carries a guard
rectangle.  Mode-level abstract-state tags (``alpha``) ride along optionally
so that merged results can report which specification phase a mode refines.
"""

from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Mapping

from .geometry import (
    Rect,
    box_hull,
    full,
    num_from_json,
    num_to_json,
    rect_from_json,
    rect_to_json,
    zero,
)

Edge = tuple[int, str, int]


class AutomatonError(ValueError):
    """Malformed automaton or an operation applied to an unknown mode."""


class InvariantViolation(RuntimeError):
    """An internal invariant of a construction or merge does not hold."""


@dataclass(frozen=True)
class HybridAutomaton:
    dim: int
    flows: Mapping[int, Rect]
    edges: Mapping[Edge, Rect]
    init_mode: int
    init_x: tuple[float, ...]
    labels: frozenset[str] = None  # type: ignore[assignment]
    alpha: Mapping[int, str] | None = None

    def __post_init__(self) -> None:
        if self.labels is None:
            object.__setattr__(self, "labels", frozenset(e[1] for e in self.edges))
        object.__setattr__(self, "init_x", tuple(float(v) for v in self.init_x))
        self._validate()

    def _validate(self) -> None:
        if self.dim < 1:
            raise AutomatonError("dimension must be at least 1")
        if self.init_mode not in self.flows:
            raise AutomatonError(f"initial mode {self.init_mode} is not a mode")
        if len(self.init_x) != self.dim:
            raise AutomatonError("initial state has the wrong dimension")
        for m, r in self.flows.items():
            if r.n != self.dim:
                raise AutomatonError(f"flow of mode {m} has dimension {r.n}")
        for (s, lab, t), g in self.edges.items():
            if s not in self.flows or t not in self.flows:
                raise AutomatonError(f"edge {(s, lab, t)} references an unknown mode")
            if lab not in self.labels:
                raise AutomatonError(f"edge label {lab!r} missing from the label set")
            if g.n != self.dim:
                raise AutomatonError(f"guard of {(s, lab, t)} has dimension {g.n}")
        if self.alpha is not None:
            missing = set(self.flows) - set(self.alpha)
            if missing:
                raise AutomatonError(f"abstract state missing for modes {sorted(missing)}")

    @property
    def modes(self) -> list[int]:
        return sorted(self.flows)

    @cached_property
    def out_index(self) -> dict[tuple[int, str], list[tuple[int, Rect]]]:
        """(mode, label) -> [(dst, guard)] sorted by dst."""
        idx: dict[tuple[int, str], list[tuple[int, Rect]]] = defaultdict(list)
        for (s, lab, t), g in self.edges.items():
            idx[(s, lab)].append((t, g))
        for v in idx.values():
            v.sort(key=lambda p: p[0])
        return dict(idx)

    @cached_property
    def successors(self) -> dict[int, list[Edge]]:
        """mode -> outgoing edges sorted by (label, dst)."""
        succ: dict[int, list[Edge]] = {m: [] for m in self.flows}
        for e in self.edges:
            succ[e[0]].append(e)
        for v in succ.values():
            v.sort(key=lambda e: (e[1], e[2]))
        return succ

    @cached_property
    def predecessors(self) -> dict[int, list[Edge]]:
        pred: dict[int, list[Edge]] = {m: [] for m in self.flows}
        for e in self.edges:
            pred[e[2]].append(e)
        for v in pred.values():
            v.sort(key=lambda e: (e[1], e[0]))
        return pred

    def replace(self, **changes) -> HybridAutomaton:
        kw = dict(
            dim=self.dim,
            flows=self.flows,
            edges=self.edges,
            init_mode=self.init_mode,
            init_x=self.init_x,
            labels=self.labels,
            alpha=self.alpha,
        )
        kw.update(changes)
        if "edges" in changes and "labels" not in changes:
            kw["labels"] = None
        return HybridAutomaton(**kw)

    def reachable(self) -> set[int]:
        seen = {self.init_mode}
        todo = [self.init_mode]
        while todo:
            m = todo.pop()
            for _, _, t in self.successors[m]:
                if t not in seen:
                    seen.add(t)
                    todo.append(t)
        return seen

    def is_acyclic(self) -> bool:
        indeg = {m: 0 for m in self.flows}
        for _, _, t in self.edges:
            indeg[t] += 1
        queue = [m for m, d in indeg.items() if d == 0]
        seen = 0
        while queue:
            m = queue.pop()
            seen += 1
            for _, _, t in self.successors[m]:
                indeg[t] -= 1
                if indeg[t] == 0:
                    queue.append(t)
        return seen == len(self.flows)


def degrees(a: HybridAutomaton, m: int) -> tuple[int, int]:
    if m not in a.flows:
        raise AutomatonError(f"unknown mode {m}")
    return len(a.predecessors[m]), len(a.successors[m])


def action_degree(a: HybridAutomaton, m: int) -> int:
    """Number of distinct incoming labels plus number of distinct outgoing labels."""
    if m not in a.flows:
        raise AutomatonError(f"unknown mode {m}")
    ins = {lab for _, lab, _ in a.predecessors[m]}
    outs = {lab for _, lab, _ in a.successors[m]}
    return len(ins) + len(outs)


class Partition:
    """Union-find over mode ids whose representative is the class minimum."""

    def __init__(self, elements: Iterable[int]):
        self._parent = {m: m for m in elements}

    def __contains__(self, m: int) -> bool:
        return m in self._parent

    def find(self, m: int) -> int:
        parent = self._parent
        root = m
        while parent[root] != root:
            root = parent[root]
        while parent[m] != root:
            parent[m], m = root, parent[m]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self._parent[rb] = ra
        return True

    def classes(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = defaultdict(list)
        for m in sorted(self._parent):
            out[self.find(m)].append(m)
        return dict(out)

    def __len__(self) -> int:
        return len({self.find(m) for m in self._parent})

    def as_mapping(self) -> dict[int, int]:
        return {m: self.find(m) for m in self._parent}

    @classmethod
    def from_key(cls, elements: Iterable[int], key: Mapping[int, Hashable]) -> Partition:
        p = cls(elements)
        first: dict[Hashable, int] = {}
        for m in sorted(p._parent):
            k = key[m]
            if k in first:
                p.union(first[k], m)
            else:
                first[k] = m
        return p


def quotient(a: HybridAutomaton, p: Partition) -> HybridAutomaton:
    """Merge every class of ``p`` into its representative.

    Flows of a class and guards of edges that collapse onto the same
    ``(class, label, class)`` triple are combined with ``box_hull``.
    """
    for m in a.flows:
        if m not in p:
            raise AutomatonError(f"mode {m} not covered by the partition")
    find = p.find
    members: dict[int, list[Rect]] = defaultdict(list)
    for m, r in a.flows.items():
        members[find(m)].append(r)
    flows = {rep: box_hull(rs) for rep, rs in members.items()}

    guards: dict[Edge, list[Rect]] = defaultdict(list)
    for (s, lab, t), g in a.edges.items():
        guards[(find(s), lab, find(t))].append(g)
    edges = {e: box_hull(gs) for e, gs in guards.items()}

    alpha = None
    if a.alpha is not None:
        alpha = {}
        for m, v in a.alpha.items():
            rep = find(m)
            prev = alpha.setdefault(rep, v)
            if prev != v:
                raise InvariantViolation(
                    f"class of mode {rep} mixes abstract states {prev!r} and {v!r}"
                )
    return HybridAutomaton(
        dim=a.dim,
        flows=flows,
        edges=edges,
        init_mode=find(a.init_mode),
        init_x=a.init_x,
        alpha=alpha,
    )


def discretely_bisimilar(a: HybridAutomaton, b: HybridAutomaton) -> bool:
    """Decide discrete bisimilarity of the initial modes over the shared labels.

    Naive partition refinement on the disjoint union: blocks are split by
    the set of (label, successor block) pairs until nothing changes.
    """
    shared = a.labels & b.labels
    nodes: list[tuple[int, int]] = [(0, m) for m in a.flows] + [(1, m) for m in b.flows]
    succ: dict[tuple[int, int], list[tuple[str, tuple[int, int]]]] = {n: [] for n in nodes}
    for side, aut in ((0, a), (1, b)):
        for s, lab, t in aut.edges:
            if lab in shared:
                succ[(side, s)].append((lab, (side, t)))

    block = {n: 0 for n in nodes}
    nblocks = 1
    while True:
        sigs = {n: (block[n], frozenset((lab, block[t]) for lab, t in succ[n])) for n in nodes}
        ids: dict = {}
        for n in nodes:
            ids.setdefault(sigs[n], len(ids))
        block = {n: ids[sigs[n]] for n in nodes}
        if len(ids) == nblocks:
            break
        nblocks = len(ids)
    return block[(0, a.init_mode)] == block[(1, b.init_mode)]


def _rect_key(r: Rect) -> tuple:
    return tuple((iv.lo, iv.hi) for iv in r.dims)


def _alpha_key(a: HybridAutomaton, m: int) -> tuple:
    if a.alpha is None:
        return (0, "")
    return (1, str(a.alpha[m]))


def _structural_colors(a: HybridAutomaton) -> dict[int, int]:
    """Colour refinement over outgoing structure; colours never depend on ids."""
    base = {m: (_rect_key(a.flows[m]), _alpha_key(a, m)) for m in a.flows}
    order = sorted(set(base.values()))
    rank = {k: i for i, k in enumerate(order)}
    color = {m: rank[base[m]] for m in a.flows}
    ncolors = len(order)
    while True:
        sig = {}
        for m in a.flows:
            outs = sorted((lab, color[t], _rect_key(a.edges[(m, lab, t)])) for _, lab, t in a.successors[m])
            sig[m] = (color[m], tuple(outs))
        order = sorted(set(sig.values()))
        rank = {k: i for i, k in enumerate(order)}
        color = {m: rank[sig[m]] for m in a.flows}
        if len(order) == ncolors:
            return color
        ncolors = len(order)


def canonicalize(a: HybridAutomaton) -> HybridAutomaton:
    """Renumber modes breadth-first from the initial mode.

    Ties between successors are broken by label, structural colour and guard,
    so isomorphic inputs built in different orders come out identical.
    Unreachable modes are numbered last, tree by tree from their roots.
    """
    color = _structural_colors(a)
    new_id: dict[int, int] = {}

    def visit(root: int) -> None:
        new_id[root] = len(new_id)
        queue = deque([root])
        while queue:
            m = queue.popleft()
            outs = sorted(
                a.successors[m],
                key=lambda e: (e[1], color[e[2]], _rect_key(a.edges[e]), e[2]),
            )
            for _, _, t in outs:
                if t not in new_id:
                    new_id[t] = len(new_id)
                    queue.append(t)

    visit(a.init_mode)
    # unreachable parts: roots first, in colour order, each numbered breadth-first
    while len(new_id) < len(a.flows):
        rest = [m for m in a.flows if m not in new_id]
        roots = [m for m in rest if all(s in new_id for s, _, _ in a.predecessors[m])]
        visit(min(roots or rest, key=lambda m: (color[m], m)))

    flows = {new_id[m]: r for m, r in sorted(a.flows.items(), key=lambda kv: new_id[kv[0]])}
    edges = {
        (new_id[s], lab, new_id[t]): g
        for (s, lab, t), g in sorted(a.edges.items(), key=lambda kv: (new_id[kv[0][0]], kv[0][1], new_id[kv[0][2]]))
    }
    alpha = None if a.alpha is None else {new_id[m]: v for m, v in a.alpha.items()}
    return HybridAutomaton(
        dim=a.dim,
        flows=flows,
        edges=edges,
        init_mode=0,
        init_x=a.init_x,
        labels=a.labels,
        alpha=alpha,
    )


def spec_as_automaton(states: Iterable[str], edges: Iterable[tuple[str, str, str]], init: str, dim: int) -> HybridAutomaton:
    """Discrete skeleton of a specification: zero flows and vacuous guards."""
    names = sorted(states)
    idx = {s: i for i, s in enumerate(names)}
    return HybridAutomaton(
        dim=dim,
        flows={i: zero(dim) for i in idx.values()},
        edges={(idx[s], lab, idx[t]): full(dim) for s, lab, t in edges},
        init_mode=idx[init],
        init_x=(0.0,) * dim,
        alpha={i: s for s, i in idx.items()},
    )


# -- serialization -----------------------------------------------------------


def to_json(a: HybridAutomaton) -> dict:
    modes = []
    for m in a.modes:
        entry = {"id": m, "flow": rect_to_json(a.flows[m])}
        if a.alpha is not None:
            entry["abstract"] = a.alpha[m]
        modes.append(entry)
    edges = [
        {"src": s, "label": lab, "dst": t, "guard": rect_to_json(g)}
        for (s, lab, t), g in sorted(a.edges.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2]))
    ]
    out = {
        "dim": a.dim,
        "modes": modes,
        "edges": edges,
        "init": {"mode": a.init_mode, "x": [num_to_json(v) for v in a.init_x]},
    }
    extra = sorted(a.labels - {lab for _, lab, _ in a.edges})
    if extra:
        out["labels"] = sorted(a.labels)
    return out


def from_json(data: dict) -> HybridAutomaton:
    try:
        dim = int(data["dim"])
        flows = {}
        alpha: dict[int, str] = {}
        for entry in data["modes"]:
            m = int(entry["id"])
            if m in flows:
                raise AutomatonError(f"duplicate mode id {m}")
            flows[m] = rect_from_json(entry["flow"])
            if "abstract" in entry:
                alpha[m] = str(entry["abstract"])
        edges = {}
        for entry in data["edges"]:
            e = (int(entry["src"]), str(entry["label"]), int(entry["dst"]))
            guard = rect_from_json(entry["guard"]) if "guard" in entry else full(dim)
            edges[e] = guard
        init = data["init"]
        labels = frozenset(data["labels"]) if "labels" in data else None
        return HybridAutomaton(
            dim=dim,
            flows=flows,
            edges=edges,
            init_mode=int(init["mode"]),
            init_x=tuple(num_from_json(v) for v in init["x"]),
            labels=labels,
            alpha=alpha or None,
        )
    except (KeyError, TypeError) as exc:
        raise AutomatonError(f"malformed automaton document: {exc!r}") from None


def dumps(a: HybridAutomaton) -> str:
    return json.dumps(to_json(a), indent=1)


def loads(text: str) -> HybridAutomaton:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AutomatonError(f"invalid JSON: {exc}") from None
    return from_json(data)


def load(path) -> HybridAutomaton:
    with open(path) as fh:
        return loads(fh.read())


def save(a: HybridAutomaton, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(a))
        fh.write("\n")


_PALETTE = [
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462",
    "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f",
]


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def to_dot(a: HybridAutomaton, name: str = "H") -> str:
    lines = [f"digraph {_dot_quote(name)} {{", "  rankdir=LR;", "  node [shape=box];"]
    colors: dict[str, str] = {}
    if a.alpha is not None:
        for i, v in enumerate(sorted(set(a.alpha.values()))):
            colors[v] = _PALETTE[i % len(_PALETTE)]
    lines.append("  __init [shape=point];")
    for m in a.modes:
        attrs = [f"label={_dot_quote(f'm{m}' + chr(10) + f' flow={a.flows[m]!r}')}"]
        if a.alpha is not None:
            attrs.append(f"style=filled fillcolor={_dot_quote(colors[a.alpha[m]])}")
            attrs.append(f"tooltip={_dot_quote(a.alpha[m])}")
        lines.append(f"  m{m} [{' '.join(attrs)}];")
    lines.append(f"  __init -> m{a.init_mode};")
    for (s, lab, t), g in sorted(a.edges.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        text = f"{lab}\n g={g!r}"
        lines.append(f"  m{s} -> m{t} [label={_dot_quote(text)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
