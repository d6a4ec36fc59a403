"""Phase specifications: a small trigger language and the automaton it induces.

A specification file looks like::

    dim 3
    states takeoff travel landing
    init takeoff
    trigger takeoff -> travel on cruise when x2 >= 300
    trigger travel -> landing on descend when true

Each trigger reports a labelled change of the phase stream together with a
conjunction of single-variable bounds that must hold when it fires.  The
phases, the initial phase and the triggers make up a finite automaton plus a
guard table mapping each of its edges to a rectangle.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .geometry import INF, Interval, Rect, contains_point, full

SpecEdge = tuple[str, str, str]


class SpecSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class SpecError(ValueError):
    """A well-formed specification that violates a semantic rule."""


@dataclass(frozen=True)
class SpecModel:
    dim: int
    states: frozenset[str]
    init: str
    guards: Mapping[SpecEdge, Rect] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.init not in self.states:
            raise SpecError(f"initial state {self.init!r} is not declared")
        seen: dict[tuple[str, str], str] = {}
        for (s, lab, t), g in self.guards.items():
            if s not in self.states or t not in self.states:
                raise SpecError(f"trigger {s} -> {t} uses an undeclared state")
            if g.n != self.dim:
                raise SpecError(f"guard of {s} -> {t} has dimension {g.n}")
            if seen.setdefault((s, lab), t) != t:
                raise SpecError(f"state {s!r} has conflicting triggers on {lab!r}")
        index: dict[tuple[str, str], tuple[SpecEdge, Rect]] = {}
        for e, g in self.guards.items():
            index[(e[0], e[1])] = (e, g)
        object.__setattr__(self, "_index", index)

    @property
    def edges(self) -> list[SpecEdge]:
        return sorted(self.guards)

    def reachable(self) -> set[str]:
        seen = {self.init}
        todo = deque([self.init])
        while todo:
            s = todo.popleft()
            for src, _, t in self.guards:
                if src == s and t not in seen:
                    seen.add(t)
                    todo.append(t)
        return seen

    def pruned(self) -> SpecModel:
        keep = self.reachable()
        return SpecModel(
            dim=self.dim,
            states=frozenset(keep),
            init=self.init,
            guards={e: g for e, g in self.guards.items() if e[0] in keep and e[2] in keep},
        )


def monitor_fires(s: SpecModel, v: str, label: str, x: Sequence[float]) -> SpecEdge | None:
    """The trigger leaving ``v`` on ``label`` if its condition holds at ``x``."""
    hit = s._index.get((v, label))  # type: ignore[attr-defined]
    if hit is None:
        return None
    edge, guard = hit
    return edge if contains_point(guard, x) else None


def guard_lookup(s: SpecModel, e: SpecEdge, dim: int | None = None) -> Rect:
    n = s.dim if dim is None else dim
    if e[0] == e[2]:
        return full(n)
    g = s.guards.get(e)
    return full(n) if g is None else g


# -- parsing -----------------------------------------------------------------

_NAME = r"[A-Za-z_][A-Za-z0-9_.\-]*"
_NUMBER = r"[+-]?(?:inf|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
_TRIGGER = re.compile(
    rf"trigger\s+(?P<src>{_NAME})\s*->\s*(?P<dst>{_NAME})\s+on\s+(?P<label>{_NAME})\s+when\s+(?P<cond>.+)$"
)
_ATOM = re.compile(rf"\s*x(?P<dim>\d+)\s*(?P<op><=|>=|=)\s*(?P<num>{_NUMBER})\s*$")


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _parse_condition(cond: str, dim: int, lineno: int, col: int) -> Rect:
    bounds = [[-INF, INF] for _ in range(dim)]
    if cond.strip() == "true":
        return full(dim)
    offset = col
    for part in re.split(r"\band\b", cond):
        m = _ATOM.match(part)
        if m is None:
            raise SpecSyntaxError(f"cannot parse condition {part.strip()!r}", lineno, offset)
        d = int(m["dim"])
        if d >= dim:
            raise SpecSyntaxError(f"x{d} exceeds dimension {dim}", lineno, offset)
        v = float(m["num"])
        lo, hi = bounds[d]
        if m["op"] in (">=", "="):
            lo = max(lo, v)
        if m["op"] in ("<=", "="):
            hi = min(hi, v)
        if lo > hi:
            raise SpecSyntaxError(f"condition on x{d} is unsatisfiable", lineno, offset)
        bounds[d] = [lo, hi]
        offset += len(part) + 3
    return Rect(tuple(Interval(lo, hi) for lo, hi in bounds))


def parse_spec(text: str, dim: int | None = None) -> SpecModel:
    """Parse a specification and prune states unreachable from the initial one.

    ``dim`` overrides or cross-checks the ``dim`` declaration in the text.
    """
    declared_dim: int | None = None
    states: list[str] = []
    init: tuple[str, int] | None = None
    raw_triggers: list[tuple[int, int, re.Match]] = []

    for lineno, line in enumerate(text.splitlines(), start=1):
        body = _strip_comment(line).rstrip()
        if not body.strip():
            continue
        col = len(body) - len(body.lstrip()) + 1
        body = body.strip()
        keyword = body.split()[0]
        if keyword == "dim":
            parts = body.split()
            if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                raise SpecSyntaxError("expected 'dim <positive integer>'", lineno, col)
            if declared_dim is not None:
                raise SpecSyntaxError("duplicate dim declaration", lineno, col)
            declared_dim = int(parts[1])
        elif keyword == "states":
            names = body.split()[1:]
            if not names:
                raise SpecSyntaxError("expected at least one state name", lineno, col)
            for name in names:
                if not re.fullmatch(_NAME, name):
                    raise SpecSyntaxError(f"invalid state name {name!r}", lineno, col + body.find(name))
                if name in states:
                    raise SpecSyntaxError(f"state {name!r} declared twice", lineno, col + body.find(name))
                states.append(name)
        elif keyword == "init":
            parts = body.split()
            if len(parts) != 2:
                raise SpecSyntaxError("expected 'init <state>'", lineno, col)
            if init is not None:
                raise SpecSyntaxError("duplicate init declaration", lineno, col)
            init = (parts[1], lineno)
        elif keyword == "trigger":
            m = _TRIGGER.match(body)
            if m is None:
                raise SpecSyntaxError(
                    "expected 'trigger <src> -> <dst> on <label> when <condition>'", lineno, col
                )
            raw_triggers.append((lineno, col, m))
        else:
            raise SpecSyntaxError(f"unknown keyword {keyword!r}", lineno, col)

    if dim is None:
        if declared_dim is None:
            raise SpecSyntaxError("missing dim declaration", 1)
        dim = declared_dim
    elif declared_dim is not None and declared_dim != dim:
        raise SpecError(f"specification declares dim {declared_dim}, expected {dim}")
    if init is None:
        raise SpecSyntaxError("missing init declaration", 1)
    if init[0] not in states:
        raise SpecSyntaxError(f"initial state {init[0]!r} is not declared", init[1])

    guards: dict[SpecEdge, Rect] = {}
    targets: dict[tuple[str, str], str] = {}
    for lineno, col, m in raw_triggers:
        src, dst, label = m["src"], m["dst"], m["label"]
        for name in (src, dst):
            if name not in states:
                raise SpecSyntaxError(f"undeclared state {name!r}", lineno, col + m.start("src"))
        if src == dst:
            raise SpecSyntaxError("a trigger must change the phase", lineno, col)
        prev = targets.setdefault((src, label), dst)
        if prev != dst:
            raise SpecSyntaxError(
                f"nondeterministic triggers: {src} on {label} goes to both {prev} and {dst}", lineno, col
            )
        if (src, label, dst) in guards:
            raise SpecSyntaxError(f"duplicate trigger {src} -> {dst} on {label}", lineno, col)
        guards[(src, label, dst)] = _parse_condition(m["cond"], dim, lineno, col + m.start("cond"))

    return SpecModel(dim=dim, states=frozenset(states), init=init[0], guards=guards).pruned()


def load_spec(path, dim: int | None = None) -> SpecModel:
    with open(path) as fh:
        return parse_spec(fh.read(), dim)


def _fmt_num(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def condition_text(r: Rect) -> str:
    atoms = []
    for d, iv in enumerate(r.dims):
        if iv.lo == iv.hi:
            atoms.append(f"x{d} = {_fmt_num(iv.lo)}")
            continue
        if iv.lo != -INF:
            atoms.append(f"x{d} >= {_fmt_num(iv.lo)}")
        if iv.hi != INF:
            atoms.append(f"x{d} <= {_fmt_num(iv.hi)}")
    return " and ".join(atoms) if atoms else "true"


def dump_spec(s: SpecModel) -> str:
    """Render ``s`` in the input language; parsing the output yields ``s`` again."""
    lines = [
        f"dim {s.dim}",
        "states " + " ".join(sorted(s.states)),
        f"init {s.init}",
    ]
    for src, lab, dst in s.edges:
        lines.append(f"trigger {src} -> {dst} on {lab} when {condition_text(s.guards[(src, lab, dst)])}")
    return "\n".join(lines) + "\n"


def guard_table(s: SpecModel) -> str:
    rows = [f"{src} --{lab}--> {dst}\t{s.guards[(src, lab, dst)]!r}" for src, lab, dst in s.edges]
    return "\n".join(rows) + ("\n" if rows else "")
