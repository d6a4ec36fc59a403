"""Similarity relations over constructed modes and the quotient they induce.

Two modes are action-similar when they carry the same abstract state and
share an incoming or an outgoing label; two outdegree-0 modes are
terminal-similar when they carry the same abstract state.  Their union is
closed transitively with union-find before the quotient is taken.

Relations are stored as buckets (cliques) rather than explicit pairs: a
bucket of k modes stands for all k(k-1)/2 pairs without materialising them.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Union

from .automaton import HybridAutomaton, InvariantViolation, Partition, canonicalize, quotient
from .construct import ConstructionState

Source = Union[ConstructionState, HybridAutomaton]


@dataclass(frozen=True)
class Bucket:
    reason: str  # "in:<label>", "out:<label>" or "terminal"
    alpha: str
    modes: tuple[int, ...]


class SimilarityRelation:
    """A symmetric relation given as a union of cliques."""

    def __init__(self, buckets: list[Bucket]):
        self.buckets = [b for b in buckets if len(b.modes) > 1]

    def pairs(self) -> Iterator[tuple[int, int]]:
        seen: set[tuple[int, int]] = set()
        for b in self.buckets:
            for p in combinations(b.modes, 2):
                if p not in seen:
                    seen.add(p)
                    yield p

    def __contains__(self, pair: tuple[int, int]) -> bool:
        a, b = sorted(pair)
        return any(a in bk.modes and b in bk.modes for bk in self.buckets)

    def __len__(self) -> int:
        return sum(1 for _ in self.pairs())

    def __or__(self, other: SimilarityRelation) -> SimilarityRelation:
        return SimilarityRelation(self.buckets + other.buckets)


def _unpack(src: Source) -> tuple[HybridAutomaton, dict[int, str]]:
    if isinstance(src, ConstructionState):
        return src.aut, dict(src.alpha)
    if src.alpha is None:
        raise ValueError("merging needs abstract states on every mode")
    return src, dict(src.alpha)


def action_similarity(src: Source) -> SimilarityRelation:
    a, alpha = _unpack(src)
    groups: dict[tuple[str, str, str], set[int]] = defaultdict(set)
    for s, lab, t in a.edges:
        groups[("out", lab, alpha[s])].add(s)
        groups[("in", lab, alpha[t])].add(t)
    buckets = [
        Bucket(f"{kind}:{lab}", v, tuple(sorted(ms)))
        for (kind, lab, v), ms in sorted(groups.items())
    ]
    return SimilarityRelation(buckets)


def terminal_similarity(src: Source) -> SimilarityRelation:
    a, alpha = _unpack(src)
    groups: dict[str, list[int]] = defaultdict(list)
    for m in a.modes:
        if not a.successors[m]:
            groups[alpha[m]].append(m)
    return SimilarityRelation([Bucket("terminal", v, tuple(ms)) for v, ms in sorted(groups.items())])


def merge_similarity(src: Source) -> SimilarityRelation:
    return action_similarity(src) | terminal_similarity(src)


def merge_partition(src: Source, explain: list | None = None) -> Partition:
    """Transitive closure of merge similarity.

    When ``explain`` is a list, one ``(m1, m2, reason)`` entry is appended
    for every pair that joined two previously separate classes.
    """
    a, alpha = _unpack(src)
    p = Partition(a.flows)
    for b in merge_similarity(src).buckets:
        first = b.modes[0]
        for m in b.modes[1:]:
            if alpha[m] != alpha[first]:
                raise InvariantViolation(f"bucket {b.reason} mixes abstract states")
            if p.union(first, m) and explain is not None:
                explain.append((first, m, b.reason))
    return p


def merge(src: Source, fixpoint: bool = False, explain: list | None = None) -> HybridAutomaton:
    """Quotient by merge similarity and renumber canonically.

    With ``fixpoint`` the similarity is recomputed on each quotient until no
    further classes collapse.
    """
    a, alpha = _unpack(src)
    cur = a.replace(alpha=alpha)
    while True:
        p = merge_partition(cur, explain)
        nxt = quotient(cur, p)
        done = len(nxt.flows) == len(cur.flows)
        cur = nxt
        if done or not fixpoint:
            break
    return canonicalize(cur)


def explain_text(entries: list) -> str:
    lines = []
    for m1, m2, reason in entries:
        if reason == "terminal":
            why = "terminal"
        else:
            kind, lab = reason.split(":", 1)
            why = f"shared-{kind}-label {lab}"
        lines.append(f"{m1}\t{m2}\t{why}")
    return "\n".join(lines) + ("\n" if lines else "")
