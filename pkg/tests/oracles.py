"""Independent reference implementations used to derive expected values.

These deliberately avoid the library's algorithms: rates use exact rational
arithmetic, bisimilarity is the greatest fixpoint over explicit pairs and
membership enumerates every edge sequence without memoisation.
"""

from fractions import Fraction
from itertools import product


def exact_rate(x, x2, delay):
    d = Fraction(delay)
    return tuple((Fraction(b) - Fraction(a)) / d for a, b in zip(x, x2))


def bounds_of(vectors):
    vs = list(vectors)
    return [(min(v[i] for v in vs), max(v[i] for v in vs)) for i in range(len(vs[0]))]


def _inside(bounds, x):
    return all(lo <= v <= hi for (lo, hi), v in zip(bounds, x))


def brute_accepts(a, t):
    """Enumerate all edge sequences; real-number semantics via Fractions."""
    if tuple(t.x0) != tuple(a.init_x):
        return False
    steps = t.steps
    if not steps:
        return True

    def flow_ok(mode, x, x2, delay):
        r = exact_rate(x, x2, delay)
        return all(Fraction(iv.lo) <= v <= Fraction(iv.hi) for iv, v in zip(a.flows[mode].dims, r))

    def go(i, mode):
        if i == len(steps):
            return True
        x = steps[i - 1].x
        for (s, lab, d), g in a.edges.items():
            if s != mode or lab != steps[i].label:
                continue
            if not _inside(g.bounds(), x):
                continue
            if flow_ok(d, x, steps[i].x, steps[i].delay) and go(i + 1, d):
                return True
        return False

    return flow_ok(a.init_mode, t.x0, steps[0].x, steps[0].delay) and go(1, a.init_mode)


def greatest_bisimulation(a, b):
    shared = a.labels & b.labels
    rel = set(product(a.flows, b.flows))

    def succ(aut, m, lab):
        return [d for (s, l, d) in aut.edges if s == m and l == lab]

    changed = True
    while changed:
        changed = False
        for p, q in list(rel):
            ok = True
            for lab in shared:
                for p2 in succ(a, p, lab):
                    if not any((p2, q2) in rel for q2 in succ(b, q, lab)):
                        ok = False
                for q2 in succ(b, q, lab):
                    if not any((p2, q2) in rel for p2 in succ(a, p, lab)):
                        ok = False
            if not ok:
                rel.discard((p, q))
                changed = True
    return (a.init_mode, b.init_mode) in rel


def count_traversals(edge_lists, mode):
    n = 0
    for edges in edge_lists:
        for i in range(len(edges) - 1):
            if edges[i][2] == mode and edges[i + 1][0] == mode:
                n += 1
    return n
