import random

import pytest

from conservative_ha.automaton import HybridAutomaton, InvariantViolation, Partition
from conservative_ha.bench import TreeBenchConfig, gen_adequate_traces, gen_tree
from conservative_ha.construct import run_construction
from conservative_ha.geometry import full, zero
from conservative_ha.merge import (
    action_similarity,
    explain_text,
    merge,
    merge_partition,
    terminal_similarity,
)
from conservative_ha.traces import accepts, observe


def tagged(edges, alpha):
    modes = sorted(alpha)
    return HybridAutomaton(
        1, {m: zero(1) for m in modes}, {e: full(1) for e in edges}, modes[0], (0,), alpha=alpha
    )


def test_action_similarity_examples(aircraft_traces, aircraft_spec):
    st = run_construction(aircraft_traces, aircraft_spec)
    rel = action_similarity(st)
    adjust_targets = sorted(t for (_, lab, t) in st.aut.edges if lab == "adjust")
    assert (adjust_targets[0], adjust_targets[1]) in rel
    a = tagged([(0, "x", 1), (0, "x", 2)], {0: "p", 1: "q", 2: "r"})
    assert (1, 2) not in action_similarity(a)
    lone = tagged([(0, "x", 1), (0, "y", 2)], {0: "p", 1: "q", 2: "q"})
    assert len(action_similarity(lone)) == 0


def test_terminal_similarity_examples():
    a = tagged([(0, "x", 1), (0, "y", 2), (0, "z", 3), (3, "w", 4)], {0: "p", 1: "q", 2: "q", 3: "q", 4: "r"})
    rel = terminal_similarity(a)
    assert (1, 2) in rel
    assert (1, 3) not in rel
    assert (2, 4) not in rel


def test_partition_examples():
    a = tagged([(0, "x", 1), (0, "y", 2)], {0: "p", 1: "q", 2: "r"})
    assert len(merge_partition(a)) == 3
    chain = tagged([(0, "x", 1), (0, "x", 2), (2, "y", 3), (0, "k", 4), (4, "y", 5)],
                   {0: "p", 1: "q", 2: "q", 3: "q", 4: "q", 5: "q"})
    p = merge_partition(chain)
    # 1~2 by shared in-label x, 2~4 by shared out-label y, leaves 3 and 5 are terminal-similar
    assert p.find(1) == p.find(2) == p.find(4)
    assert p.find(3) == p.find(5)


def test_layer_classes_per_depth():
    c = TreeBenchConfig(depth=3, dim=2, spec_kind="layer", seed=4)
    truth, spec, abstraction = gen_tree(c)
    ts = gen_adequate_traces(truth, spec, abstraction, c)
    st = run_construction([observe(t) for t in ts], spec)
    assert len(merge_partition(st)) == c.depth + 1
    merged = merge(st)
    assert len(merged.flows) == 4 and len(merged.edges) == 3
    assert all(len(merged.successors[m]) <= 1 for m in merged.modes)


def test_identity_merge_is_canonical_tree():
    a = tagged([(0, "x", 1), (1, "y", 2)], {0: "p", 1: "q", 2: "r"})
    assert merge(a).edges.keys() == {(0, "x", 1), (1, "y", 2)}


def test_aircraft_landing_collapses(aircraft_traces, aircraft_spec):
    st = run_construction(aircraft_traces, aircraft_spec)
    merged = merge(st)
    landing = [m for m in merged.modes if merged.alpha[m] == "landing"]
    assert len(landing) == 1
    assert (landing[0], "adjust", landing[0]) in merged.edges


def test_partition_independent_of_bucket_order(aircraft_traces, aircraft_spec):
    st = run_construction(aircraft_traces, aircraft_spec)
    ref = merge_partition(st).classes()
    rel = action_similarity(st) | terminal_similarity(st)
    for seed in range(20):
        pairs = list(rel.pairs())
        random.Random(seed).shuffle(pairs)
        p = Partition(st.aut.flows)
        for x, y in pairs:
            p.union(x, y)
        assert p.classes() == ref


def test_classes_never_mix_alpha(aircraft_traces, aircraft_spec):
    st = run_construction(aircraft_traces, aircraft_spec)
    p = merge_partition(st)
    for rep, members in p.classes().items():
        assert len({st.alpha[m] for m in members}) == 1


def test_mixed_alpha_bucket_is_an_invariant_violation(monkeypatch):
    import sys

    from conservative_ha.merge import Bucket, SimilarityRelation

    mod = sys.modules["conservative_ha.merge"]
    a = tagged([(0, "x", 1), (0, "x", 2)], {0: "p", 1: "q", 2: "r"})
    monkeypatch.setattr(mod, "merge_similarity", lambda src: SimilarityRelation([Bucket("in:x", "q", (1, 2))]))
    with pytest.raises(InvariantViolation):
        merge_partition(a)


def test_explain_and_fixpoint(aircraft_traces, aircraft_spec):
    st = run_construction(aircraft_traces, aircraft_spec)
    log = []
    merged = merge(st, explain=log)
    assert len(log) == len(st.aut.flows) - len(merged.flows)
    text = explain_text(log)
    assert "shared-in-label adjust" in text
    assert merge(st, fixpoint=True) == merged


def test_merged_accepts_inputs(aircraft_traces, aircraft_spec):
    merged = merge(run_construction(aircraft_traces, aircraft_spec))
    assert all(accepts(merged, t) is not None for t in aircraft_traces)
