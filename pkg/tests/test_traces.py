import json

import pytest
from hypothesis import given, settings, strategies as st

from conservative_ha.automaton import HybridAutomaton
from conservative_ha.bench import TreeBenchConfig, gen_tree
from conservative_ha.geometry import Rect, full
from conservative_ha.traces import (
    ObservableTrace,
    OmniscientTrace,
    Step,
    TraceError,
    accepts,
    from_arrow_rows,
    observe,
    random_walk,
    trace_from_json,
    trace_to_json,
    traces_from_json,
    traces_to_json,
    traverses,
    validate_omniscient,
)

from oracles import brute_accepts, count_traversals


def single_mode(flow=(1, 1)):
    return HybridAutomaton(1, {0: Rect.from_bounds([flow])}, {}, 0, (0,))


def test_step_shape_rules():
    with pytest.raises(TraceError):
        ObservableTrace((0,), (Step("a", 1, (1,)),))
    with pytest.raises(TraceError):
        ObservableTrace((0,), (Step(None, 1, (1,)), Step(None, 1, (2,))))
    with pytest.raises(TraceError):
        ObservableTrace((0,), (Step(None, -1, (1,)),))


def test_omniscient_edges_must_chain():
    steps = (Step(None, 1, (0,)), Step("a", 1, (0,)), Step("b", 1, (0,)))
    with pytest.raises(TraceError):
        OmniscientTrace((0,), steps, ((0, "a", 1), (2, "b", 3)))
    with pytest.raises(TraceError):
        OmniscientTrace((0,), steps, ((0, "a", 1),))


def test_validate_zero_step_trace():
    assert validate_omniscient(single_mode(), OmniscientTrace((0,), (), ()))


def test_validate_aircraft_traces(aircraft_truth, aircraft_annotated):
    for t in aircraft_annotated:
        assert validate_omniscient(aircraft_truth, t)


def test_validate_reports_flow_violation(aircraft_truth, aircraft_annotated):
    t = aircraft_annotated[2]
    steps = list(t.steps)
    s = steps[3]
    steps[3] = Step(s.label, s.delay, (s.x[0], s.x[1] + 1, s.x[2]))
    bad = OmniscientTrace(t.x0, tuple(steps), t.edges)
    v = validate_omniscient(aircraft_truth, bad)
    assert not v and v.reason == "flow" and v.step == 3


def test_validate_reports_guard_and_init(aircraft_truth, aircraft_annotated):
    t = aircraft_annotated[2]
    low = list(t.steps)
    low[0] = Step(None, 20, (1000, 0, 290))  # cruise taken below altitude 300
    low[1] = Step(low[1].label, low[1].delay, (2000, 0, 290))
    v = validate_omniscient(aircraft_truth, OmniscientTrace(t.x0, tuple(low), t.edges))
    assert v.reason == "guard"
    v = validate_omniscient(aircraft_truth, OmniscientTrace((1, 0, 0), t.steps, t.edges))
    assert v.reason == "bad-init"
    chain = ((1, "cruise", 1),) + t.edges[1:]
    assert validate_omniscient(aircraft_truth, OmniscientTrace(t.x0, t.steps, chain)).reason == "bad-chain"


def test_accepts_inputs_and_rejects_unknown_label(aircraft_truth, aircraft_traces):
    for t in aircraft_traces:
        w = accepts(aircraft_truth, t)
        assert w is not None and validate_omniscient(aircraft_truth, w)
    t = aircraft_traces[2]
    steps = list(t.steps)
    steps[2] = Step("barrelRoll", steps[2].delay, steps[2].x)
    assert accepts(aircraft_truth, ObservableTrace(t.x0, tuple(steps))) is None


def test_observe(aircraft_annotated, aircraft_traces):
    assert observe(OmniscientTrace((0,), (), ())) == ObservableTrace((0,), ())
    assert [observe(t) for t in aircraft_annotated] == aircraft_traces


def test_arrow_rows_loader(data, aircraft_traces):
    raw = json.loads((data / "aircraft_rows.json").read_text())
    rebuilt = [from_arrow_rows(raw["x0"], rows) for rows in raw["traces"]]
    assert rebuilt == aircraft_traces
    t = aircraft_traces[2]
    assert t.steps[0] == Step(None, 20.0, (1000.0, 0.0, 300.0))
    assert t.steps[1] == Step("cruise", 5.0, (2000.0, 0.0, 300.0))
    assert [len(t) for t in aircraft_traces] == [9, 9, 9]


def test_traverses_examples(aircraft_annotated):
    steps = (Step(None, 1, (0,)), Step("a", 1, (0,)), Step("b", 1, (0,)))
    t = OmniscientTrace((0,), steps, ((0, "a", 1), (1, "b", 2)))
    assert traverses(t, 1) == 1
    assert traverses(t, 2) == 0
    expected = count_traversals([aircraft_annotated[2].edges], 4)
    assert expected == 6
    assert traverses(aircraft_annotated[2], 4) == expected


def test_random_walk_terminal_mode():
    w = random_walk(single_mode(), 10, seed=3)
    assert len(w) == 1 and w.edges == ()


def test_random_walk_determinism_and_validity():
    tree, _, _ = gen_tree(TreeBenchConfig(depth=4, dim=2, spec_kind="layer", seed=5))
    a = random_walk(tree, 10, seed=11)
    assert a == random_walk(tree, 10, seed=11)
    for seed in range(1000):
        w = random_walk(tree, 6, seed)
        assert len(w) <= 6
        assert validate_omniscient(tree, w)


def test_random_walk_rejects_unbounded_flow():
    a = HybridAutomaton(1, {0: full(1)}, {}, 0, (0,))
    with pytest.raises(ValueError):
        random_walk(a, 3, 0)
    with pytest.raises(ValueError):
        random_walk(single_mode(), 0, 0)


def test_random_walk_with_interval_flows(aircraft_truth):
    for seed in range(200):
        w = random_walk(aircraft_truth, 12, seed)
        assert validate_omniscient(aircraft_truth, w)
        assert accepts(aircraft_truth, observe(w)) is not None


def test_json_round_trip(aircraft_annotated, aircraft_traces):
    doc = traces_to_json(aircraft_annotated)
    assert traces_from_json(json.loads(json.dumps(doc))) == aircraft_annotated
    assert traces_from_json(traces_to_json(aircraft_traces)) == aircraft_traces
    zero_step = OmniscientTrace((0,), (Step(None, 1, (1,)),), ())
    assert trace_from_json(trace_to_json(zero_step)) == zero_step


def test_json_errors():
    with pytest.raises(TraceError):
        trace_from_json({"x0": [0], "steps": [{"label": None, "delay": 0, "x": [0]}]})
    with pytest.raises(TraceError):
        trace_from_json({"x0": [0], "steps": [{"label": None, "delay": 1}]})
    partial = {
        "x0": [0],
        "steps": [
            {"label": None, "delay": 1, "x": [0]},
            {"label": "a", "delay": 1, "x": [0], "edge": {"src": 0, "dst": 1}},
            {"label": "b", "delay": 1, "x": [0]},
        ],
    }
    with pytest.raises(TraceError):
        trace_from_json(partial)
    with pytest.raises(TraceError):
        traces_from_json({"dim": 2, "traces": [{"x0": [0], "steps": []}]})


@st.composite
def tree_walks(draw):
    c = TreeBenchConfig(depth=draw(st.integers(1, 3)), dim=draw(st.integers(1, 2)),
                        spec_kind=draw(st.sampled_from(["layer", "id"])), seed=draw(st.integers(0, 50)))
    tree, _, _ = gen_tree(c)
    return tree, random_walk(tree, 6, draw(st.integers(0, 10_000)))


@settings(max_examples=60, deadline=None)
@given(tree_walks())
def test_witness_exists_for_every_valid_trace(pair):
    tree, w = pair
    assert validate_omniscient(tree, w)
    found = accepts(tree, observe(w))
    assert found is not None and validate_omniscient(tree, found)
    assert brute_accepts(tree, observe(w))


@settings(max_examples=60, deadline=None)
@given(tree_walks(), st.integers(0, 5), st.floats(0.5, 3))
def test_accepts_agrees_with_enumeration_on_perturbed_walks(pair, idx, bump):
    tree, w = pair
    steps = list(w.steps)
    i = idx % len(steps)
    s = steps[i]
    steps[i] = Step(s.label, s.delay, (s.x[0] + bump,) + s.x[1:])
    t = ObservableTrace(w.x0, tuple(steps))
    assert (accepts(tree, t) is not None) == brute_accepts(tree, t)
