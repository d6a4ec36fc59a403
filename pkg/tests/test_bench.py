import pytest

from conservative_ha.analysis import adequacy_check
from conservative_ha.bench import (
    MAX_DEPTH,
    TreeBenchConfig,
    bench_run,
    depth_of,
    gen_adequate_traces,
    gen_tree,
    run_benchmark,
    sweep,
    sweep_table,
    traces_per_leaf,
)
from conservative_ha.traces import validate_omniscient


def test_depth_of_heap_numbering():
    assert [depth_of(m) for m in range(8)] == [0, 1, 1, 2, 2, 2, 2, 3]


@pytest.mark.parametrize("depth, modes", [(1, 3), (3, 15), (10, 2047)])
def test_tree_size(depth, modes):
    truth, spec, abstraction = gen_tree(TreeBenchConfig(depth))
    assert len(truth.flows) == modes and len(truth.edges) == modes - 1
    assert truth.is_acyclic() and truth.alpha == abstraction


def test_spec_styles():
    _, layer, _ = gen_tree(TreeBenchConfig(3, spec_kind="layer"))
    _, ids, _ = gen_tree(TreeBenchConfig(3, spec_kind="id"))
    assert len(layer.states) == 4 and len(layer.guards) == 3
    assert len(ids.states) == 15 and len(ids.guards) == 14


def test_traces_per_leaf():
    assert traces_per_leaf(gen_tree(TreeBenchConfig(4, spec_kind="layer"))[0]) == 1
    assert traces_per_leaf(gen_tree(TreeBenchConfig(4, spec_kind="id"))[0]) == 2


@pytest.mark.parametrize("kind", ["layer", "id"])
@pytest.mark.parametrize("depth", [1, 2, 5])
def test_generated_traces_are_adequate_and_valid(kind, depth):
    c = TreeBenchConfig(depth, 2, kind, seed=depth)
    truth, spec, abstraction = gen_tree(c)
    ts = gen_adequate_traces(truth, spec, abstraction, c)
    assert all(validate_omniscient(truth, t) for t in ts)
    assert adequacy_check(truth, ts, spec, abstraction).ok


def test_padding_reaches_trace_count():
    c = TreeBenchConfig(2, trace_count=30, seed=3)
    ts = gen_adequate_traces(*gen_tree(c), c)
    assert len(ts) == 30


def test_determinism():
    c = TreeBenchConfig(4, 2, "id", 20, seed=9)
    a, b = bench_run(c, samples=10), bench_run(c, samples=10)
    assert a.truth == b.truth and a.traces == b.traces and a.merged == b.merged
    assert gen_tree(TreeBenchConfig(4, seed=1))[0] != gen_tree(TreeBenchConfig(4, seed=2))[0]


def test_run_metrics():
    m = run_benchmark(TreeBenchConfig(3, seed=2), samples=20)
    assert m["truth_modes"] == 15 and m["merged_modes"] == 4
    assert m["tree_modes"] == 1 + 3 * m["traces"]
    assert m["adequate"] and m["replay_ok"] and m["conservative_ok"]
    assert m["total_s"] >= m["construct_s"]


@pytest.mark.parametrize("kw", [
    {"depth": 0}, {"depth": MAX_DEPTH + 1}, {"depth": 2, "dim": 0},
    {"depth": 2, "spec_kind": "flat"}, {"depth": 2, "trace_count": -1},
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        TreeBenchConfig(**kw)


def test_sweep_table():
    rows = sweep([1, 2], kinds=("layer", "id"))
    text = sweep_table(rows)
    lines = text.splitlines()
    assert len(lines) == 5 and lines[0].startswith("spec\tdepth")
    assert lines[-1].split("\t")[:2] == ["id", "2"]
