import json
import subprocess
import sys

import pytest

from conservative_ha import automaton
from conservative_ha.cli import main
from conservative_ha.traces import load_traces

from conftest import DATA

SPEC = str(DATA / "aircraft.hspec")
TRACES = str(DATA / "aircraft_traces.json")


@pytest.fixture
def built(tmp_path):
    out = tmp_path / "model.json"
    assert main(["construct", "--spec", SPEC, "--traces", TRACES, "--out", str(out)]) == 0
    return out


def test_construct_then_membership(built, capsys, tmp_path):
    m = automaton.load(built)
    assert len(m.flows) == 5
    assert main(["check", "membership", "--model", str(built), "--traces", TRACES]) == 0
    out = capsys.readouterr().out
    assert out.count("ACCEPT") == 3 and "REJECT" not in out


def test_construct_outputs(tmp_path, capsys):
    args = ["construct", "--spec", SPEC, "--traces", TRACES, "--out", str(tmp_path / "m.json"),
            "--dot", str(tmp_path / "m.dot"), "--keep-tree", str(tmp_path / "tree.json"),
            "--explain-merges", str(tmp_path / "why.txt")]
    assert main(args) == 0
    assert "tree: 25 modes" in capsys.readouterr().out
    assert (tmp_path / "m.dot").read_text().startswith("digraph")
    assert len(automaton.load(tmp_path / "tree.json").flows) == 25
    assert "shared" in (tmp_path / "why.txt").read_text()


def test_membership_rejects(tmp_path, capsys):
    assert main(["check", "membership", "--model", str(DATA / "eval_truth.json"), "--traces", TRACES]) == 1
    assert "REJECT" in capsys.readouterr().out


def test_malformed_spec_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.hspec"
    bad.write_text("dim 3\nstates a b\nbogus line\n")
    assert main(["construct", "--spec", str(bad), "--traces", TRACES, "--out", str(tmp_path / "o.json")]) == 2
    assert "line 3" in capsys.readouterr().err


def test_missing_file_and_usage_errors(tmp_path, capsys):
    assert main(["export", "dot", "--model", str(tmp_path / "nope.json")]) == 2
    assert main(["frobnicate"]) == 2
    assert main([]) == 2
    capsys.readouterr()


def test_simulate_project_adequacy(tmp_path, capsys):
    walks = tmp_path / "walks.json"
    truth = str(DATA / "aircraft_truth.json")
    assert main(["simulate", "--model", truth, "--walks", "5", "--out", str(walks), "--max-steps", "6"]) == 0
    assert len(load_traces(walks)) == 5
    proj = tmp_path / "proj.json"
    assert main(["project", "--model", truth, "--traces", str(DATA / "aircraft_annotated.json"),
                 "--out", str(proj)]) == 0
    assert automaton.load(proj).flows == automaton.load(truth).flows
    ann = str(DATA / "aircraft_annotated.json")
    assert main(["adequacy", "--model", truth, "--traces", ann, "--spec", SPEC]) in (0, 1)
    out = capsys.readouterr().out
    assert "coarser than specification: True" in out
    assert main(["adequacy", "--model", truth, "--traces", TRACES]) == 2


def test_adequacy_strict(tmp_path, capsys):
    truth = str(DATA / "eval_truth.json")
    short = str(DATA / "eval_short.json")
    rep = tmp_path / "rep.json"
    code = main(["adequacy", "--model", truth, "--traces", short, "--spec", SPEC, "--out", str(rep)])
    strict = main(["adequacy", "--model", truth, "--traces", short, "--spec", SPEC, "--strict"])
    assert code == 1 and strict == 1
    data = json.loads(rep.read_text())
    assert [r["needed"] for r in data["modes"]] == [1, 16, 2, 2, 4]
    capsys.readouterr()


def test_check_conservative(built, tmp_path, capsys):
    ref = str(DATA / "aircraft_truth.json")
    assert main(["check", "conservative", "--model", str(built), "--reference", ref,
                 "--samples", "50", "--max-steps", "8", "--jobs", "1"]) == 0
    assert "proves nothing" in capsys.readouterr().out


def test_bench_commands(tmp_path, capsys):
    assert main(["bench", "tree", "--depth", "3", "--dim", "2", "--samples", "10", "--jobs", "1",
                 "--out-dir", str(tmp_path / "b")]) == 0
    metrics = json.loads((tmp_path / "b" / "metrics.json").read_text())
    assert metrics["merged_modes"] == 4
    assert automaton.load(tmp_path / "b" / "constructed.json") == automaton.load(tmp_path / "b" / "constructed.json")
    out = tmp_path / "sweep.tsv"
    assert main(["bench", "sweep", "--depths", "1-3", "--specs", "layer", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 4
    assert main(["bench", "tree", "--depth", "0"]) == 2
    capsys.readouterr()


def test_spec_dump_round_trip(tmp_path, capsys):
    assert main(["spec", "dump", "--spec", SPEC]) == 0
    dumped = capsys.readouterr().out
    again = tmp_path / "again.hspec"
    again.write_text(dumped)
    assert main(["spec", "dump", "--spec", str(again)]) == 0
    assert capsys.readouterr().out == dumped


def test_export_dot_stdout(built, capsys):
    assert main(["export", "dot", "--model", str(built)]) == 0
    assert "cruise" in capsys.readouterr().out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "conservative_ha", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "construct" in r.stdout
