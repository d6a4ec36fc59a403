from importlib.resources import files

import pytest

from conservative_ha import automaton
from conservative_ha.spec import load_spec
from conservative_ha.traces import load_traces

DATA = files("conservative_ha") / "data"

# acceptance results collected for the end-of-run summary
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def data():
    return DATA


@pytest.fixture(scope="session")
def aircraft_spec():
    return load_spec(DATA / "aircraft.hspec")


@pytest.fixture(scope="session")
def aircraft_traces():
    return load_traces(DATA / "aircraft_traces.json")


@pytest.fixture(scope="session")
def aircraft_annotated():
    return load_traces(DATA / "aircraft_annotated.json")


@pytest.fixture(scope="session")
def aircraft_truth():
    return automaton.load(DATA / "aircraft_truth.json")


@pytest.fixture(scope="session")
def aircraft_original():
    return automaton.load(DATA / "aircraft_original.json")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
