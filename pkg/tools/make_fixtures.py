"""Regenerate the aircraft fixtures under src/conservative_ha/data.

Trace rows are transcribed in the arrow notation ``(label, delay, x)``;
ground-truth flows are the hulls of the rates those traces exhibit.
"""

from __future__ import annotations

import json
from pathlib import Path

from conservative_ha import automaton
from conservative_ha.automaton import HybridAutomaton
from conservative_ha.geometry import Rect, full, hull_of_points, rate
from conservative_ha.traces import OmniscientTrace, from_arrow_rows, save_traces, validate_omniscient

DATA = Path(__file__).resolve().parents[1] / "src" / "conservative_ha" / "data"
X0 = (0, 0, 0)

SPEC = """\
# aircraft phases; travel covers straight flight and course corrections
dim 3
states takeoff travel landing
init takeoff
trigger takeoff -> travel on cruise when x2 >= 300
trigger travel -> landing on descend when true
"""

AIRCRAFT_ROWS = [
    [
        ("cruise", 300, (300, 0, 300)),
        ("turnL", 5, (750, 0, 290)),
        ("LtoS", 5, (1200, -750, 280)),
        ("turnL", 5, (1650, -750, 270)),
        ("LtoS", 5, (2100, -1500, 260)),
        ("turnR", 5, (2550, -1500, 250)),
        ("RtoS", 5, (3000, -1500, 240)),
        ("descend", 5, (3450, -1500, 230)),
        (None, 5, (3450, -1500, 150)),
    ],
    [
        ("cruise", 10, (1000, 0, 300)),
        ("turnR", 5, (2500, 0, 310)),
        ("RtoS", 5, (4000, 750, 320)),
        ("turnR", 5, (5500, 750, 330)),
        ("RtoS", 5, (7000, 1500, 340)),
        ("turnL", 5, (8500, 1500, 350)),
        ("LtoS", 5, (10000, 1500, 360)),
        ("descend", 5, (11500, 1500, 370)),
        (None, 5, (12500, 1500, 370)),
    ],
    [
        ("cruise", 20, (1000, 0, 300)),
        ("descend", 5, (2000, 0, 300)),
        ("adjust", 5, (2375, 0, 275)),
        ("adjust", 5, (2750, 0, 250)),
        ("adjust", 5, (3125, 0, 225)),
        ("adjust", 5, (3500, 0, 200)),
        ("adjust", 5, (3875, 0, 175)),
        ("adjust", 5, (4250, 0, 150)),
        (None, 5, (4625, 0, 125)),
    ],
]


def _mirror(rows):
    swap = {"turnLeft": "turnRight", "turnRight": "turnLeft",
            "leftToStraight": "rightToStraight", "rightToStraight": "leftToStraight"}
    return [(swap.get(lab, lab), d, (x[0], -x[1], x[2])) for lab, d, x in rows]


_LONG_LEFT = [
    ("cruise", 20, (1000, 0, 300)),
    ("turnLeft", 5, (2000, 0, 300)),
    ("leftToStraight", 5, (3000, -375, 300)),
    ("turnLeft", 5, (4000, -375, 300)),
    ("leftToStraight", 5, (5000, -750, 300)),
    ("turnRight", 5, (6000, -750, 300)),
    ("rightToStraight", 5, (7000, -375, 300)),
    ("descend", 5, (8000, -375, 300)),
    (None, 5, (8375, -375, 275)),
]
_WINDY_LONG = [
    ("cruise", 20, (1000, 0, 300)),
    ("descend", 5, (2000, 0, 300)),
    ("adjust", 5, (2375, 0, 275)),
    ("adjust", 5, (2750, 0, 250)),
    ("adjust", 5, (3125, 0, 225)),
    ("adjust", 5, (3500, 0, 200)),
    ("adjust", 5, (3875, 0, 175)),
    ("adjust", 5, (4250, 0, 150)),
    (None, 5, (4625, 0, 125)),
]
EVAL_LONG = [_LONG_LEFT, _mirror(_LONG_LEFT), _WINDY_LONG]

_SHORT_A = [
    ("cruise", 20, (1000, 0, 300)),
    ("turnLeft", 5, (2000, 0, 300)),
    ("leftToStraight", 5, (3000, -375, 300)),
    ("turnLeft", 5, (4000, -375, 300)),
    (None, 5, (5000, -750, 300)),
]
_SHORT_C = [
    ("cruise", 20, (1000, 0, 300)),
    ("turnLeft", 5, (2000, 0, 300)),
    ("leftToStraight", 5, (3000, -375, 300)),
    ("turnRight", 5, (4000, -375, 300)),
    (None, 5, (5000, 0, 300)),
]
_SHORT_E = [
    ("cruise", 20, (1000, 0, 300)),
    ("turnLeft", 5, (2000, 0, 300)),
    ("leftToStraight", 5, (3000, -375, 300)),
    ("descend", 5, (4000, -375, 300)),
    (None, 5, (4375, -375, 275)),
]
_SHORT_G = [
    ("cruise", 20, (1000, 0, 300)),
    ("descend", 5, (2000, 0, 300)),
    ("adjust", 5, (2375, 0, 275)),
    ("adjust", 5, (2750, 0, 250)),
    (None, 5, (3125, 0, 225)),
]
EVAL_SHORT = [_SHORT_A, _mirror(_SHORT_A), _SHORT_C, _mirror(_SHORT_C), _SHORT_E, _mirror(_SHORT_E), _SHORT_G]

PHASE = {0: "takeoff", 1: "travel", 2: "travel", 3: "travel", 4: "landing", 5: "landing"}


def skeleton(names: dict[str, str], windy_split: bool) -> dict:
    """Edges of the aircraft model: 0 takeoff, 1 straight, 2 left, 3 right, 4 landing.

    With ``windy_split`` the descent goes either to a calm terminal landing
    mode 4 or to a windy landing mode 5 that keeps adjusting.
    """
    e = {
        (0, names["cruise"], 1): "cruise",
        (1, names["turnL"], 2): None,
        (2, names["LtoS"], 1): None,
        (1, names["turnR"], 3): None,
        (3, names["RtoS"], 1): None,
        (1, names["descend"], 4): None,
    }
    if windy_split:
        e[(1, names["descend"], 5)] = None
        e[(5, names["adjust"], 5)] = None
    else:
        e[(4, names["adjust"], 4)] = None
    return e


def annotate(edges, t, landing_for):
    """Follow labels through the (label-deterministic apart from landing) skeleton."""
    mode = 0
    path = []
    for s in t.steps[1:]:
        cands = [e for e in edges if e[0] == mode and e[1] == s.label]
        if len(cands) > 1:
            cands = [e for e in cands if e[2] == landing_for]
        (e,) = cands
        path.append(e)
        mode = e[2]
    return OmniscientTrace(t.x0, t.steps, tuple(path))


def build_truth(edge_kinds, traces, n_modes):
    rates = {m: [] for m in range(n_modes)}
    for t in traces:
        x = t.x0
        for m, s in zip(t.modes(0), t.steps):
            rates[m].append(rate(x, s.x, s.delay))
            x = s.x
    guards = {
        e: (Rect.from_bounds([(float("-inf"), float("inf"))] * 2 + [(300, float("inf"))]) if kind == "cruise" else full(3))
        for e, kind in edge_kinds.items()
    }
    a = HybridAutomaton(
        dim=3,
        flows={m: hull_of_points(rs) for m, rs in rates.items()},
        edges=guards,
        init_mode=0,
        init_x=X0,
        alpha={m: PHASE[m] for m in range(n_modes)},
    )
    for i, t in enumerate(traces):
        v = validate_omniscient(a, t)
        assert v, (i, v)
    return a


def windy(t) -> bool:
    return any(s.label == "adjust" for s in t.steps)


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "aircraft.hspec").write_text(SPEC)

    app_names = {k: k for k in ("cruise", "turnL", "LtoS", "turnR", "RtoS", "descend", "adjust")}
    app = [from_arrow_rows(X0, rows) for rows in AIRCRAFT_ROWS]
    with open(DATA / "aircraft_rows.json", "w") as fh:
        json.dump({"x0": list(X0), "traces": [[list(r) for r in rows] for rows in AIRCRAFT_ROWS]}, fh, indent=1)
        fh.write("\n")
    save_traces(app, DATA / "aircraft_traces.json")

    five = skeleton(app_names, windy_split=False)
    annotated = [annotate(five, t, 4) for t in app]
    truth = build_truth(five, annotated, 5)
    save_traces(annotated, DATA / "aircraft_annotated.json")
    automaton.save(truth, DATA / "aircraft_truth.json")

    six = skeleton(app_names, windy_split=True)
    annotated6 = [annotate(six, t, 5 if windy(t) else 4) for t in app]
    automaton.save(build_truth(six, annotated6, 6), DATA / "aircraft_original.json")

    eval_names = dict(app_names, turnL="turnLeft", LtoS="leftToStraight", turnR="turnRight", RtoS="rightToStraight")
    ev = skeleton(eval_names, windy_split=False)
    long_ = [annotate(ev, from_arrow_rows(X0, r), 4) for r in EVAL_LONG]
    short = [annotate(ev, from_arrow_rows(X0, r), 4) for r in EVAL_SHORT]
    automaton.save(build_truth(ev, long_ + short, 5), DATA / "eval_truth.json")
    save_traces(long_, DATA / "eval_long.json")
    save_traces(short, DATA / "eval_short.json")


if __name__ == "__main__":
    main()
