"""Conservative multi-rectangular hybrid automata from specifications and traces."""

from .automaton import HybridAutomaton, Partition, canonicalize, discretely_bisimilar, quotient
from .construct import ConstructionState, run_construction, solve
from .geometry import Interval, Rect, box_hull, contains_point, full, scale_translate, subset
from .merge import merge
from .spec import SpecModel, parse_spec
from .traces import ObservableTrace, OmniscientTrace, Step, accepts, observe, random_walk, validate_omniscient

__all__ = [
    "ConstructionState",
    "HybridAutomaton",
    "Interval",
    "ObservableTrace",
    "OmniscientTrace",
    "Partition",
    "Rect",
    "SpecModel",
    "Step",
    "accepts",
    "box_hull",
    "canonicalize",
    "contains_point",
    "discretely_bisimilar",
    "full",
    "merge",
    "observe",
    "parse_spec",
    "quotient",
    "random_walk",
    "run_construction",
    "scale_translate",
    "solve",
    "subset",
    "validate_omniscient",
]
