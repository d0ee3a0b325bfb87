"""Automata and transition-system types shared by the whole pipeline.

A location is a valuation of the model's bounded discrete variables,
represented as a name-sorted tuple of (name, value) pairs.  Edges carry an
interval distribution over (reset-set, target-location) outcomes.  The
finite transition system produced by exploration keeps, per state, a list
of steps labelled either with an action name or with the reserved label
``tick`` for the unit time step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Tuple

from . import intervals
from .clocks import ClockConstraint, constraint_str
from .errors import InvalidDistribution, IptaError
from .intervals import IntervalDistribution

Location = Tuple[Tuple[str, int], ...]

TICK = "tick"


def location_str(loc: Location) -> str:
    if not loc:
        return "()"
    return "(" + ",".join(f"{n}={v}" for n, v in loc) + ")"


@dataclass(frozen=True)
class Edge:
    source: Location
    guard: ClockConstraint
    action: str
    # outcomes are (frozenset of reset clock names, target location)
    distribution: IntervalDistribution

    def __str__(self):
        return (
            f"[{self.action}] {location_str(self.source)} "
            f"& {constraint_str(self.guard)} -> {self.distribution}"
        )


@dataclass(frozen=True)
class Ipta:
    locations: Tuple[Location, ...]
    initial: Tuple[Location, ...]
    actions: FrozenSet[str]
    clocks: Tuple[str, ...]
    invariant: Dict[Location, ClockConstraint]
    edges: Tuple[Edge, ...]
    labels: Dict[Location, FrozenSet[str]]

    def check(self):
        """Raise if a structural invariant is broken."""
        locset = set(self.locations)
        if not set(self.initial) <= locset:
            raise IptaError("initial locations not a subset of locations")
        declared = set(self.clocks)
        for loc, inv in self.invariant.items():
            for atom in inv:
                for c in atom.clocks():
                    if c not in declared:
                        raise IptaError(f"undeclared clock {c} in invariant of {location_str(loc)}")
        for edge in self.edges:
            if edge.source not in locset:
                raise IptaError(f"edge from unknown location {location_str(edge.source)}")
            for atom in edge.guard:
                for c in atom.clocks():
                    if c not in declared:
                        raise IptaError(f"undeclared clock {c} in guard of {edge}")
            problems = intervals.validate(edge.distribution)
            if problems:
                raise InvalidDistribution(f"{edge}: " + "; ".join(problems))
            for (resets, target), _, _ in edge.distribution.items():
                if not set(resets) <= declared:
                    raise IptaError(f"undeclared clock reset in {edge}")
                if target not in locset:
                    raise IptaError(f"edge targets unknown location {location_str(target)}")
        return self


@dataclass(frozen=True)
class Step:
    """One nondeterministic choice of a state: an action (or tick) with an
    interval distribution over successor state indices."""

    label: str
    targets: Tuple[int, ...]
    lower: Tuple[Fraction, ...]
    upper: Tuple[Fraction, ...]

    def is_point(self) -> bool:
        return all(lo == up for lo, up in zip(self.lower, self.upper))


@dataclass
class ImdpState:
    location: Optional[Location]  # None only for synthetic sink states
    clocks: Optional[Tuple[int, ...]]
    labels: FrozenSet[str]
    steps: List[Step] = field(default_factory=list)


@dataclass
class Imdp:
    """Finite interval MDP: the integer-time image of a model's semantics."""

    clock_names: Tuple[str, ...]
    states: List[ImdpState]
    initial: Tuple[int, ...]
    timelocked: Tuple[int, ...] = ()

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_choices(self) -> int:
        return sum(len(s.steps) for s in self.states)

    @property
    def n_transitions(self) -> int:
        return sum(len(step.targets) for s in self.states for step in s.steps)

    def check(self):
        n = len(self.states)
        for s in self.states:
            for step in s.steps:
                if step.label == TICK:
                    if len(step.targets) != 1 or step.lower[0] != 1 or step.upper[0] != 1:
                        raise IptaError("tick step is not a point distribution")
                for t in step.targets:
                    if not (0 <= t < n):
                        raise IptaError(f"dangling transition target {t}")
        return self

    def label_map(self) -> Dict[str, List[int]]:
        out: Dict[str, List[int]] = {}
        for i, s in enumerate(self.states):
            for name in s.labels:
                out.setdefault(name, []).append(i)
        return {k: sorted(v) for k, v in out.items()}
