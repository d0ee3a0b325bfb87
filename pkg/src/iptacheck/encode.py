"""Reductions of an interval model to plain probabilistic-timed models.

Two routes: enumerating, per edge, the extreme point distributions of the
interval polytope (one greedy distribution per support ordering, computed
in exact rationals and deduplicated), or fixing a single conforming
distribution per edge.  The first preserves minimal and maximal
reachability; the second produces one sampled behavior whose value always
lies between them.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations
from typing import Dict, Mapping, Optional

from . import intervals
from .automata import Edge, Ipta
from .errors import (
    NonConformingChoice,
    NonNormalizedChoice,
    ResourceLimit,
    UnsupportedArity,
)
from .intervals import IntervalDistribution

ONE = Fraction(1)
MAX_SUPPORT = 8


def greedy_extreme(d: IntervalDistribution, order) -> tuple:
    """The conforming distribution saturating upper bounds along ``order``.

    Each outcome receives the largest probability its upper bound allows
    while leaving room for the remaining outcomes' lower bounds; exact
    rationals throughout.  Returns probabilities aligned with d.outcomes.
    """
    n = len(d.outcomes)
    remaining_low = sum(d.lower, Fraction(0))
    assigned = Fraction(0)
    probs = [Fraction(0)] * n
    for i in order:
        remaining_low -= d.lower[i]
        p = min(d.upper[i], ONE - assigned - remaining_low)
        probs[i] = p
        assigned += p
    assert assigned == ONE
    return tuple(probs)


def extreme_distributions(d: IntervalDistribution, max_support: int = MAX_SUPPORT):
    """All distinct extreme point distributions of d, one per support ordering."""
    intervals.require_valid(d)
    n = len(d.outcomes)
    if n > max_support:
        raise ResourceLimit(
            f"support of size {n} exceeds the ordering-enumeration limit "
            f"of {max_support}"
        )
    seen = []
    for order in permutations(range(n)):
        probs = greedy_extreme(d, order)
        if probs not in seen:
            seen.append(probs)
    return seen


def pta_star(m: Ipta, max_support: int = MAX_SUPPORT) -> Ipta:
    """Replace every edge by one point-distribution edge per distinct
    extreme distribution; locations, clocks, invariants and labels are kept."""
    by_key: Dict[tuple, list] = {}
    new_edges = []
    for edge in m.edges:
        key = (edge.source, edge.guard, edge.action)
        emitted = by_key.setdefault(key, [])
        for probs in extreme_distributions(edge.distribution, max_support):
            if probs in emitted:
                continue
            emitted.append(probs)
            dist = IntervalDistribution.of(
                (o, p, p) for o, p in zip(edge.distribution.outcomes, probs)
            )
            new_edges.append(Edge(edge.source, edge.guard, edge.action, dist))
    return Ipta(
        m.locations,
        m.initial,
        m.actions,
        m.clocks,
        m.invariant,
        tuple(new_edges),
        m.labels,
    )


def sample(m: Ipta, choice: Mapping[int, Mapping]) -> Ipta:
    """Fix one conforming distribution per edge.

    ``choice`` maps an edge index (position in m.edges) to an
    outcome-to-probability mapping; point edges may be omitted.
    """
    new_edges = []
    for idx, edge in enumerate(m.edges):
        d = edge.distribution
        if idx not in choice:
            if not d.is_point():
                raise NonConformingChoice(f"no choice given for interval edge {idx}")
            new_edges.append(edge)
            continue
        mu = {o: Fraction(p) for o, p in choice[idx].items()}
        total = sum(mu.values(), Fraction(0))
        if total != ONE:
            raise NonNormalizedChoice(f"edge {idx}: probabilities sum to {total}, not 1")
        for o, lo, up in d.items():
            p = mu.get(o, Fraction(0))
            if not (lo <= p <= up):
                raise NonConformingChoice(
                    f"edge {idx}: probability {p} for outcome {o} outside [{lo},{up}]"
                )
        for o in mu:
            if o not in d.outcomes and mu[o] != 0:
                raise NonConformingChoice(f"edge {idx}: outcome {o} not in the support")
        dist = IntervalDistribution.of((o, mu.get(o, Fraction(0)), mu.get(o, Fraction(0))) for o in d.outcomes)
        new_edges.append(Edge(edge.source, edge.guard, edge.action, dist))
    return Ipta(
        m.locations,
        m.initial,
        m.actions,
        m.clocks,
        m.invariant,
        tuple(new_edges),
        m.labels,
    )


def scalar_sample(m: Ipta, value) -> Ipta:
    """Fix every two-outcome interval edge to (value, 1-value).

    The first outcome (declaration order) receives ``value``.  Interval
    edges with other support sizes are rejected.
    """
    y = Fraction(value)
    choice = {}
    for idx, edge in enumerate(m.edges):
        d = edge.distribution
        if d.is_point():
            continue
        if len(d.outcomes) != 2:
            raise UnsupportedArity(
                f"edge {idx} has an interval distribution over {len(d.outcomes)} "
                f"outcomes; the scalar helper handles exactly 2"
            )
        choice[idx] = {d.outcomes[0]: y, d.outcomes[1]: ONE - y}
    return sample(m, choice)


def default_sample_value(m: Ipta) -> Optional[Fraction]:
    """Midpoint of the first outcome's interval on the first non-point edge."""
    for edge in m.edges:
        d = edge.distribution
        if not d.is_point():
            return (d.lower[0] + d.upper[0]) / 2
    return None
