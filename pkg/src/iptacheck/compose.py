"""Parallel composition of automata.

Modules synchronize on shared action names and interleave on unshared
ones; distributions of synchronized edges are combined by the pairwise
product of their bounds.  Composition is folded left-to-right over the
module list and only location pairs reachable from the initial pair are
kept.  An action shared by several modules synchronizes all of them.
"""

from __future__ import annotations

from collections import deque
from typing import Dict, List, Tuple

from . import intervals
from .automata import Edge, Ipta, Location
from .clocks import conjoin
from .errors import CompositionError
from .intervals import IntervalDistribution


def _merge_locations(a: Location, b: Location) -> Location:
    return tuple(sorted(a + b))


def compose(a: Ipta, b: Ipta) -> Ipta:
    clock_clash = set(a.clocks) & set(b.clocks)
    if clock_clash:
        raise CompositionError(f"clock names declared in both operands: {sorted(clock_clash)}")
    a_vars = {name for loc in a.locations for name, _ in loc}
    b_vars = {name for loc in b.locations for name, _ in loc}
    var_clash = a_vars & b_vars
    if var_clash:
        raise CompositionError(f"variables declared in both operands: {sorted(var_clash)}")

    shared = a.actions & b.actions
    a_edges: Dict[Location, List[Edge]] = {}
    for e in a.edges:
        a_edges.setdefault(e.source, []).append(e)
    b_edges: Dict[Location, List[Edge]] = {}
    for e in b.edges:
        b_edges.setdefault(e.source, []).append(e)

    initial = tuple(
        _merge_locations(la, lb) for la in a.initial for lb in b.initial
    )
    origin = {_merge_locations(la, lb): (la, lb) for la in a.initial for lb in b.initial}
    order: List[Location] = list(dict.fromkeys(initial))
    queue = deque(order)
    seen = set(order)
    edges: List[Edge] = []
    invariant = {}
    labels = {}

    def emit(source, guard, action, outcome_triples):
        dist = intervals.aggregate(outcome_triples)
        edge = Edge(source, guard, action, dist)
        edges.append(edge)
        for (_, target), _, _ in dist.items():
            if target not in seen:
                seen.add(target)
                order.append(target)
                queue.append(target)
        return edge

    while queue:
        loc = queue.popleft()
        la, lb = origin[loc]
        invariant[loc] = conjoin(a.invariant[la], b.invariant[lb])
        labels[loc] = a.labels[la] | b.labels[lb]

        for e in a_edges.get(la, []):
            if e.action in shared:
                continue
            triples = []
            for (resets, ta), lo, up in e.distribution.items():
                merged = _merge_locations(ta, lb)
                origin.setdefault(merged, (ta, lb))
                triples.append(((resets, merged), lo, up))
            emit(loc, e.guard, e.action, triples)
        for e in b_edges.get(lb, []):
            if e.action in shared:
                continue
            triples = []
            for (resets, tb), lo, up in e.distribution.items():
                merged = _merge_locations(la, tb)
                origin.setdefault(merged, (la, tb))
                triples.append(((resets, merged), lo, up))
            emit(loc, e.guard, e.action, triples)
        for ea in a_edges.get(la, []):
            if ea.action not in shared:
                continue
            for eb in b_edges.get(lb, []):
                if eb.action != ea.action:
                    continue
                triples = []
                for (ra, ta), lo_a, up_a in ea.distribution.items():
                    for (rb, tb), lo_b, up_b in eb.distribution.items():
                        merged = _merge_locations(ta, tb)
                        origin.setdefault(merged, (ta, tb))
                        triples.append(((ra | rb, merged), lo_a * lo_b, up_a * up_b))
                emit(loc, conjoin(ea.guard, eb.guard), ea.action, triples)

    invariant = {loc: invariant[loc] for loc in order}
    labels = {loc: labels[loc] for loc in order}
    composed = Ipta(
        locations=tuple(order),
        initial=initial,
        actions=a.actions | b.actions,
        clocks=a.clocks + b.clocks,
        invariant=invariant,
        edges=tuple(edges),
        labels=labels,
    )
    return composed.check()


def compose_all(modules: List[Ipta]) -> Ipta:
    if not modules:
        raise CompositionError("nothing to compose")
    result = modules[0]
    for m in modules[1:]:
        result = compose(result, m)
    return result
