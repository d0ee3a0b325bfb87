import random
from fractions import Fraction
from pathlib import Path

import pytest

from iptacheck.automata import Edge, Ipta
from iptacheck.intervals import IntervalDistribution
from iptacheck.clocks import ClockAtom

ROOT = Path(__file__).resolve().parent.parent
MODELS = ROOT / "models"


@pytest.fixture(scope="session")
def client_server_text():
    return (MODELS / "client_server.ipta").read_text()


@pytest.fixture(scope="session")
def simple_server_text():
    return (MODELS / "simple_server.ipta").read_text()


def section61_constants(requests=2, timeout=None):
    consts = {"L": Fraction(7, 10), "U": Fraction(8, 10), "REQUESTS": requests}
    if timeout is not None:
        consts["TIMEOUT"] = timeout
    return consts


def random_interval_bounds(rng, n, grid=10):
    """A valid interval distribution over n outcomes: random bounds around a
    random grid distribution, so the conforming set is never empty."""
    cuts = sorted(rng.randrange(0, grid + 1) for _ in range(n - 1))
    parts = []
    prev = 0
    for c in cuts:
        parts.append(c - prev)
        prev = c
    parts.append(grid - prev)
    mu = [Fraction(p, grid) for p in parts]
    lower, upper = [], []
    for p in mu:
        lo = max(Fraction(0), p - Fraction(rng.randrange(0, grid // 2 + 1), grid))
        up = min(Fraction(1), p + Fraction(rng.randrange(0, grid // 2 + 1), grid))
        lower.append(lo)
        upper.append(up)
    return list(zip(lower, upper))


def random_ipta(seed: int) -> Ipta:
    """A small automaton with one discrete variable, 1-2 clocks, random
    invariants, guards, resets and interval distributions."""
    rng = random.Random(seed)
    n_locs = rng.randrange(2, 5)
    clocks = tuple(f"c{i}" for i in range(rng.randrange(1, 3)))
    locations = tuple((("q", i),) for i in range(n_locs))

    invariant = {}
    for loc in locations:
        atoms = []
        for c in clocks:
            if rng.random() < 0.6:
                atoms.append(ClockAtom(c, rng.choice(["<=", "<"]), rng.randrange(1, 6)))
        invariant[loc] = tuple(atoms)

    edges = []
    n_edges = rng.randrange(2, 7)
    for k in range(n_edges):
        src = locations[rng.randrange(n_locs)]
        guard = []
        if rng.random() < 0.5:
            guard.append(
                ClockAtom(rng.choice(clocks), rng.choice(["<=", "<", ">", ">="]), rng.randrange(0, 6))
            )
        n_out = rng.randrange(1, 4)
        bounds = random_interval_bounds(rng, n_out)
        outcomes = []
        used = set()
        for lo, up in bounds:
            target = locations[rng.randrange(n_locs)]
            # resets must cover the clocks the target invariant bounds, or the
            # edge would push probability mass out of the state space
            must_reset = {a.clock for a in invariant[target]}
            resets = frozenset(
                must_reset | {c for c in clocks if rng.random() < 0.5}
            )
            key = (resets, target)
            if key in used:
                continue
            used.add(key)
            outcomes.append((key, lo, up))
        dist = IntervalDistribution.of(outcomes)
        from iptacheck.intervals import validate

        if validate(dist):
            continue
        action = rng.choice(["a", "b", "go"]) + str(k % 2)
        edges.append(Edge(src, tuple(guard), action, dist))
    if not edges:
        # guarantee at least one edge so the model is not a pure waiting chain
        dist = IntervalDistribution.of([((frozenset(), locations[-1]), Fraction(1), Fraction(1))])
        edges.append(Edge(locations[0], (), "a0", dist))

    labels = {loc: frozenset() for loc in locations}
    return Ipta(
        locations=locations,
        initial=(locations[0],),
        actions=frozenset(e.action for e in edges),
        clocks=clocks,
        invariant=invariant,
        edges=tuple(edges),
        labels=labels,
    ).check()
