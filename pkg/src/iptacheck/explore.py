"""Construction of the finite transition system under integer time.

States are pairs of a location and an integer clock valuation.  Unit
``tick`` steps replace dense time: every clock advances by one, saturating
one above its ceiling (the largest constant it is compared against), and a
tick exists only when the successor valuation still satisfies the location
invariant.  Discrete steps aggregate a distribution's reset-set outcomes
that land on the same successor state.

Two builders share this preparation: the literal one here enumerates every
reachable state; ``compress`` builds a value-preserving quotient that keeps
uniform stretches of waiting as single states.
"""

from __future__ import annotations

import sys
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from . import intervals
from .automata import TICK, Imdp, ImdpState, Ipta, Location, Step
from .clocks import ClockAtom
from .elaborate import UNKNOWN, eval_pred
from .errors import IptaError, QueryError, ResourceLimit
from .language import Binary, Name, Query, walk

ONE = Fraction(1)

_OP_EVAL = {
    "<=": lambda a, c: a <= c,
    "<": lambda a, c: a < c,
    ">": lambda a, c: a > c,
    ">=": lambda a, c: a >= c,
}


@dataclass(frozen=True)
class CompiledAtom:
    """A clock atom with clock names resolved to indices."""

    clock: int
    op: str
    bound: int
    clock2: int = -1
    text: str = ""

    def holds(self, values: Sequence[int]) -> bool:
        left = values[self.clock]
        if self.clock2 >= 0:
            left -= values[self.clock2]
        return _OP_EVAL[self.op](left, self.bound)


@dataclass
class PreEdge:
    guard: Tuple[CompiledAtom, ...]
    action: str
    # (reset clock-index frozenset, target location index, lower, upper)
    outcomes: List[Tuple[FrozenSet[int], int, Fraction, Fraction]]
    resets_all: Tuple[bool, ...] = ()  # per clock: does this edge reset it


def ceilings(ipta: Ipta, query_atoms: Sequence[ClockAtom] = ()) -> Dict[str, int]:
    """Per-clock maximum constant compared against the clock anywhere.

    Diagonal atoms contribute their constant to both clocks involved.
    Clocks never compared against anything get ceiling 0.
    """
    k = {c: 0 for c in ipta.clocks}
    atoms = [a for inv in ipta.invariant.values() for a in inv]
    atoms.extend(a for e in ipta.edges for a in e.guard)
    atoms.extend(query_atoms)
    for atom in atoms:
        for c in atom.clocks():
            if c in k:
                k[c] = max(k[c], atom.bound)
    return k


@dataclass
class BuildSettings:
    state_cap: int = 10_000_000
    compress: bool = False
    truncate: bool = False


@dataclass
class Prepared:
    """The composed model with names resolved to indices, ready to explore."""

    ipta: Ipta
    env: Dict[str, object]
    label_table: Dict[str, object]
    clocks: Tuple[str, ...]
    caps: Tuple[int, ...]
    locations: Tuple[Location, ...]
    loc_vars: List[Dict[str, int]]
    loc_labels: List[FrozenSet[str]]
    loc_inv: List[Tuple[CompiledAtom, ...]]
    loc_edges: List[List[PreEdge]]
    query: Optional[Query] = None
    query_atoms: Tuple[CompiledAtom, ...] = ()
    formula_clock: Optional[str] = None
    has_strict: bool = False
    # query-derived location analysis (filled when a query is present)
    possibly_target: List[bool] = field(default_factory=list)
    passable: List[bool] = field(default_factory=list)
    doomed: List[bool] = field(default_factory=list)

    def eval_target(self, loc_idx: int, values: Sequence[int]):
        return self._eval(self.query.target, loc_idx, values)

    def eval_left(self, loc_idx: int, values: Sequence[int]):
        return self._eval(self.query.left, loc_idx, values)

    def _eval(self, expr, loc_idx: int, values):
        scope = dict(self.env)
        scope.update(self.loc_vars[loc_idx])
        cvals = None if values is None else dict(zip(self.clocks, values))
        return eval_pred(expr, scope, self.label_table, cvals)

    def state_labels(self, loc_idx: int, values: Sequence[int]) -> FrozenSet[str]:
        labels = self.loc_labels[loc_idx]
        extra = [a.text for a in self.query_atoms if a.holds(values)]
        return labels | frozenset(extra) if extra else labels


def _extract_query_atoms(query: Query, ipta: Ipta, env, label_table):
    """Find clock-constraint atoms in the query and the formula clock, if any."""
    from .elaborate import eval_guard

    var_names = {name for loc in ipta.locations for name, _ in loc}
    known_clocks = set(ipta.clocks)
    unknown = set()
    atoms: List[ClockAtom] = []
    exprs = [e for e in (query.left, query.target) if e is not None]
    for expr in exprs:
        for node in walk(expr):
            if isinstance(node, Name):
                name = node.name
                if name not in var_names and name not in env and name not in known_clocks:
                    unknown.add(name)
    if len(unknown) > 1:
        raise QueryError(f"more than one formula clock in query: {sorted(unknown)}")
    formula_clock = unknown.pop() if unknown else None
    clock_names = known_clocks | ({formula_clock} if formula_clock else set())

    def collect(expr):
        if isinstance(expr, Binary) and expr.op in ("=", "!=", "<", "<=", ">", ">="):
            names = {n.name for n in walk(expr) if isinstance(n, Name)}
            if names & clock_names:
                if names & var_names:
                    raise QueryError(
                        "clock constraints in queries may only compare clocks "
                        f"with constants: {names}"
                    )
                got = eval_guard(expr, env, clock_names)
                if got is False:
                    return
                atoms.extend(got)
            return
        if isinstance(expr, Binary):
            collect(expr.left)
            collect(expr.right)
        elif hasattr(expr, "operand"):
            collect(expr.operand)

    for expr in exprs:
        collect(expr)
    return atoms, formula_clock


def prepare(
    ipta: Ipta,
    env: Dict[str, object],
    label_table: Dict[str, object],
    query: Optional[Query] = None,
) -> Prepared:
    query_atoms_raw: List[ClockAtom] = []
    formula_clock = None
    if query is not None:
        query_atoms_raw, formula_clock = _extract_query_atoms(query, ipta, env, label_table)

    clocks = ipta.clocks + ((formula_clock,) if formula_clock else ())
    k = ceilings(ipta, query_atoms_raw)
    for name in clocks:
        k.setdefault(name, 0)
    caps = tuple(k[c] + 1 for c in clocks)
    cidx = {c: i for i, c in enumerate(clocks)}

    def compile_atom(atom: ClockAtom) -> CompiledAtom:
        return CompiledAtom(
            cidx[atom.clock],
            atom.op,
            atom.bound,
            cidx[atom.clock2] if atom.clock2 else -1,
            str(atom),
        )

    locations = ipta.locations
    lidx = {loc: i for i, loc in enumerate(locations)}
    loc_vars = [dict(loc) for loc in locations]
    loc_labels = [ipta.labels[loc] for loc in locations]
    loc_inv = [tuple(compile_atom(a) for a in ipta.invariant[loc]) for loc in locations]
    loc_edges: List[List[PreEdge]] = [[] for _ in locations]
    n_clocks = len(clocks)
    for e in ipta.edges:
        outcomes = []
        reset_union_all = True
        resets_all = [True] * n_clocks
        for (resets, target), lo, up in e.distribution.items():
            ridx = frozenset(cidx[c] for c in resets)
            for i in range(n_clocks):
                if i not in ridx:
                    resets_all[i] = False
            outcomes.append((ridx, lidx[target], lo, up))
        pre = PreEdge(
            tuple(compile_atom(a) for a in e.guard),
            e.action,
            outcomes,
            tuple(resets_all),
        )
        loc_edges[lidx[e.source]].append(pre)

    all_atoms = [a for inv in loc_inv for a in inv]
    all_atoms.extend(a for edges in loc_edges for e in edges for a in e.guard)
    query_atoms = tuple(compile_atom(a) for a in query_atoms_raw)
    all_atoms.extend(query_atoms)
    has_strict = any(a.op in ("<", ">") for a in all_atoms)

    prep = Prepared(
        ipta=ipta,
        env=env,
        label_table=label_table,
        clocks=clocks,
        caps=caps,
        locations=locations,
        loc_vars=loc_vars,
        loc_labels=loc_labels,
        loc_inv=loc_inv,
        loc_edges=loc_edges,
        query=query,
        query_atoms=query_atoms,
        formula_clock=formula_clock,
        has_strict=has_strict,
    )
    if query is not None:
        _analyze_locations(prep)
    return prep


def _analyze_locations(prep: Prepared):
    """Location-level reachability of possibly-target locations.

    Clock constraints are treated as unknown, so this over-approximates:
    a location marked doomed provably cannot reach the target under any
    clock behavior.
    """
    n = len(prep.locations)
    prep.possibly_target = [
        prep.eval_target(i, None) is not False for i in range(n)
    ]
    if prep.query.left is not None:
        prep.passable = [prep.eval_left(i, None) is not False for i in range(n)]
    else:
        prep.passable = [True] * n
    succs: List[Set[int]] = [set() for _ in range(n)]
    for i in range(n):
        for e in prep.loc_edges[i]:
            for _, target, _, _ in e.outcomes:
                succs[i].add(target)
    ok = list(prep.possibly_target)
    changed = True
    while changed:
        changed = False
        for i in range(n):
            if ok[i] or not prep.passable[i]:
                continue
            if any(ok[t] for t in succs[i]):
                ok[i] = True
                changed = True
    prep.doomed = [not b for b in ok]


@dataclass
class Build:
    imdp: Imdp
    prep: Prepared
    target: Optional[Set[int]]
    constrain: Optional[Set[int]]


def _advance(values: Tuple[int, ...], caps: Tuple[int, ...]) -> Tuple[int, ...]:
    return tuple(v + 1 if v < cap else cap for v, cap in zip(values, caps))


def _reset(values: Tuple[int, ...], resets: FrozenSet[int]) -> Tuple[int, ...]:
    if not resets:
        return values
    return tuple(0 if i in resets else v for i, v in enumerate(values))


def build_explicit(prep: Prepared, settings: BuildSettings) -> Build:
    """Enumerate every reachable (location, valuation) state."""
    caps = prep.caps
    zeros = tuple(0 for _ in prep.clocks)
    index: Dict[Tuple[int, Tuple[int, ...]], int] = {}
    states: List[ImdpState] = []
    meta: List[Tuple[int, Tuple[int, ...]]] = []
    queue = deque()
    target: Optional[Set[int]] = set() if prep.query is not None else None
    constrain: Optional[Set[int]] = set() if (
        prep.query is not None and prep.query.left is not None
    ) else None
    timelocked: List[int] = []

    def intern(loc_idx: int, values: Tuple[int, ...]) -> int:
        key = (loc_idx, values)
        sid = index.get(key)
        if sid is None:
            if len(states) >= settings.state_cap:
                raise ResourceLimit(
                    f"state cap of {settings.state_cap} exceeded; raise --state-cap "
                    f"or use the compressed engine"
                )
            sid = len(states)
            index[key] = sid
            states.append(
                ImdpState(prep.locations[loc_idx], values, prep.state_labels(loc_idx, values))
            )
            meta.append(key)
            queue.append(sid)
        return sid

    initial = []
    init_locs = [prep.locations.index(loc) for loc in prep.ipta.initial]
    for li in init_locs:
        values = zeros
        if all(a.holds(values) for a in prep.loc_inv[li]):
            initial.append(intern(li, values))
    while queue:
        sid = queue.popleft()
        loc_idx, values = meta[sid]
        state = states[sid]
        is_target = False
        if prep.query is not None:
            is_target = prep.eval_target(loc_idx, values) is True
            if is_target:
                target.add(sid)
            if constrain is not None and prep.eval_left(loc_idx, values) is True:
                constrain.add(sid)
        if settings.truncate and prep.query is not None:
            absorb = is_target or prep.doomed[loc_idx]
            if not absorb and constrain is not None and sid not in constrain:
                absorb = True  # outside the until constraint: value-0 absorbing
            if absorb:
                state.steps.append(Step(TICK, (sid,), (ONE,), (ONE,)))
                continue
        # unit time step
        advanced = _advance(values, caps)
        if all(a.holds(advanced) for a in prep.loc_inv[loc_idx]):
            tid = intern(loc_idx, advanced)
            state.steps.append(Step(TICK, (tid,), (ONE,), (ONE,)))
        # discrete steps
        for e in prep.loc_edges[loc_idx]:
            if not all(a.holds(values) for a in e.guard):
                continue
            triples = []
            for resets, tloc, lo, up in e.outcomes:
                tvals = _reset(values, resets)
                if not all(a.holds(tvals) for a in prep.loc_inv[tloc]):
                    raise IptaError(
                        "distribution support leaves the target invariant "
                        f"(action {e.action}); the model loses probability mass"
                    )
                tid = intern(tloc, tvals)
                triples.append((tid, lo, up))
            dist = intervals.aggregate(triples)
            state.steps.append(
                Step(e.action, dist.outcomes, dist.lower, dist.upper)
            )
        if not state.steps:
            timelocked.append(sid)

    if not initial:
        raise IptaError("no initial state satisfies the invariants")
    imdp = Imdp(prep.clocks, states, tuple(initial), tuple(timelocked))
    return Build(imdp, prep, target, constrain)


def build(prep: Prepared, settings: Optional[BuildSettings] = None) -> Build:
    settings = settings or BuildSettings()
    if settings.compress:
        from .compress import build_compressed

        return build_compressed(prep, settings)
    return build_explicit(prep, settings)


def warn_if_strict(prep: Prepared, out=None):
    if prep.has_strict:
        print(
            "warning: model or query uses strict clock bounds; integer-time "
            "analysis is exact only for closed constraints",
            file=out if out is not None else sys.stderr,
        )


# ---------------------------------------------------------------------------
# Textual export


def export_text(imdp: Imdp) -> str:
    """Deterministic transition-list format.

    Header line, one line per transition with rational bounds as p/q, then
    one line per label listing the states carrying it.
    """
    lines = [f"imdp {imdp.n_states} {imdp.n_choices} {imdp.n_transitions}"]
    for sid, state in enumerate(imdp.states):
        for step in state.steps:
            for tid, lo, up in zip(step.targets, step.lower, step.upper):
                lines.append(
                    f"{sid} {step.label} "
                    f"{lo.numerator}/{lo.denominator} "
                    f"{up.numerator}/{up.denominator} {tid}"
                )
    for name, ids in sorted(imdp.label_map().items()):
        lines.append(f"label {name}: " + " ".join(str(i) for i in ids))
    return "\n".join(lines) + "\n"


def parse_export(text: str):
    """Round-trip reader used by tests and the CLI: returns the header counts
    plus parsed transition tuples."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "imdp":
        raise ValueError("not an imdp export")
    n_states, n_choices, n_transitions = map(int, head[1:4])
    transitions = []
    labels = {}
    for ln in lines[1:]:
        if ln.startswith("label "):
            name, _, ids = ln[len("label "):].partition(":")
            labels[name.strip()] = [int(x) for x in ids.split()]
            continue
        src, label, lo, up, dst = ln.split()
        transitions.append((int(src), label, Fraction(lo), Fraction(up), int(dst)))
    return (n_states, n_choices, n_transitions), transitions, labels
