"""Value-preserving compressed construction of the integer-time system.

The literal unit-tick system spends almost all of its states in stretches
of pure waiting: runs of valuations in one location between two points
where some guard, invariant or query atom changes truth value.  Inside
such a run the enabled edges, the labels and (when every non-saturated
non-reset clock can be shown irrelevant) the edge targets are all
constant, so every member has the same optimal reachability value as the
run's last member.  Each run is therefore built as a single state carrying
the discrete steps plus, when the run ends by crossing into a new
configuration, one tick step to that successor.  Runs ending against an
invariant carry no tick; runs whose clocks all saturate keep a tick
self-loop (waiting forever is then a real behavior).

States with identical observable content (location, labels, steps, run
ending) are shared.  With a reachability query, target states and states
that provably cannot reach the target (by a clock-free over-approximation
of the location graph) become absorbing sinks, so regions behind the
target contribute single states.

Every simplification preserves minimal and maximal reachability
probabilities exactly; the test suite cross-checks this engine against the
literal one on randomized models.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from . import intervals
from .automata import TICK, Imdp, ImdpState, Step
from .errors import IptaError, ResourceLimit
from .explore import Build, BuildSettings, Prepared, _advance, _reset

ONE = Fraction(1)

Entry = Tuple[int, Tuple[int, ...]]


def _flip_time(atom, values, caps) -> Optional[int]:
    """First t >= 1 where the atom's truth under t saturating unit steps
    changes; None if it never does.  Single-clock atoms only."""
    v = values[atom.clock]
    cap = caps[atom.clock]
    c = atom.bound
    if atom.op == "<=":
        return c + 1 - v if v <= c and c + 1 <= cap else None
    if atom.op == "<":
        return c - v if v < c and c <= cap else None
    if atom.op == ">":
        return c + 1 - v if v <= c and c + 1 <= cap else None
    # ">="
    return c - v if v < c and c <= cap else None


def _advance_by(values, caps, t):
    return tuple(min(v + t, cap) for v, cap in zip(values, caps))


class _Compressor:
    def __init__(self, prep: Prepared, settings: BuildSettings):
        self.prep = prep
        self.settings = settings
        self.states: List[ImdpState] = []
        self.memo: Dict[Entry, int] = {}
        self.inflight: Dict[Entry, dict] = {}
        self.keymap: Dict[tuple, int] = {}
        self.target: Optional[Set[int]] = set() if prep.query is not None else None
        self.constrain: Optional[Set[int]] = (
            set() if prep.query is not None and prep.query.left is not None else None
        )
        self.timelocked: List[int] = []
        self.visit_cap = max(settings.state_cap, settings.state_cap * 8)

        n = len(prep.locations)
        n_clocks = len(prep.clocks)
        self.guards_clock_free = [
            all(not e.guard for e in prep.loc_edges[i]) for i in range(n)
        ]
        self.all_edges_reset = [
            tuple(
                all(e.resets_all[ci] for e in prep.loc_edges[i])
                for ci in range(n_clocks)
            )
            for i in range(n)
        ]
        self.inv_has_diag = [
            any(a.clock2 >= 0 for a in prep.loc_inv[i]) for i in range(n)
        ]
        self.loc_other_atoms = []
        self.loc_has_diag = []
        for i in range(n):
            atoms = [a for e in prep.loc_edges[i] for a in e.guard]
            atoms.extend(prep.query_atoms)
            self.loc_other_atoms.append(tuple(atoms))
            has_diag = self.inv_has_diag[i] or any(a.clock2 >= 0 for a in atoms)
            self.loc_has_diag.append(has_diag)
        self.no_query_atoms = not prep.query_atoms

    # -- structure ------------------------------------------------------

    def _segment(self, loc_idx: int, values):
        """Length and ending of the uniform run starting at this valuation.

        Returns (m, end, exit_values): members are the valuations at
        0..m ticks; end is 'blocked', 'exit' (with the crossing valuation)
        or 'self' (all clocks saturate; waiting loops forever).
        """
        prep = self.prep
        caps = prep.caps
        if self.loc_has_diag[loc_idx]:
            return self._single_step(loc_idx, values)
        inv_flip = None
        for a in prep.loc_inv[loc_idx]:
            t = _flip_time(a, values, caps)
            if t is not None and (inv_flip is None or t < inv_flip):
                inv_flip = t
        other_flip = None
        for a in self.loc_other_atoms[loc_idx]:
            t = _flip_time(a, values, caps)
            if t is not None and (other_flip is None or t < other_flip):
                other_flip = t
        candidates = [t for t in (inv_flip, other_flip) if t is not None]
        if not candidates:
            m = max((cap - v for v, cap in zip(values, caps)), default=0)
            return m, "self", None
        first = min(candidates)
        if inv_flip is not None and inv_flip == first:
            return first - 1, "blocked", None
        return first - 1, "exit", _advance_by(values, caps, first)

    def _single_step(self, loc_idx: int, values):
        advanced = _advance(values, self.prep.caps)
        if advanced == values:
            return 0, "self", None
        if all(a.holds(advanced) for a in self.prep.loc_inv[loc_idx]):
            return 0, "exit", advanced
        return 0, "blocked", None

    def _shortcut(self, tloc: int, varying) -> bool:
        """Is the canonical form of a probed state independent of the values
        of the given clocks?  Holds when the probed location tests no clock
        in guards or query atoms and all its edges reset every varying
        clock: the values then only set how long the run lasts, which does
        not enter the observable content."""
        if not self.no_query_atoms:
            return False
        if not self.guards_clock_free[tloc]:
            return False
        reset_ok = self.all_edges_reset[tloc]
        return all(reset_ok[i] for i in varying)

    def _inv_span_ok(self, tloc: int, source_values, resets, m) -> bool:
        """Do all run members' images under this edge satisfy the target
        invariant?  Checked at both ends; sufficient because single-clock
        atom truth is monotone along saturating advances."""
        inv = self.prep.loc_inv[tloc]
        if not inv:
            return True
        if self.inv_has_diag[tloc]:
            return False
        v0 = _reset(source_values, resets)
        vm = _reset(_advance_by(source_values, self.prep.caps, m), resets)
        return all(a.holds(v0) for a in inv) and all(a.holds(vm) for a in inv)

    # -- per-state construction ------------------------------------------

    def _gen(self, entry: Entry):
        loc_idx, values = entry
        prep = self.prep
        if not all(a.holds(values) for a in prep.loc_inv[loc_idx]):
            raise IptaError(
                "distribution support leaves the target invariant at "
                f"location index {loc_idx}; the model loses probability mass"
            )
        labels = prep.state_labels(loc_idx, values)
        is_target = left_true = None
        if prep.query is not None:
            is_target = prep.eval_target(loc_idx, values) is True
            if self.constrain is not None:
                left_true = prep.eval_left(loc_idx, values) is True
            if self.settings.truncate:
                if is_target:
                    return ("sink", "target", loc_idx, labels, entry)
                if prep.doomed[loc_idx] or (
                    self.constrain is not None and not left_true
                ):
                    return ("sink", "zero", loc_idx, labels, entry)

        m, end, exit_values = self._segment(loc_idx, values)
        while True:
            steps_spec = []
            uniform = True
            for e in prep.loc_edges[loc_idx]:
                if not all(a.holds(values) for a in e.guard):
                    continue
                triples = []
                for resets, tloc, lo, up in e.outcomes:
                    varying = tuple(
                        i
                        for i in range(len(values))
                        if i not in resets and values[i] < prep.caps[i]
                    )
                    base = _reset(values, resets)
                    if m == 0 or not varying:
                        tid = yield (tloc, base)
                        triples.append((tid, lo, up))
                        continue
                    if self._shortcut(tloc, varying) and self._inv_span_ok(
                        tloc, values, resets, m
                    ):
                        tid = yield (tloc, base)
                        triples.append((tid, lo, up))
                        continue
                    tid0 = yield (tloc, base)
                    vt = values
                    same = True
                    for _ in range(m):
                        vt = _advance(vt, prep.caps)
                        tid_t = yield (tloc, _reset(vt, resets))
                        if tid_t != tid0:
                            same = False
                            break
                    if not same:
                        uniform = False
                        break
                    triples.append((tid0, lo, up))
                if not uniform:
                    break
                dist = intervals.aggregate(triples)
                steps_spec.append(
                    (e.action, dist.outcomes, dist.lower, dist.upper)
                )
            if uniform:
                break
            # fall back to literal stepping for this valuation only
            m, end, exit_values = self._single_step(loc_idx, values)
        exit_id = None
        if end == "exit":
            exit_id = yield (loc_idx, exit_values)
        return (
            "state",
            loc_idx,
            values,
            labels,
            tuple(steps_spec),
            end,
            exit_id,
            is_target,
            left_true,
        )

    # -- id assignment and sharing ----------------------------------------

    def _alloc(self, entry: Entry) -> int:
        if len(self.states) >= self.settings.state_cap:
            raise ResourceLimit(
                f"state cap of {self.settings.state_cap} exceeded"
            )
        sid = len(self.states)
        loc_idx, values = entry
        self.states.append(
            ImdpState(self.prep.locations[loc_idx], values, frozenset())
        )
        return sid

    def _finish(self, rec, record) -> int:
        forced = rec["forced"]
        if record[0] == "sink":
            _, kind, loc_idx, labels, entry = record
            key = ("sink", kind, loc_idx, labels)
            if forced is None and key in self.keymap:
                sid = self.keymap[key]
            else:
                sid = forced if forced is not None else self._alloc(entry)
                state = self.states[sid]
                state.labels = labels
                state.steps = [Step(TICK, (sid,), (ONE,), (ONE,))]
                if forced is None:
                    self.keymap[key] = sid
            if kind == "target":
                self.target.add(sid)
            return sid

        (_, loc_idx, values, labels, steps_spec, end, exit_id, is_target, left_true) = record
        end_key = ("exit", exit_id) if end == "exit" else end
        key = ("state", loc_idx, labels, steps_spec, end_key)
        if forced is None and key in self.keymap:
            sid = self.keymap[key]
        else:
            sid = forced if forced is not None else self._alloc((loc_idx, values))
            state = self.states[sid]
            state.labels = labels
            steps = []
            if end == "exit":
                steps.append(Step(TICK, (exit_id,), (ONE,), (ONE,)))
            elif end == "self":
                steps.append(Step(TICK, (sid,), (ONE,), (ONE,)))
            for action, outs, lowers, uppers in steps_spec:
                steps.append(Step(action, outs, lowers, uppers))
            state.steps = steps
            if not steps:
                self.timelocked.append(sid)
            if forced is None:
                self.keymap[key] = sid
        if self.target is not None and is_target:
            self.target.add(sid)
        if self.constrain is not None and left_true:
            self.constrain.add(sid)
        return sid

    def resolve(self, root: Entry) -> int:
        if root in self.memo:
            return self.memo[root]
        stack = []

        def push(entry):
            rec = {"entry": entry, "gen": self._gen(entry), "forced": None}
            self.inflight[entry] = rec
            stack.append(rec)

        push(root)
        send_val = None
        while stack:
            rec = stack[-1]
            try:
                child = rec["gen"].send(send_val)
            except StopIteration as stop:
                sid = self._finish(rec, stop.value)
                del self.inflight[rec["entry"]]
                self.memo[rec["entry"]] = sid
                stack.pop()
                send_val = sid
                continue
            if child in self.memo:
                send_val = self.memo[child]
            elif child in self.inflight:
                other = self.inflight[child]
                if other["forced"] is None:
                    other["forced"] = self._alloc(child)
                send_val = other["forced"]
            else:
                if len(self.memo) + len(self.inflight) > self.visit_cap:
                    raise ResourceLimit(
                        f"visited-state cap of {self.visit_cap} exceeded"
                    )
                push(child)
                send_val = None
        return self.memo[root]


def build_compressed(prep: Prepared, settings: BuildSettings) -> Build:
    comp = _Compressor(prep, settings)
    zeros = tuple(0 for _ in prep.clocks)
    initial = []
    for loc in prep.ipta.initial:
        li = prep.locations.index(loc)
        if all(a.holds(zeros) for a in prep.loc_inv[li]):
            initial.append(comp.resolve((li, zeros)))
    if not initial:
        raise IptaError("no initial state satisfies the invariants")
    imdp = Imdp(
        prep.clocks,
        comp.states,
        tuple(dict.fromkeys(initial)),
        tuple(comp.timelocked),
    )
    return Build(imdp, prep, comp.target, comp.constrain)
