"""Reachability probabilities by interval value iteration.

The outer iteration optimizes over the nondeterministic choices of every
state; the inner step picks, per interval distribution, the conforming
distribution extremal for the current value vector.  That distribution is
found greedily after sorting the support by value (descending for the
maximum, ascending for the minimum) and saturating upper bounds subject to
the remaining lower bounds.

Sweeps are Jacobi-style over the previous vector, so the result does not
depend on update order.  The sweep kernel is compiled when the optional
extension is available; a pure-Python fallback is selected at import.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from . import intervals
from .automata import Imdp
from .errors import InvalidDistribution, IptaError, QueryError
from .explore import Build
from .intervals import IntervalDistribution

if os.environ.get("IPTACHECK_PURE") == "1":
    _kernel = None
else:
    try:
        from . import _vi_kernel as _kernel  # type: ignore
    except ImportError:
        _kernel = None

from . import _vi_py

KERNEL_NAME = "compiled" if _kernel is not None else "python"


@dataclass
class SolveSettings:
    epsilon: float = 1e-6
    max_iterations: int = 100_000
    criterion: str = "absolute"  # or "relative"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.criterion not in ("absolute", "relative"):
            raise ValueError(f"unknown stopping criterion {self.criterion!r}")


@dataclass
class SolveResult:
    value_at_initial: float
    values: np.ndarray
    iterations: int
    converged: bool


def unreachable_set(imdp: Imdp, targets: Iterable[int], constrain: Optional[Set[int]] = None) -> Set[int]:
    """States from which no support path reaches the target set.

    With a constraint set (until left-states), paths may not pass through
    states outside constrain+target: those are treated as absorbing.
    """
    target_set = set(targets)
    n = imdp.n_states
    preds: Dict[int, list] = {}
    for sid, state in enumerate(imdp.states):
        if constrain is not None and sid not in constrain and sid not in target_set:
            continue  # absorbing: its outgoing steps are cut
        for step in state.steps:
            for tid, up in zip(step.targets, step.upper):
                if up > 0:
                    preds.setdefault(tid, []).append(sid)
    reached = set(target_set)
    frontier = list(target_set)
    while frontier:
        t = frontier.pop()
        for p in preds.get(t, ()):
            if p not in reached:
                reached.add(p)
                frontier.append(p)
    return set(range(n)) - reached


def inner_extreme(d: IntervalDistribution, values: Mapping, direction: str):
    """Extremal conforming distribution for the given outcome values.

    Returns (distribution as a dict, objective).  Exact when called with
    rational bounds and values; the solver uses the float kernel instead.
    """
    intervals.require_valid(d)
    if direction not in ("max", "min"):
        raise ValueError(f"direction must be 'max' or 'min', not {direction!r}")
    n = len(d.outcomes)
    vals = [values[o] for o in d.outcomes]
    if direction == "max":
        order = sorted(range(n), key=lambda i: (_neg(vals[i]), i))
    else:
        order = sorted(range(n), key=lambda i: (vals[i], i))
    remaining_low = sum(d.lower, Fraction(0)) if _all_fractions(d) else float(sum(d.lower))
    assigned = 0
    mu: Dict[object, object] = {}
    objective = 0
    for i in order:
        remaining_low -= d.lower[i]
        p = min(d.upper[i], 1 - assigned - remaining_low)
        mu[d.outcomes[i]] = p
        assigned += p
        objective += p * vals[i]
    return mu, objective


def _neg(v):
    return -v


def _all_fractions(d: IntervalDistribution) -> bool:
    return True  # bounds are always stored as Fractions


def _compile_csr(imdp: Imdp, fixed_one: Set[int], fixed_zero: Set[int]):
    """Pack the per-state choices into flat arrays for the sweep kernel."""
    update_states = []
    outcome_offsets = [0]
    targets = []
    lowers = []
    uppers = []
    state_choice_span = np.zeros((imdp.n_states, 2), dtype=np.int64)
    for sid, state in enumerate(imdp.states):
        if sid in fixed_one or sid in fixed_zero or not state.steps:
            continue
        begin = len(outcome_offsets) - 1
        for step in state.steps:
            for tid, lo, up in zip(step.targets, step.lower, step.upper):
                targets.append(tid)
                lowers.append(float(lo))
                uppers.append(float(up))
            outcome_offsets.append(len(targets))
        end = len(outcome_offsets) - 1
        state_choice_span[sid] = (begin, end)
        update_states.append(sid)
    return (
        np.array(update_states, dtype=np.int64),
        state_choice_span,
        np.array(outcome_offsets, dtype=np.int64),
        np.array(targets, dtype=np.int64),
        np.array(lowers, dtype=np.float64),
        np.array(uppers, dtype=np.float64),
    )


def value_iteration(
    imdp: Imdp,
    targets: Iterable[int],
    direction: str,
    constrain: Optional[Set[int]] = None,
    settings: Optional[SolveSettings] = None,
) -> SolveResult:
    settings = settings or SolveSettings()
    if direction not in ("max", "min"):
        raise ValueError(f"direction must be 'max' or 'min', not {direction!r}")
    target_set = set(targets)
    n = imdp.n_states
    for t in target_set:
        if not (0 <= t < n):
            raise IptaError(f"target state {t} out of range")
    zero = unreachable_set(imdp, target_set, constrain)
    if constrain is not None:
        zero |= set(range(n)) - constrain - target_set
    zero -= target_set

    values = np.zeros(n, dtype=np.float64)
    for t in target_set:
        values[t] = 1.0

    upd, span, ooff, tgt, lo, hi = _compile_csr(imdp, target_set, zero)
    maximize = direction == "max"
    sweep = _kernel.sweep if _kernel is not None else _vi_py.sweep

    iterations = 0
    converged = False
    new_values = values.copy()
    while iterations < settings.max_iterations:
        diff = sweep(values, new_values, upd, span, ooff, tgt, lo, hi, maximize)
        iterations += 1
        values, new_values = new_values, values
        if settings.criterion == "absolute":
            if diff < settings.epsilon:
                converged = True
                break
        else:
            scale = float(np.max(np.abs(values))) or 1.0
            if diff / scale < settings.epsilon:
                converged = True
                break
        if not upd.size:
            converged = True
            break

    initial_value = float(values[imdp.initial[0]]) if imdp.initial else 0.0
    return SolveResult(initial_value, values, iterations, converged)


@dataclass
class CheckOutcome:
    query: object
    direction_values: Dict[str, SolveResult] = field(default_factory=dict)
    verdict: Optional[bool] = None

    @property
    def value(self) -> Optional[float]:
        if len(self.direction_values) == 1:
            return next(iter(self.direction_values.values())).value_at_initial
        return None

    @property
    def iterations(self) -> int:
        return max((r.iterations for r in self.direction_values.values()), default=0)

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.direction_values.values())


def check(build: Build, settings: Optional[SolveSettings] = None) -> CheckOutcome:
    """Evaluate the build's query: an optimal value or a threshold verdict.

    Threshold queries quantify over every adversary, so >= and > compare
    the minimal probability against the bound while <= and < compare the
    maximal one; boundary comparisons are non-strict exactly when the
    operator is.
    """
    query = build.prep.query
    if query is None:
        raise QueryError("build carries no query")
    targets = build.target or set()
    out = CheckOutcome(query)
    if query.mode in ("min", "max"):
        out.direction_values[query.mode] = value_iteration(
            build.imdp, targets, query.mode, build.constrain, settings
        )
        return out
    direction = "min" if query.comparison in (">=", ">") else "max"
    result = value_iteration(build.imdp, targets, direction, build.constrain, settings)
    out.direction_values[direction] = result
    bound = float(query.threshold)
    value = result.value_at_initial
    out.verdict = {
        ">=": value >= bound,
        ">": value > bound,
        "<=": value <= bound,
        "<": value < bound,
    }[query.comparison]
    return out
