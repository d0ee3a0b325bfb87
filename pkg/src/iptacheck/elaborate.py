"""Elaboration of parsed models into automata.

Resolution enumerates, per module, the variable valuations reachable from
the initial valuation, splits every guard and invariant into the discrete
part (decided per valuation) and a residual conjunction of clock bounds,
and turns each command into edges carrying a validated interval
distribution over (reset-set, target-valuation) outcomes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import intervals
from .automata import Edge, Ipta, Location, location_str
from .clocks import TRUE, ClockAtom, ClockConstraint
from .errors import (
    InvalidDistribution,
    IptaError,
    RangeOverflow,
    UnboundConstant,
    UnknownIdentifier,
)
from .language import (
    Binary,
    BoolLit,
    LabelRef,
    ModelSource,
    Name,
    Num,
    Unary,
    expr_str,
)

UNKNOWN = object()  # third truth value used when clock values are unavailable


def eval_const(expr, env):
    """Evaluate an expression over constants / variable values to a number or bool.

    Division is exact on non-integer operands and floors on integer ones,
    so integer models stay integer.
    """
    if isinstance(expr, Num):
        v = expr.value
        return int(v) if v.denominator == 1 else v
    if isinstance(expr, BoolLit):
        return expr.value
    if isinstance(expr, Name):
        if expr.name not in env:
            raise UnboundConstant(f"no value for {expr.name!r}")
        return env[expr.name]
    if isinstance(expr, LabelRef):
        raise UnknownIdentifier(f'label "{expr.name}" not allowed here')
    if isinstance(expr, Unary):
        v = eval_const(expr.operand, env)
        if expr.op == "-":
            return -v
        if expr.op == "!":
            return not _truth(v)
        raise IptaError(f"bad unary operator {expr.op}")
    if isinstance(expr, Binary):
        return _eval_binary(expr.op, eval_const(expr.left, env), eval_const(expr.right, env))
    raise IptaError(f"cannot evaluate {expr!r}")


def _truth(v):
    if isinstance(v, bool):
        return v
    raise IptaError(f"expected a boolean, got {v!r}")


def _eval_binary(op, a, b):
    if op == "&":
        return _truth(a) and _truth(b)
    if op == "|":
        return _truth(a) or _truth(b)
    if op == "=>":
        return (not _truth(a)) or _truth(b)
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op in ("<", "<=", ">", ">="):
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if isinstance(a, int) and isinstance(b, int):
            if b == 0:
                raise IptaError("division by zero")
            return a // b
        result = Fraction(a) / Fraction(b)
        return int(result) if result.denominator == 1 else result
    raise IptaError(f"bad binary operator {op}")


# ---------------------------------------------------------------------------
# Guard / invariant splitting


class _ClockTerm:
    __slots__ = ("clock", "clock2")

    def __init__(self, clock, clock2=None):
        self.clock = clock
        self.clock2 = clock2


def _make_atom(term: _ClockTerm, op: str, bound):
    """Build an atom from a clock term, comparison and numeric bound.

    Rational bounds are normalized to the equivalent integer form; bounds
    below zero collapse to a truth constant.
    """
    frac = Fraction(bound)
    if frac.denominator != 1:
        # x <= 2.5 over integers is x <= 2, x > 2.5 is x >= 3, etc.
        import math

        if op in ("<=", "<"):
            op, frac = "<=", Fraction(math.floor(frac))
        else:
            op, frac = ">=", Fraction(math.ceil(frac))
    c = int(frac)
    if c < 0:
        return op in (">", ">=") if term.clock2 is None else None  # diagonals may go negative
    return ClockAtom(term.clock, op, c, term.clock2)


_FLIP = {"<=": ">", "<": ">=", ">": "<=", ">=": "<"}


def eval_guard(expr, env, clock_names):
    """Partially evaluate a guard to False or a conjunction of clock atoms.

    Returns False, or a (possibly empty) tuple of atoms; the empty tuple is
    ``true``.  Raises if the residual cannot be written as a conjunction.
    """
    v = _guard_eval(expr, env, clock_names)
    if isinstance(v, bool):
        return TRUE if v else False
    if isinstance(v, tuple):
        return v
    raise IptaError(f"guard does not reduce to a boolean: {expr_str(expr)}")


def _guard_eval(expr, env, clock_names):
    if isinstance(expr, Name) and expr.name in clock_names:
        return _ClockTerm(expr.name)
    if isinstance(expr, Binary):
        if expr.op == "-":
            left = _guard_eval(expr.left, env, clock_names)
            right = _guard_eval(expr.right, env, clock_names)
            if isinstance(left, _ClockTerm) and isinstance(right, _ClockTerm):
                if left.clock2 or right.clock2:
                    raise IptaError("clock difference may involve only two clocks")
                return _ClockTerm(left.clock, right.clock)
            if isinstance(left, _ClockTerm) or isinstance(right, _ClockTerm):
                raise IptaError("arithmetic on clocks is limited to a single difference")
            return _eval_binary("-", left, right)
        if expr.op in ("=", "!=", "<", "<=", ">", ">="):
            left = _guard_eval(expr.left, env, clock_names)
            right = _guard_eval(expr.right, env, clock_names)
            lc = isinstance(left, _ClockTerm)
            rc = isinstance(right, _ClockTerm)
            if not lc and not rc:
                return _eval_binary(expr.op, left, right)
            if lc and rc:
                if left.clock2 or right.clock2:
                    raise IptaError("cannot compare clock differences")
                # x op y  ==  x - y op 0
                left = _ClockTerm(left.clock, right.clock)
                right = 0
                lc, rc = True, False
            if rc:  # c op x  ==  x flip(op) c
                left, right = right, left
                op = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}[expr.op]
            else:
                op = expr.op
            if op == "=":
                a1 = _make_atom(left, "<=", right)
                a2 = _make_atom(left, ">=", right)
                if a1 is None or a2 is None:
                    raise IptaError("negative bound on a clock difference")
                if a1 is False or a2 is False:
                    return False
                return tuple(a for a in (a1, a2) if isinstance(a, ClockAtom))
            if op == "!=":
                raise IptaError("clock disequality is not a conjunction of bounds")
            atom = _make_atom(left, op, right)
            if isinstance(atom, bool):
                return atom
            if atom is None:
                raise IptaError("negative bound on a clock difference")
            return (atom,)
        if expr.op == "&":
            left = _guard_eval(expr.left, env, clock_names)
            if left is False:
                return False
            right = _guard_eval(expr.right, env, clock_names)
            if right is False:
                return False
            return _conj(left, right)
        if expr.op == "|":
            left = _guard_eval(expr.left, env, clock_names)
            right = _guard_eval(expr.right, env, clock_names)
            if left is True or right is True:
                return True
            if left is False:
                return _as_bool_or_atoms(right)
            if right is False:
                return _as_bool_or_atoms(left)
            raise IptaError("disjunction of clock constraints is not supported")
        if expr.op == "=>":
            left = _guard_eval(expr.left, env, clock_names)
            if left is False:
                return True
            if left is True:
                return _as_bool_or_atoms(_guard_eval(expr.right, env, clock_names))
            raise IptaError("clock constraints may not appear left of '=>'")
        left = _guard_eval(expr.left, env, clock_names)
        right = _guard_eval(expr.right, env, clock_names)
        if isinstance(left, (_ClockTerm, tuple)) or isinstance(right, (_ClockTerm, tuple)):
            raise IptaError(f"clocks may not appear under {expr.op!r}")
        return _eval_binary(expr.op, left, right)
    if isinstance(expr, Unary):
        if expr.op == "!":
            inner = _guard_eval(expr.operand, env, clock_names)
            if isinstance(inner, bool):
                return not inner
            if isinstance(inner, tuple) and len(inner) == 1:
                atom = inner[0]
                return (ClockAtom(atom.clock, _FLIP[atom.op], atom.bound, atom.clock2),)
            raise IptaError("cannot negate a conjunction of clock constraints")
        v = _guard_eval(expr.operand, env, clock_names)
        if isinstance(v, _ClockTerm):
            raise IptaError("arithmetic on clocks is not supported")
        return -v
    return eval_const(expr, env)


def _as_bool_or_atoms(v):
    if isinstance(v, (bool, tuple)):
        return v
    raise IptaError("expression does not reduce to a constraint")


def _conj(a, b):
    if a is True:
        a = ()
    if b is True:
        b = ()
    return tuple(a) + tuple(b)


# ---------------------------------------------------------------------------
# Three-valued predicate evaluation (clock values may be unavailable)


def eval_pred(expr, env, label_defs, clock_values):
    """Evaluate a predicate over variables, labels and clocks.

    ``clock_values`` of None makes every clock comparison UNKNOWN; the
    connectives then propagate three-valued truth.
    """
    if isinstance(expr, Num):
        v = expr.value
        return int(v) if v.denominator == 1 else v
    if isinstance(expr, BoolLit):
        return expr.value
    if isinstance(expr, LabelRef):
        if expr.name not in label_defs:
            raise UnknownIdentifier(f'unknown label "{expr.name}"')
        return eval_pred(label_defs[expr.name], env, label_defs, clock_values)
    if isinstance(expr, Name):
        if clock_values is not None and expr.name in clock_values:
            return clock_values[expr.name]
        if expr.name in env:
            return env[expr.name]
        return UNKNOWN
    if isinstance(expr, Unary):
        v = eval_pred(expr.operand, env, label_defs, clock_values)
        if v is UNKNOWN:
            return UNKNOWN
        return (not _truth(v)) if expr.op == "!" else -v
    if isinstance(expr, Binary):
        a = eval_pred(expr.left, env, label_defs, clock_values)
        b = eval_pred(expr.right, env, label_defs, clock_values)
        if expr.op == "&":
            if a is False or b is False:
                return False
            if a is UNKNOWN or b is UNKNOWN:
                return UNKNOWN
            return _truth(a) and _truth(b)
        if expr.op == "|":
            if a is True or b is True:
                return True
            if a is UNKNOWN or b is UNKNOWN:
                return UNKNOWN
            return _truth(a) or _truth(b)
        if expr.op == "=>":
            if a is False or b is True:
                return True
            if a is UNKNOWN or b is UNKNOWN:
                return UNKNOWN
            return (not _truth(a)) or _truth(b)
        if a is UNKNOWN or b is UNKNOWN:
            return UNKNOWN
        return _eval_binary(expr.op, a, b)
    raise IptaError(f"cannot evaluate {expr!r}")


# ---------------------------------------------------------------------------
# Model resolution


@dataclass
class ResolvedModel:
    modules: List[Ipta]
    label_table: Dict[str, object]  # label name -> predicate expression
    env: Dict[str, object]  # constant name -> value
    source: ModelSource


def resolve(src: ModelSource, bindings: Optional[Dict[str, object]] = None) -> ResolvedModel:
    bindings = dict(bindings or {})
    declared = {c.name for c in src.constants}
    for name in bindings:
        if name not in declared:
            raise UnboundConstant(f"binding for undeclared constant {name!r}")
    env: Dict[str, object] = {}
    for c in src.constants:
        if c.name in bindings:
            value = bindings[c.name]
        elif c.value is not None:
            value = eval_const(c.value, env)
        else:
            raise UnboundConstant(f"constant {c.name!r} has no value; bind it with --const")
        if c.type == "int":
            frac = Fraction(value)
            if frac.denominator != 1:
                raise UnboundConstant(f"constant {c.name!r} must be an integer, got {value}")
            value = int(frac)
        else:
            value = Fraction(value)
            if value.denominator == 1:
                value = int(value)
        env[c.name] = value

    modules = [_resolve_module(mod, env) for mod in src.modules]
    label_table = {}
    for lab in src.labels:
        clocks_used = _clocks_in(lab.predicate, {c for m in src.modules for c in m.clocks})
        if clocks_used:
            raise IptaError(f'label "{lab.name}" may not reference clocks: {clocks_used}')
        label_table[lab.name] = lab.predicate
    return ResolvedModel(modules, label_table, env, src)


def _clocks_in(expr, clock_names):
    from .language import walk

    return sorted({n.name for n in walk(expr) if isinstance(n, Name) and n.name in clock_names})


def _resolve_module(mod, env) -> Ipta:
    clocks = tuple(mod.clocks)
    var_ranges = {}
    init_vals = {}
    for v in mod.variables:
        low = eval_const(v.low, env)
        high = eval_const(v.high, env)
        init = eval_const(v.init, env)
        if not (isinstance(low, int) and isinstance(high, int) and isinstance(init, int)):
            raise IptaError(f"range of {v.name} must be integer")
        if low > high:
            raise IptaError(f"empty range [{low}..{high}] for {v.name}")
        if not (low <= init <= high):
            raise RangeOverflow(f"init {init} of {v.name} outside [{low}..{high}]")
        var_ranges[v.name] = (low, high)
        init_vals[v.name] = init
    var_names = tuple(v.name for v in mod.variables)

    # weights are constant expressions: evaluate once per command
    command_weights = []
    for i, cmd in enumerate(mod.commands):
        weights = []
        for upd in cmd.updates:
            if upd.low is None:
                lo = hi = Fraction(1)
            else:
                lo = Fraction(eval_const(upd.low, env))
                hi = Fraction(eval_const(upd.high, env)) if upd.high is not None else lo
            if lo > hi:
                raise InvalidDistribution(
                    f"module {mod.name} command {i + 1}: interval lower bound "
                    f"{lo} exceeds upper bound {hi}"
                )
            weights.append((lo, hi))
        command_weights.append(weights)

    def loc_of(valuation: Dict[str, int]) -> Location:
        return tuple(sorted(valuation.items()))

    initial = loc_of(init_vals)
    seen = {initial}
    order = [initial]
    queue = deque([initial])
    edges_by_loc: Dict[Location, List[Edge]] = {}
    fresh_counter = 0
    action_names = {}
    for i, cmd in enumerate(mod.commands):
        if cmd.action is None:
            action_names[i] = f"{mod.name}!{fresh_counter}"
            fresh_counter += 1
        else:
            action_names[i] = cmd.action

    while queue:
        loc = queue.popleft()
        valuation = dict(loc)
        scope = dict(env)
        scope.update(valuation)
        loc_edges = []
        for i, cmd in enumerate(mod.commands):
            guard = eval_guard(cmd.guard, scope, set(clocks))
            if guard is False:
                continue
            outcomes = []
            for upd, (lo, hi) in zip(cmd.updates, command_weights[i]):
                resets = set()
                new_valuation = dict(valuation)
                for target, value_expr in upd.assignments:
                    if target in clocks:
                        value = eval_const(value_expr, scope)
                        if value != 0:
                            raise IptaError(
                                f"module {mod.name} command {i + 1}: clock {target} "
                                f"may only be reset to 0"
                            )
                        resets.add(target)
                    else:
                        value = eval_const(value_expr, scope)
                        if not isinstance(value, int):
                            raise RangeOverflow(
                                f"module {mod.name} command {i + 1}: non-integer "
                                f"value {value} for {target}"
                            )
                        low, high = var_ranges[target]
                        if not (low <= value <= high):
                            raise RangeOverflow(
                                f"module {mod.name} command {i + 1}: {target}'={value} "
                                f"outside [{low}..{high}] at {location_str(loc)}"
                            )
                        new_valuation[target] = value
                outcomes.append(((frozenset(resets), loc_of(new_valuation)), lo, hi))
            dist = intervals.aggregate(outcomes)
            problems = intervals.validate(dist)
            if problems:
                raise InvalidDistribution(
                    f"module {mod.name} command {i + 1} [{action_names[i]}]: "
                    + "; ".join(problems)
                )
            loc_edges.append(Edge(loc, guard, action_names[i], dist))
            for (_, target), _, _ in dist.items():
                if target not in seen:
                    seen.add(target)
                    order.append(target)
                    queue.append(target)
        edges_by_loc[loc] = loc_edges

    invariant = {}
    for loc in order:
        scope = dict(env)
        scope.update(dict(loc))
        if mod.invariant is None:
            invariant[loc] = TRUE
        else:
            inv = eval_guard(mod.invariant, scope, set(clocks))
            if inv is False:
                if not clocks:
                    raise IptaError(
                        f"invariant of module {mod.name} is false at {location_str(loc)}"
                    )
                inv = (ClockAtom(clocks[0], "<", 0),)
            invariant[loc] = inv

    edges = tuple(e for loc in order for e in edges_by_loc[loc])
    actions = frozenset(action_names.values())
    labels = {loc: frozenset() for loc in order}
    ipta = Ipta(tuple(order), (initial,), actions, clocks, invariant, edges, labels)
    return ipta.check()


def apply_labels(ipta: Ipta, label_table: Dict[str, object], env) -> Ipta:
    """Attach atomic propositions to locations by evaluating label predicates."""
    labels = {}
    for loc in ipta.locations:
        scope = dict(env)
        scope.update(dict(loc))
        present = set()
        for name, pred in label_table.items():
            if eval_pred(pred, scope, {}, {}) is True:
                present.add(name)
        labels[loc] = frozenset(present)
    return Ipta(
        ipta.locations,
        ipta.initial,
        ipta.actions,
        ipta.clocks,
        ipta.invariant,
        ipta.edges,
        labels,
    )
