"""Interval probability distributions over finite outcome sets.

An interval distribution assigns a rational lower and upper probability
bound to every outcome.  It stands for the (non-empty) set of ordinary
probability distributions that respect the bounds pointwise.  All bounds
are exact rationals; floating point enters only inside the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Tuple

from .errors import InvalidDistribution

ZERO = Fraction(0)
ONE = Fraction(1)


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


@dataclass(frozen=True)
class IntervalDistribution:
    """Paired lower/upper bound vectors over an ordered outcome tuple.

    Outcomes whose upper bound is exactly 0 are dropped at construction,
    so ``outcomes`` always equals the support.
    """

    outcomes: Tuple
    lower: Tuple[Fraction, ...]
    upper: Tuple[Fraction, ...]

    @staticmethod
    def of(pairs: Iterable[Tuple[object, object, object]]) -> "IntervalDistribution":
        """Build from (outcome, lower, upper) triples, dropping zero-upper entries."""
        outcomes, lower, upper = [], [], []
        seen = set()
        for outcome, lo, up in pairs:
            if outcome in seen:
                raise InvalidDistribution(f"duplicate outcome {outcome!r}")
            seen.add(outcome)
            lo, up = as_fraction(lo), as_fraction(up)
            if up == 0:
                continue
            outcomes.append(outcome)
            lower.append(lo)
            upper.append(up)
        return IntervalDistribution(tuple(outcomes), tuple(lower), tuple(upper))

    @staticmethod
    def from_map(bounds: Mapping) -> "IntervalDistribution":
        return IntervalDistribution.of((o, lo, up) for o, (lo, up) in bounds.items())

    @property
    def support(self) -> Tuple:
        return self.outcomes

    def bounds(self, outcome) -> Tuple[Fraction, Fraction]:
        i = self.outcomes.index(outcome)
        return self.lower[i], self.upper[i]

    def items(self):
        return zip(self.outcomes, self.lower, self.upper)

    def as_map(self):
        return {o: (lo, up) for o, lo, up in self.items()}

    def is_point(self) -> bool:
        return all(lo == up for lo, up in zip(self.lower, self.upper))

    def __str__(self):
        inner = ", ".join(f"{o}:[{lo},{up}]" for o, lo, up in self.items())
        return "{" + inner + "}"


def point(outcome) -> IntervalDistribution:
    """The distribution assigning probability exactly 1 to a single outcome."""
    return IntervalDistribution((outcome,), (ONE,), (ONE,))


def validate(d: IntervalDistribution):
    """Check the definitional invariants; return a list of violation strings.

    An empty list means the distribution is valid.  Total function: never raises.
    """
    problems = []
    if not d.outcomes:
        problems.append("support is empty")
    for o, lo, up in d.items():
        if not (ZERO <= lo <= ONE):
            problems.append(f"lower bound of {o} outside [0,1]: {lo}")
        if not (ZERO <= up <= ONE):
            problems.append(f"upper bound of {o} outside [0,1]: {up}")
        if lo > up:
            problems.append(f"lower bound of {o} exceeds upper: {lo} > {up}")
    total_lo = sum(d.lower, ZERO)
    total_up = sum(d.upper, ZERO)
    if total_lo > ONE:
        problems.append(f"sum of lower bounds exceeds 1: {total_lo}")
    if d.outcomes and total_up < ONE:
        problems.append(f"sum of upper bounds below 1: {total_up}")
    return problems


def require_valid(d: IntervalDistribution):
    problems = validate(d)
    if problems:
        raise InvalidDistribution("; ".join(problems))


def is_minimal(d: IntervalDistribution) -> bool:
    """True iff every individual bound is attainable by a conforming distribution.

    Condition 1: upper(s) plus the other lower bounds must not exceed 1.
    Condition 2: lower(s) plus the other upper bounds must reach 1.
    """
    require_valid(d)
    total_lo = sum(d.lower, ZERO)
    total_up = sum(d.upper, ZERO)
    for lo, up in zip(d.lower, d.upper):
        if up + (total_lo - lo) > ONE:
            return False
        if lo + (total_up - up) < ONE:
            return False
    return True


def minimality_report(d: IntervalDistribution):
    """Like is_minimal but names the violated condition per outcome."""
    require_valid(d)
    total_lo = sum(d.lower, ZERO)
    total_up = sum(d.upper, ZERO)
    report = []
    for o, lo, up in d.items():
        if up + (total_lo - lo) > ONE:
            report.append((o, 1))
        if lo + (total_up - up) < ONE:
            report.append((o, 2))
    return report


def prune(d: IntervalDistribution) -> IntervalDistribution:
    """Tighten unattainable bounds without changing the conforming set.

    The tightest bounds are the pointwise extrema over conforming
    distributions:  sup mu(s) = min(upper(s), 1 - sum of other lowers) and
    inf mu(s) = max(lower(s), 1 - sum of other uppers).  Computing both in
    one pass from the original bounds lands directly on the fixpoint of the
    per-condition tightening rules, and the result is minimal.
    """
    require_valid(d)
    total_lo = sum(d.lower, ZERO)
    total_up = sum(d.upper, ZERO)
    new_lower = []
    new_upper = []
    for lo, up in zip(d.lower, d.upper):
        new_upper.append(min(up, ONE - (total_lo - lo)))
        new_lower.append(max(lo, ONE - (total_up - up)))
    return IntervalDistribution(d.outcomes, tuple(new_lower), tuple(new_upper))


def product(d1: IntervalDistribution, d2: IntervalDistribution) -> IntervalDistribution:
    """Pairwise product over the cartesian product of the supports."""
    require_valid(d1)
    require_valid(d2)
    outcomes, lower, upper = [], [], []
    for o1, lo1, up1 in d1.items():
        for o2, lo2, up2 in d2.items():
            outcomes.append((o1, o2))
            lower.append(lo1 * lo2)
            upper.append(up1 * up2)
    return IntervalDistribution(tuple(outcomes), tuple(lower), tuple(upper))


def conforms(d: IntervalDistribution, mu: Mapping) -> bool:
    """Does the ordinary distribution mu respect d's bounds and sum to 1?"""
    total = sum((as_fraction(p) for p in mu.values()), ZERO)
    if total != ONE:
        return False
    for o, lo, up in d.items():
        p = as_fraction(mu.get(o, ZERO))
        if not (lo <= p <= up):
            return False
    for o, p in mu.items():
        if o not in d.outcomes and as_fraction(p) != ZERO:
            return False
    return True


def aggregate(pairs: Iterable[Tuple[object, Fraction, Fraction]]) -> IntervalDistribution:
    """Sum bounds of outcomes that collapse to the same target.

    Used when distinct reset-set/location outcomes map to one successor
    state.  Summed upper bounds are clamped at 1, which preserves the
    conforming set (no single outcome can carry more than probability 1).
    Lower bounds are left unclamped so that an infeasible merge (summed
    lower bounds above 1) is still caught by validate.
    """
    acc = {}
    order = []
    for outcome, lo, up in pairs:
        if outcome in acc:
            alo, aup = acc[outcome]
            acc[outcome] = (alo + lo, aup + up)
        else:
            acc[outcome] = (lo, up)
            order.append(outcome)
    return IntervalDistribution.of(
        (o, acc[o][0], min(acc[o][1], ONE)) for o in order
    )
