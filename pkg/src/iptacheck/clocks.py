"""Clock constraints and integer clock valuations.

Constraint bounds are restricted to non-negative integers so that the
integer-time semantics is exact for closed constraints.  Conjunction is
the only connective: a constraint is a tuple of atomic bounds, the empty
tuple meaning ``true``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Tuple

OPS = ("<=", "<", ">", ">=")

_EVAL = {
    "<=": lambda a, c: a <= c,
    "<": lambda a, c: a < c,
    ">": lambda a, c: a > c,
    ">=": lambda a, c: a >= c,
}


@dataclass(frozen=True)
class ClockAtom:
    """A single bound: ``clock op bound`` or ``clock - clock2 op bound``."""

    clock: str
    op: str
    bound: int
    clock2: str | None = None  # set for difference (diagonal) atoms

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"bad comparison operator {self.op!r}")
        if self.bound < 0 or not isinstance(self.bound, int):
            raise ValueError(f"clock bound must be a non-negative integer: {self.bound}")

    @property
    def is_diagonal(self) -> bool:
        return self.clock2 is not None

    def holds(self, values: Dict[str, int]) -> bool:
        left = values[self.clock]
        if self.clock2 is not None:
            left -= values[self.clock2]
        return _EVAL[self.op](left, self.bound)

    def clocks(self):
        return (self.clock,) if self.clock2 is None else (self.clock, self.clock2)

    def __str__(self):
        lhs = self.clock if self.clock2 is None else f"{self.clock}-{self.clock2}"
        return f"{lhs}{self.op}{self.bound}"


ClockConstraint = Tuple[ClockAtom, ...]

TRUE: ClockConstraint = ()


def conjoin(*constraints: ClockConstraint) -> ClockConstraint:
    out = []
    for c in constraints:
        out.extend(c)
    return tuple(out)


def satisfies(values: Dict[str, int], constraint: ClockConstraint) -> bool:
    return all(atom.holds(values) for atom in constraint)


def constraint_str(constraint: ClockConstraint) -> str:
    if not constraint:
        return "true"
    return " & ".join(str(a) for a in constraint)


@dataclass(frozen=True)
class ClockValuation:
    """Immutable map from clock name to a non-negative integer value."""

    values: Tuple[Tuple[str, int], ...]

    @staticmethod
    def of(mapping: Dict[str, int]) -> "ClockValuation":
        for name, v in mapping.items():
            if v < 0:
                raise ValueError(f"negative clock value for {name}: {v}")
        return ClockValuation(tuple(sorted(mapping.items())))

    def as_dict(self) -> Dict[str, int]:
        return dict(self.values)

    def __getitem__(self, clock: str) -> int:
        for name, v in self.values:
            if name == clock:
                return v
        raise KeyError(clock)

    def reset(self, clocks: Iterable[str]) -> "ClockValuation":
        reset_set = set(clocks)
        return ClockValuation(
            tuple((n, 0 if n in reset_set else v) for n, v in self.values)
        )

    def advance(self, d: int) -> "ClockValuation":
        return ClockValuation(tuple((n, v + d) for n, v in self.values))

    def satisfies(self, constraint: ClockConstraint) -> bool:
        return satisfies(self.as_dict(), constraint)
