"""Model checking for interval probabilistic timed automata over integer time."""

from .automata import Imdp, Ipta
from .intervals import IntervalDistribution, is_minimal, point, product, prune, validate
from .language import parse_model, parse_query
from .solve import SolveSettings, inner_extreme, unreachable_set, value_iteration

__version__ = "0.1.0"

__all__ = [
    "Imdp",
    "Ipta",
    "IntervalDistribution",
    "SolveSettings",
    "inner_extreme",
    "is_minimal",
    "parse_model",
    "parse_query",
    "point",
    "product",
    "prune",
    "unreachable_set",
    "validate",
    "value_iteration",
    "__version__",
]
