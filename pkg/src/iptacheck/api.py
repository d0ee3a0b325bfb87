"""High-level pipeline: text to automaton to transition system to value."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional

from . import encode, intervals, language, solve
from .automata import Edge, Ipta
from .compose import compose_all
from .elaborate import ResolvedModel, apply_labels, resolve
from .errors import IptaError
from .explore import Build, BuildSettings, Prepared, build, prepare
from .language import ModelSource, Query

ENGINES = ("ipta", "ptastar", "sample")


def parse_constant(text: str):
    """Parse a --const value: integer, decimal or a/b rational."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise IptaError(f"cannot parse constant value {text!r}") from exc


def composed_system(
    src: ModelSource, constants: Optional[Dict[str, object]] = None
) -> tuple[Ipta, ResolvedModel]:
    resolved = resolve(src, constants)
    system = compose_all(resolved.modules)
    system = apply_labels(system, resolved.label_table, resolved.env)
    return system, resolved


def apply_engine(system: Ipta, engine: str, sample_value=None) -> Ipta:
    if engine == "ipta":
        return system
    if engine == "ptastar":
        return encode.pta_star(system)
    if engine == "sample":
        if sample_value is None:
            sample_value = encode.default_sample_value(system)
            if sample_value is None:
                return system  # no interval edges: sampling is the identity
        return encode.scalar_sample(system, sample_value)
    raise IptaError(f"unknown engine {engine!r}; expected one of {ENGINES}")


def prune_edges(system: Ipta) -> Ipta:
    edges = tuple(
        Edge(e.source, e.guard, e.action, intervals.prune(e.distribution))
        for e in system.edges
    )
    return Ipta(
        system.locations,
        system.initial,
        system.actions,
        system.clocks,
        system.invariant,
        edges,
        system.labels,
    )


@dataclass
class PipelineResult:
    build: Build
    outcome: Optional[solve.CheckOutcome]


def run_pipeline(
    model_text: str,
    query_text: Optional[str] = None,
    constants: Optional[Dict[str, object]] = None,
    engine: str = "ipta",
    sample_value=None,
    settings: Optional[BuildSettings] = None,
    solve_settings: Optional[solve.SolveSettings] = None,
    prune: bool = False,
) -> PipelineResult:
    src = language.parse_model(model_text)
    system, resolved = composed_system(src, constants)
    if prune:
        system = prune_edges(system)
    system = apply_engine(system, engine, sample_value)
    query = language.parse_query(query_text) if query_text else None
    prep = prepare(system, resolved.env, resolved.label_table, query)
    built = build(prep, settings)
    outcome = solve.check(built, solve_settings) if query is not None else None
    return PipelineResult(built, outcome)
