"""Exemplar inputs shipped with the package."""

from __future__ import annotations

from importlib import resources

from .structure import FiniteStructure, parse_structure
from .synth import SynthSpec, parse_spec

STRUCTURES = ("point", "p3", "c5", "dicycle3", "petersen", "paley9")
SPECS = ("random_graph_spec",)


def fixture_path(name: str):
    return resources.files("semiso") / "fixtures" / f"{name}.json"


def load_structure(name: str) -> FiniteStructure:
    return parse_structure(fixture_path(name).read_text())


def load_spec(name: str) -> SynthSpec:
    return parse_spec(fixture_path(name).read_text())
