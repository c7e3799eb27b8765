"""Finite colored structures with binary relations.

Elements are the integers ``0..n-1``.  Every element carries exactly one
color, and relations are plain sets of ordered pairs.  The brute-force
relational algebra here (composition, converse) is the reference that the
faster label machinery is tested against.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import jsonschema

Pair = tuple[int, int]


class StructureError(ValueError):
    """Raised for malformed or invalid structure documents."""


@dataclass(frozen=True)
class Relation:
    n: int
    pairs: frozenset[Pair] = frozenset()

    def __post_init__(self):
        if not isinstance(self.pairs, frozenset):
            object.__setattr__(self, "pairs", frozenset(self.pairs))

    @classmethod
    def diagonal(cls, n: int, elements: Iterable[int] | None = None) -> Relation:
        elements = range(n) if elements is None else elements
        return cls(n, frozenset((i, i) for i in elements))

    @classmethod
    def full(cls, n: int, left: Iterable[int], right: Iterable[int]) -> Relation:
        right = list(right)
        return cls(n, frozenset((a, b) for a in left for b in right))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(sorted(self.pairs))

    def __contains__(self, pair):
        return pair in self.pairs

    def __or__(self, other: Relation) -> Relation:
        _check_same_universe(self, other)
        return Relation(self.n, self.pairs | other.pairs)

    def __and__(self, other: Relation) -> Relation:
        _check_same_universe(self, other)
        return Relation(self.n, self.pairs & other.pairs)

    def __sub__(self, other: Relation) -> Relation:
        _check_same_universe(self, other)
        return Relation(self.n, self.pairs - other.pairs)

    def __le__(self, other: Relation) -> bool:
        return self.pairs <= other.pairs

    def image(self, a: int) -> frozenset[int]:
        """The fiber ``{b : (a, b) in self}``."""
        return frozenset(b for x, b in self.pairs if x == a)

    def is_symmetric(self) -> bool:
        return all((b, a) in self.pairs for a, b in self.pairs)


def _check_same_universe(r: Relation, s: Relation):
    if r.n != s.n:
        raise ValueError(f"universe mismatch: {r.n} != {s.n}")


def relation_compose(r: Relation, s: Relation) -> Relation:
    """All ``(a, c)`` with some ``b`` such that ``(a, b) in r`` and ``(b, c) in s``."""
    _check_same_universe(r, s)
    succ = defaultdict(list)
    for b, c in s.pairs:
        succ[b].append(c)
    return Relation(r.n, frozenset((a, c) for a, b in r.pairs for c in succ.get(b, ())))


def relation_converse(r: Relation) -> Relation:
    return Relation(r.n, frozenset((b, a) for a, b in r.pairs))


@dataclass(frozen=True)
class FiniteStructure:
    """A finite universe split into named colors, plus named binary relations.

    Treat instances as immutable; the mappings are never modified after
    construction by anything in this package.
    """

    n: int
    colors: Mapping[str, frozenset[int]]
    relations: Mapping[str, Relation] = field(default_factory=dict)

    def color_of(self, element: int) -> str:
        for name, members in self.colors.items():
            if element in members:
                return name
        raise KeyError(element)

    def color_names(self) -> list[str]:
        return sorted(self.colors)

    def relation_names(self) -> list[str]:
        return sorted(self.relations)


@dataclass(frozen=True)
class Finding:
    kind: str
    message: str
    location: str = ""

    def __str__(self):
        where = f" at {self.location}" if self.location else ""
        return f"{self.kind}{where}: {self.message}"


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def add(self, kind: str, message: str, location: str = ""):
        self.findings.append(Finding(kind, message, location))

    def kinds(self) -> set[str]:
        return {f.kind for f in self.findings}

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(f) for f in self.findings)


def validate_structure(m: FiniteStructure) -> ValidationReport:
    report = ValidationReport()
    if m.n < 1:
        report.add("empty universe", "a structure needs at least one element", "n")
    owner: dict[int, str] = {}
    for name in m.color_names():
        for x in sorted(m.colors[name]):
            if not 0 <= x < m.n:
                report.add("out of range", f"element {x} not in 0..{m.n - 1}", f"colors.{name}")
            elif x in owner:
                report.add("color overlap", f"element {x} is in both {owner[x]!r} and {name!r}",
                           f"colors.{name}")
            else:
                owner[x] = name
    for x in range(m.n):
        if x not in owner:
            report.add("coverage", f"element {x} has no color", "colors")
    for name in m.relation_names():
        rel = m.relations[name]
        if rel.n != m.n:
            report.add("universe mismatch", f"relation declared over {rel.n} elements",
                       f"relations.{name}")
        for a, b in sorted(rel.pairs):
            if not (0 <= a < m.n and 0 <= b < m.n):
                report.add("out of range", f"pair ({a}, {b}) not in 0..{m.n - 1}",
                           f"relations.{name}")
    return report


STRUCTURE_SCHEMA = {
    "type": "object",
    "properties": {
        "n": {"type": "integer"},
        "colors": {
            "type": "object",
            "additionalProperties": {"type": "array", "items": {"type": "integer"}},
        },
        "relations": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "items": {
                    "type": "array",
                    "items": {"type": "integer"},
                    "minItems": 2,
                    "maxItems": 2,
                },
            },
        },
    },
    "required": ["n", "colors", "relations"],
    "additionalProperties": False,
}


def _load_json(text: str, error_cls=StructureError):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise error_cls(f"malformed document at line {exc.lineno}, column {exc.colno}: {exc.msg}")


def schema_check(doc, schema, error_cls):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise error_cls(f"malformed document at {where}: {exc.message}")


def structure_from_dict(doc: dict) -> FiniteStructure:
    schema_check(doc, STRUCTURE_SCHEMA, StructureError)
    n = doc["n"]
    problems = []
    for name, members in doc["colors"].items():
        if len(set(members)) != len(members):
            problems.append(f"duplicate element at colors.{name}")
    relations = {}
    for name, raw in doc["relations"].items():
        pairs = [tuple(p) for p in raw]
        if len(set(pairs)) != len(pairs):
            problems.append(f"duplicate pair at relations.{name}")
        relations[name] = Relation(n, frozenset(pairs))
    m = FiniteStructure(
        n=n,
        colors={name: frozenset(members) for name, members in doc["colors"].items()},
        relations=relations,
    )
    problems.extend(str(f) for f in validate_structure(m).findings)
    if problems:
        raise StructureError("; ".join(problems))
    return m


def parse_structure(text: str) -> FiniteStructure:
    return structure_from_dict(_load_json(text))


def structure_to_dict(m: FiniteStructure) -> dict:
    return {
        "n": m.n,
        "colors": {name: sorted(m.colors[name]) for name in m.color_names()},
        "relations": {name: [list(p) for p in sorted(m.relations[name].pairs)]
                      for name in m.relation_names()},
    }


def serialize_structure(m: FiniteStructure) -> str:
    """Canonical JSON text; equal structures give identical bytes."""
    return json.dumps(structure_to_dict(m), sort_keys=True) + "\n"


def graph(n: int, edges: Iterable[Pair], color: str = "p", name: str = "E",
          directed: bool = False) -> FiniteStructure:
    """Single-colored structure from an edge list (symmetrized unless ``directed``)."""
    pairs = set()
    for a, b in edges:
        pairs.add((a, b))
        if not directed:
            pairs.add((b, a))
    return FiniteStructure(n, {color: frozenset(range(n))}, {name: Relation(n, frozenset(pairs))})
