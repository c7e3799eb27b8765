"""Label algebras of finite structures.

Atoms are the automorphism orbits on ordered pairs.  A label with source
type ``p`` and target type ``q`` is any set of ``(p, q)``-atoms, stored as
an integer bitmask over the global atom ids, so the labels of one type
pair form the full powerset Boolean algebra.  Composition is driven by the
atom-level table ``comp[s, t]``, which is computed once from the concrete
pair sets.

Conventions: the empty label is *bottom*, the equality atom of a type is
its *zero* label, and every other nonempty label is *positive*.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .orbits import find_automorphisms, pair_atoms, point_orbits
from .structure import (
    Finding,
    FiniteStructure,
    Relation,
    _load_json,
    relation_compose,
    schema_check,
)


class AlgebraError(ValueError):
    """Raised for malformed algebra documents and ill-typed label operations."""


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def mask_of(ids: Iterable[int]) -> int:
    mask = 0
    for i in ids:
        mask |= 1 << i
    return mask


@dataclass(frozen=True)
class TypeInfo:
    id: str
    size: int | None  # None stands for an infinite type
    color: str | None = None


@dataclass(frozen=True)
class AtomInfo:
    id: int
    src: str
    dst: str
    converse: int
    is_equality: bool


@dataclass(frozen=True)
class Label:
    src: str
    dst: str
    mask: int

    @property
    def atoms(self) -> frozenset[int]:
        return frozenset(iter_bits(self.mask))

    def __str__(self):
        return "{" + ",".join(str(i) for i in sorted(self.atoms)) + "}"


@dataclass(frozen=True)
class LabelAlgebra:
    types: tuple[TypeInfo, ...]
    atoms: tuple[AtomInfo, ...]
    comp: dict[tuple[int, int], int]
    # Only present for algebras extracted from a concrete structure.
    pairs: tuple[Relation, ...] | None = None
    blocks: dict[str, frozenset[int]] | None = None
    group_order: int | None = None
    split_colors: dict[str, list[str]] = field(default_factory=dict)

    def type_ids(self) -> list[str]:
        return [t.id for t in self.types]

    def type_info(self, p: str) -> TypeInfo:
        for t in self.types:
            if t.id == p:
                return t
        raise AlgebraError(f"unknown type {p!r}")

    def atoms_between(self, p: str, q: str) -> list[int]:
        return [a.id for a in self.atoms if a.src == p and a.dst == q]

    def atom_mask(self, p: str, q: str) -> int:
        return mask_of(self.atoms_between(p, q))

    def type_pairs(self) -> list[tuple[str, str]]:
        ids = self.type_ids()
        return [(p, q) for p in ids for q in ids if self.atoms_between(p, q)]

    def equality_atom(self, p: str) -> int | None:
        for a in self.atoms:
            if a.is_equality and a.src == p and a.dst == p:
                return a.id
        return None

    def composable(self) -> Iterator[tuple[int, int]]:
        for s in self.atoms:
            for t in self.atoms:
                if s.dst == t.src:
                    yield s.id, t.id

    def label(self, p: str, q: str, atoms: Iterable[int] = ()) -> Label:
        mask = mask_of(atoms)
        stray = mask & ~self.atom_mask(p, q)
        if stray:
            raise AlgebraError(f"atoms {sorted(iter_bits(stray))} are not ({p},{q})-atoms")
        return Label(p, q, mask)

    def label_from_atoms(self, atoms: Iterable[int]) -> Label:
        """Label from a nonempty atom list, reading the type pair off the atoms."""
        atoms = list(atoms)
        if not atoms:
            raise AlgebraError("cannot infer the type pair of an empty atom list")
        for i in atoms:
            if not 0 <= i < len(self.atoms):
                raise AlgebraError(f"unknown atom id {i}")
        kinds = {(self.atoms[i].src, self.atoms[i].dst) for i in atoms}
        if len(kinds) != 1:
            raise AlgebraError(f"atoms {sorted(atoms)} span several type pairs {sorted(kinds)}")
        (p, q), = kinds
        return Label(p, q, mask_of(atoms))

    def top(self, p: str, q: str) -> Label:
        return Label(p, q, self.atom_mask(p, q))

    def bottom(self, p: str, q: str) -> Label:
        return Label(p, q, 0)

    def zero(self, p: str) -> Label:
        e = self.equality_atom(p)
        if e is None:
            raise AlgebraError(f"type {p!r} has no equality atom")
        return Label(p, p, 1 << e)

    def labels(self, p: str, q: str) -> Iterator[Label]:
        ids = self.atoms_between(p, q)
        for bits in range(1 << len(ids)):
            yield Label(p, q, mask_of(ids[k] for k in range(len(ids)) if bits >> k & 1))

    def relation_of(self, u: Label) -> Relation:
        """Concrete pair set of a label (extracted algebras only)."""
        if self.pairs is None:
            raise AlgebraError("algebra carries no pair sets")
        out = set()
        for i in iter_bits(u.mask):
            out |= self.pairs[i].pairs
        return Relation(self.pairs[0].n, frozenset(out))

    def label_of_relation(self, r: Relation, p: str, q: str) -> Label:
        """Atoms of ``(p, q)`` wholly inside ``r``; raise if ``r`` cuts an atom."""
        mask = 0
        for i in self.atoms_between(p, q):
            inside = self.pairs[i].pairs & r.pairs
            if inside == self.pairs[i].pairs:
                mask |= 1 << i
            elif inside:
                raise AlgebraError(f"relation is not a union of atoms (cuts atom {i})")
        return Label(p, q, mask)


def _same_kind(u: Label, w: Label):
    if (u.src, u.dst) != (w.src, w.dst):
        raise AlgebraError(f"labels over ({u.src},{u.dst}) and ({w.src},{w.dst}) do not match")


def meet(u: Label, w: Label) -> Label:
    _same_kind(u, w)
    return Label(u.src, u.dst, u.mask & w.mask)


def join(u: Label, w: Label) -> Label:
    _same_kind(u, w)
    return Label(u.src, u.dst, u.mask | w.mask)


def leq(u: Label, w: Label) -> bool:
    _same_kind(u, w)
    return u.mask & ~w.mask == 0


def complement_label(alg: LabelAlgebra, u: Label) -> Label:
    """Relative complement inside the top label of ``(src, dst)``."""
    top = alg.atom_mask(u.src, u.dst)
    return Label(u.src, u.dst, top & ~u.mask)


def compose_labels(alg: LabelAlgebra, u: Label, w: Label) -> Label:
    if u.dst != w.src:
        raise AlgebraError(f"cannot compose ({u.src},{u.dst}) with ({w.src},{w.dst})")
    mask = 0
    for s in iter_bits(u.mask):
        for t in iter_bits(w.mask):
            mask |= alg.comp.get((s, t), 0)
    return Label(u.src, w.dst, mask)


def classify_label(alg: LabelAlgebra, u: Label) -> str:
    if u.mask == 0:
        return "bottom"
    if u.src == u.dst:
        e = alg.equality_atom(u.src)
        if e is not None and u.mask == 1 << e:
            return "zero"
    return "positive"


def extract_algebra(m: FiniteStructure) -> LabelAlgebra:
    group = find_automorphisms(m)
    partition = point_orbits(group, m)
    table = pair_atoms(group, partition)
    atoms = tuple(AtomInfo(a.id, a.src, a.dst, a.converse, a.is_equality) for a in table.atoms)
    pairs = tuple(a.pairs for a in table.atoms)
    by_pair = table.by_pair
    comp = {}
    for s in table.atoms:
        for t in table.atoms:
            if s.dst != t.src:
                continue
            r = relation_compose(s.pairs, t.pairs)
            comp[(s.id, t.id)] = mask_of(
                u for u in by_pair.get((s.src, t.dst), ()) if pairs[u].pairs <= r.pairs)
    types = tuple(TypeInfo(b.id, len(b.elements), b.color) for b in partition.blocks)
    return LabelAlgebra(
        types=types,
        atoms=atoms,
        comp=comp,
        pairs=pairs,
        blocks={b.id: b.elements for b in partition.blocks},
        group_order=group.order,
        split_colors=partition.split_colors(),
    )


@dataclass
class LabelCheck:
    label: Label
    kind: str
    has_complement: bool
    meet_with_complement_empty: bool
    join_with_complement_maximal: bool

    @property
    def ok(self):
        return self.has_complement and self.meet_with_complement_empty and \
            self.join_with_complement_maximal


@dataclass
class PropositionReport:
    labels: list[LabelCheck] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=lambda: {"bottom": 0, "zero": 0, "positive": 0})
    label_counts: dict[tuple[str, str], tuple[int, int]] = field(default_factory=dict)
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def add(self, kind, message, location=""):
        self.findings.append(Finding(kind, message, location))

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "labels_checked": len(self.labels),
            "counts": dict(self.counts),
            "label_counts": [
                {"src": p, "dst": q, "labels": c, "expected": e}
                for (p, q), (c, e) in self.label_counts.items()
            ],
            "findings": [{"kind": f.kind, "message": f.message, "location": f.location}
                         for f in self.findings],
        }


def check_table(alg: LabelAlgebra, report) -> None:
    """Atom-table laws shared by extracted algebras and synthesis specs.

    ``report`` only needs an ``add(kind, message, location)`` method.
    """
    n_atoms = len(alg.atoms)
    type_ids = set(alg.type_ids())
    for a in alg.atoms:
        if a.src not in type_ids or a.dst not in type_ids:
            report.add("typing", f"atom {a.id} uses an unknown type", f"atoms.{a.id}")
            continue
        if not 0 <= a.converse < n_atoms:
            report.add("converse", f"atom {a.id} has unknown converse {a.converse}", f"atoms.{a.id}")
            continue
        c = alg.atoms[a.converse]
        if c.converse != a.id:
            report.add("converse", f"converse is not an involution at atom {a.id}", f"atoms.{a.id}")
        if (c.src, c.dst) != (a.dst, a.src):
            report.add("converse", f"converse of atom {a.id} has the wrong types", f"atoms.{a.id}")
        if a.is_equality and (a.src != a.dst or a.converse != a.id):
            report.add("equality", f"equality atom {a.id} must be a self-converse (p,p)-atom",
                       f"atoms.{a.id}")
    for t in alg.types:
        eqs = [a.id for a in alg.atoms if a.is_equality and a.src == t.id]
        if len(eqs) != 1:
            report.add("equality", f"type {t.id!r} has {len(eqs)} equality atoms", f"types.{t.id}")
    for p in alg.type_ids():
        for q in alg.type_ids():
            if not alg.atoms_between(p, q):
                report.add("coverage", f"no atoms for type pair ({p},{q})", f"types.{p}")

    for s, t in alg.composable():
        res = alg.comp.get((s, t), 0)
        where = f"comp.{s}.{t}"
        if res == 0:
            report.add("comp-empty", f"comp({s},{t}) is empty", where)
            continue
        want = alg.atom_mask(alg.atoms[s].src, alg.atoms[t].dst)
        if res & ~want:
            report.add("comp-typing", f"comp({s},{t}) contains atoms of the wrong type pair", where)
        sc, tc = alg.atoms[s].converse, alg.atoms[t].converse
        if 0 <= sc < n_atoms and 0 <= tc < n_atoms:
            mirrored = mask_of(alg.atoms[u].converse for u in iter_bits(res)
                               if 0 <= alg.atoms[u].converse < n_atoms)
            if alg.comp.get((tc, sc), 0) != mirrored:
                report.add("converse-coherence", f"comp({tc},{sc}) is not the converse of comp({s},{t})",
                           where)
        if alg.atoms[s].is_equality and res != 1 << t:
            report.add("identity", f"comp({s},{t}) = {sorted(iter_bits(res))}, expected [{t}]", where)
        if alg.atoms[t].is_equality and res != 1 << s:
            report.add("identity", f"comp({s},{t}) = {sorted(iter_bits(res))}, expected [{s}]", where)


def check_proposition(alg: LabelAlgebra) -> PropositionReport:
    report = PropositionReport()
    check_table(alg, report)

    for p, q in alg.type_pairs():
        top = alg.top(p, q)
        count = 0
        for u in alg.labels(p, q):
            count += 1
            kind = classify_label(alg, u)
            report.counts[kind] += 1
            ubar = complement_label(alg, u)
            has = ubar.mask & ~top.mask == 0
            check = LabelCheck(u, kind, has, meet(u, ubar).mask == 0, join(u, ubar) == top)
            report.labels.append(check)
            if not check.ok:
                report.add("complement", f"label {u} over ({p},{q}) fails the complement law")
        k = len(alg.atoms_between(p, q))
        report.label_counts[(p, q)] = (count, 2 ** k)
        if count != 2 ** k:
            report.add("finiteness", f"({p},{q}) has {count} labels, expected {2 ** k}")
        if alg.pairs is not None and alg.blocks is not None:
            whole = Relation.full(alg.pairs[0].n, alg.blocks[p], alg.blocks[q])
            if alg.relation_of(top) != whole:
                report.add("top", f"top of ({p},{q}) is not the full product of its types")

    if not any(f.kind in ("comp-typing", "typing") for f in report.findings):
        _check_associativity(alg, report)
    return report


def _check_associativity(alg: LabelAlgebra, report) -> None:
    for s, t in alg.composable():
        for r in alg.atoms:
            if alg.atoms[t].dst != r.src:
                continue
            a, b, c = (Label(x.src, x.dst, 1 << x.id) for x in (alg.atoms[s], alg.atoms[t], r))
            left = compose_labels(alg, compose_labels(alg, a, b), c)
            right = compose_labels(alg, a, compose_labels(alg, b, c))
            if left != right:
                report.add("associativity", f"({s}.{t}).{r.id} != {s}.({t}.{r.id})")
                return


def monoid_closure(alg: LabelAlgebra, p: str, generators: Iterable[Label] | None = None) -> frozenset[Label]:
    """Close a set of ``(p, p)`` labels under composition.

    By default the generators are the whole Boolean algebra of ``(p, p)``
    labels.
    """
    alg.type_info(p)
    gens = list(alg.labels(p, p)) if generators is None else list(generators)
    for g in gens:
        if (g.src, g.dst) != (p, p):
            raise AlgebraError(f"generator {g} is not a ({p},{p}) label")
    seen = set(gens)
    frontier = list(seen)
    while frontier:
        nxt = []
        for u in frontier:
            for w in list(seen):
                for x in (compose_labels(alg, u, w), compose_labels(alg, w, u)):
                    if x not in seen:
                        seen.add(x)
                        nxt.append(x)
        frontier = nxt
    return frozenset(seen)


def is_closed(alg: LabelAlgebra, labels: frozenset[Label]) -> bool:
    return all(compose_labels(alg, u, w) in labels for u in labels for w in labels)


@dataclass(frozen=True)
class Isomorphism:
    types: dict[str, str]
    atoms: dict[int, int]


def _refine_colors(algs):
    """Joint color refinement of the atoms of several algebras.

    Colors depend only on table structure, so matching atoms across an
    isomorphism always share a color.
    """
    def initial(alg, a):
        return (a.is_equality, a.converse == a.id, len(alg.atoms_between(a.src, a.dst)),
                alg.type_info(a.src).size is None, alg.type_info(a.dst).size is None)

    colors = [[initial(alg, a) for a in alg.atoms] for alg in algs]
    colors = _canon(colors)
    while True:
        sigs = []
        for alg, col in zip(algs, colors):
            right = defaultdict(list)
            left = defaultdict(list)
            for s, t in alg.composable():
                res = tuple(sorted(col[u] for u in iter_bits(alg.comp.get((s, t), 0))))
                right[s].append((col[t], res))
                left[t].append((col[s], res))
            sigs.append([(col[a.id], col[a.converse], tuple(sorted(right[a.id])),
                          tuple(sorted(left[a.id]))) for a in alg.atoms])
        new = _canon(sigs)
        if all(len(set(n)) == len(set(c)) for n, c in zip(new, colors)):
            return new
        colors = new


def _canon(sigs):
    values = sorted({s for col in sigs for s in col})
    index = {s: i for i, s in enumerate(values)}
    return [[index[s] for s in col] for col in sigs]


def algebra_isomorphic(a: LabelAlgebra, b: LabelAlgebra) -> Isomorphism | None:
    """A type and atom bijection preserving typing, converse, equality and comp."""
    if len(a.types) != len(b.types) or len(a.atoms) != len(b.atoms):
        return None
    col_a, col_b = _refine_colors([a, b])
    if sorted(col_a) != sorted(col_b):
        return None
    candidates = defaultdict(list)
    for t in b.atoms:
        candidates[col_b[t.id]].append(t.id)
    order = sorted(range(len(a.atoms)), key=lambda s: (len(candidates[col_a[s]]), s))
    amap: dict[int, int] = {}
    used: set[int] = set()
    tmap: dict[str, str] = {}

    def consistent(s):
        x = amap[s]
        for t, y in amap.items():
            for (u, v), (uu, vv) in (((s, t), (x, y)), ((t, s), (y, x))):
                if a.atoms[u].dst != a.atoms[v].src:
                    continue
                res = a.comp.get((u, v), 0)
                img = b.comp.get((uu, vv), 0)
                if popcount(res) != popcount(img):
                    return False
                if any(amap[w] not in set(iter_bits(img)) for w in iter_bits(res) if w in amap):
                    return False
        return True

    def assign(s, x, added):
        if s in amap:
            return amap[s] == x
        if x in used:
            return False
        sa, xb = a.atoms[s], b.atoms[x]
        for p, q in ((sa.src, xb.src), (sa.dst, xb.dst)):
            if tmap.get(p, q) != q or (p not in tmap and q in tmap.values()):
                return False
            if p not in tmap:
                tmap[p] = q
                added.append(("t", p))
        amap[s] = x
        used.add(x)
        added.append(("a", s))
        return consistent(s)

    def undo(added):
        for kind, key in reversed(added):
            if kind == "t":
                del tmap[key]
            else:
                used.discard(amap.pop(key))

    def search(k):
        if k == len(order):
            return True
        s = order[k]
        if s in amap:
            return search(k + 1)
        for x in candidates[col_a[s]]:
            added = []
            ok = assign(s, x, added) and assign(a.atoms[s].converse, b.atoms[x].converse, added)
            if ok and search(k + 1):
                return True
            undo(added)
        return False

    if not search(0):
        return None
    for (s, t), res in a.comp.items():
        if mask_of(amap[u] for u in iter_bits(res)) != b.comp.get((amap[s], amap[t]), 0):
            return None
    return Isomorphism(dict(tmap), dict(amap))


ALGEBRA_SCHEMA = {
    "type": "object",
    "properties": {
        "types": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "string"},
                    "size": {"oneOf": [{"type": "integer", "minimum": 1}, {"const": "inf"}]},
                },
                "required": ["id", "size"],
                "additionalProperties": False,
            },
        },
        "atoms": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "integer"},
                    "src": {"type": "string"},
                    "dst": {"type": "string"},
                    "converse": {"type": "integer"},
                    "is_equality": {"type": "boolean"},
                },
                "required": ["id", "src", "dst", "converse", "is_equality"],
                "additionalProperties": False,
            },
        },
        "comp": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "s": {"type": "integer"},
                    "t": {"type": "integer"},
                    "result": {"type": "array", "items": {"type": "integer"}},
                },
                "required": ["s", "t", "result"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["types", "atoms", "comp"],
    "additionalProperties": False,
}


def algebra_to_dict(alg: LabelAlgebra) -> dict:
    return {
        "types": [{"id": t.id, "size": "inf" if t.size is None else t.size} for t in alg.types],
        "atoms": [{"id": a.id, "src": a.src, "dst": a.dst, "converse": a.converse,
                   "is_equality": a.is_equality} for a in alg.atoms],
        "comp": [{"s": s, "t": t, "result": sorted(iter_bits(alg.comp.get((s, t), 0)))}
                 for s, t in alg.composable()],
    }


def serialize_algebra(alg: LabelAlgebra) -> str:
    return json.dumps(algebra_to_dict(alg), indent=1) + "\n"


def algebra_from_dict(doc: dict) -> LabelAlgebra:
    """Build an algebra from a document.

    Only referential problems raise here; broken laws (converse not an
    involution, bad comp entries) are left for the checkers to report.
    """
    schema_check(doc, ALGEBRA_SCHEMA, AlgebraError)
    type_ids = [t["id"] for t in doc["types"]]
    if len(set(type_ids)) != len(type_ids):
        raise AlgebraError("duplicate type id in types")
    ids = sorted(a["id"] for a in doc["atoms"])
    if ids != list(range(len(ids))):
        raise AlgebraError("atom ids must be exactly 0..k-1")
    atoms = sorted(doc["atoms"], key=lambda a: a["id"])
    for a in atoms:
        for key in ("src", "dst"):
            if a[key] not in type_ids:
                raise AlgebraError(f"atoms/{a['id']}/{key}: unknown type {a[key]!r}")
        if not 0 <= a["converse"] < len(atoms):
            raise AlgebraError(f"atoms/{a['id']}/converse: unknown atom {a['converse']}")
    comp = {}
    for k, entry in enumerate(doc["comp"]):
        s, t = entry["s"], entry["t"]
        for x in (s, t, *entry["result"]):
            if not 0 <= x < len(atoms):
                raise AlgebraError(f"comp/{k}: unknown atom {x}")
        if atoms[s]["dst"] != atoms[t]["src"]:
            raise AlgebraError(f"comp/{k}: atoms {s} and {t} are not composable")
        if (s, t) in comp:
            raise AlgebraError(f"comp/{k}: duplicate entry for ({s},{t})")
        comp[(s, t)] = mask_of(entry["result"])
    return LabelAlgebra(
        types=tuple(TypeInfo(t["id"], None if t["size"] == "inf" else t["size"]) for t in doc["types"]),
        atoms=tuple(AtomInfo(a["id"], a["src"], a["dst"], a["converse"], a["is_equality"])
                    for a in atoms),
        comp=comp,
    )


def parse_algebra(text: str) -> LabelAlgebra:
    return algebra_from_dict(_load_json(text, AlgebraError))


_PALETTE = ["black", "red", "blue", "darkgreen", "orange", "purple", "brown", "gray"]
_STYLES = ["solid", "dashed", "dotted", "bold"]


def to_dot(alg: LabelAlgebra) -> str:
    """One digraph per type pair; each non-equality atom gets its own edge style."""
    if alg.pairs is None or alg.blocks is None:
        raise AlgebraError("DOT export needs an algebra extracted from a structure")
    out = []
    for p, q in alg.type_pairs():
        lines = [f'digraph "{p}->{q}" {{']
        for x in sorted(alg.blocks[p] | alg.blocks[q]):
            lines.append(f"  {x};")
        for i in alg.atoms_between(p, q):
            if alg.atoms[i].is_equality:
                continue
            color = _PALETTE[i % len(_PALETTE)]
            style = _STYLES[(i // len(_PALETTE)) % len(_STYLES)]
            for a, b in sorted(alg.pairs[i].pairs):
                lines.append(f'  {a} -> {b} [label="{i}", color={color}, style={style}];')
        lines.append("}")
        out.append("\n".join(lines))
    return "\n\n".join(out) + "\n"
