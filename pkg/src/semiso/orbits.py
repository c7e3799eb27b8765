"""Automorphism groups of finite structures and their orbits.

The group is found by an individualize-and-refine search.  Along the
leftmost path of the search tree each level contributes the size of one
basic orbit, so the order comes out exactly as a product of orbit lengths
(orbit-stabilizer along the stabilizer chain of the base).
"""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .structure import FiniteStructure, Relation

Perm = tuple[int, ...]


@dataclass(frozen=True)
class PermGroup:
    degree: int
    generators: tuple[Perm, ...]
    order: int

    def elements(self) -> set[Perm]:
        """Every group element, by closing the generators under products."""
        identity = tuple(range(self.degree))
        seen = {identity}
        frontier = [identity]
        while frontier:
            nxt = []
            for g in frontier:
                for h in self.generators:
                    gh = tuple(h[g[i]] for i in range(self.degree))
                    if gh not in seen:
                        seen.add(gh)
                        nxt.append(gh)
            frontier = nxt
        return seen

    def orbits(self) -> list[list[int]]:
        return _orbits(self.degree, self.generators)


def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _union_classes(size, maps):
    """Classes of ``range(size)`` under the equivalence generated by ``maps``."""
    parent = list(range(size))
    for f in maps:
        for x in range(size):
            a, b = _find(parent, x), _find(parent, f(x))
            if a != b:
                parent[max(a, b)] = min(a, b)
    classes = defaultdict(list)
    for x in range(size):
        classes[_find(parent, x)].append(x)
    return sorted(classes.values())


def _orbits(degree, generators):
    return _union_classes(degree, [g.__getitem__ for g in generators])


def is_automorphism(perm: Perm, m: FiniteStructure) -> bool:
    for members in m.colors.values():
        if any(perm[x] not in members for x in members):
            return False
    for rel in m.relations.values():
        if any((perm[a], perm[b]) not in rel.pairs for a, b in rel.pairs):
            return False
    return True


def automorphisms_bruteforce(m: FiniteStructure) -> set[Perm]:
    """Filter all ``n!`` permutations.  Test oracle only."""
    if m.n > 9:
        raise ValueError(f"brute-force enumeration refused for n={m.n} > 9")
    return {p for p in itertools.permutations(range(m.n)) if is_automorphism(p, m)}


class _Refiner:
    def __init__(self, m: FiniteStructure):
        self.m = m
        self.adj = []  # (relation index, direction) -> neighbor lists
        self.loops = [[] for _ in range(m.n)]
        for r, name in enumerate(m.relation_names()):
            out = [[] for _ in range(m.n)]
            inn = [[] for _ in range(m.n)]
            for a, b in m.relations[name].pairs:
                if a == b:
                    self.loops[a].append(r)
                else:
                    out[a].append(b)
                    inn[b].append(a)
            self.adj.append((r, 0, out))
            self.adj.append((r, 1, inn))

    def initial(self) -> list[list[int]]:
        cells = [sorted(self.m.colors[c]) for c in self.m.color_names() if self.m.colors[c]]
        return self.refine(cells)

    def _signature(self, x, cell_of):
        counts = Counter()
        for r, d, lists in self.adj:
            for y in lists[x]:
                counts[(r, d, cell_of[y])] += 1
        return tuple(self.loops[x]), tuple(sorted(counts.items()))

    def refine(self, cells: list[list[int]]) -> list[list[int]]:
        """Split cells by neighbor counts until stable.

        New cells are ordered by signature, never by element label, so the
        result is equivariant under relabeling by automorphisms.
        """
        while True:
            cell_of = {}
            for i, cell in enumerate(cells):
                for x in cell:
                    cell_of[x] = i
            new = []
            for cell in cells:
                if len(cell) == 1:
                    new.append(cell)
                    continue
                groups = defaultdict(list)
                for x in cell:
                    groups[self._signature(x, cell_of)].append(x)
                for key in sorted(groups):
                    new.append(groups[key])
            if len(new) == len(cells):
                return new
            cells = new

    def individualize(self, cells, index, v):
        cell = cells[index]
        rest = [x for x in cell if x != v]
        return self.refine(cells[:index] + [[v], rest] + cells[index + 1:])


def _target(cells):
    for i, cell in enumerate(cells):
        if len(cell) > 1:
            return i
    return None


def _shape(cells):
    return [len(c) for c in cells]


def find_automorphisms(m: FiniteStructure) -> PermGroup:
    refiner = _Refiner(m)
    path = []  # (partition, target cell index, chosen point)
    cells = refiner.initial()
    while (i := _target(cells)) is not None:
        v = min(cells[i])
        path.append((cells, i, v))
        cells = refiner.individualize(cells, i, v)
    leaf = [c[0] for c in cells]
    shapes = [_shape(p) for p, _, _ in path] + [_shape(cells)]

    def search(cells, depth):
        if _shape(cells) != shapes[depth]:
            return None
        i = _target(cells)
        if i is None:
            perm = [0] * m.n
            for x, c in zip(leaf, cells):
                perm[x] = c[0]
            perm = tuple(perm)
            return perm if is_automorphism(perm, m) else None
        for v in sorted(cells[i]):
            found = search(refiner.individualize(cells, i, v), depth + 1)
            if found is not None:
                return found
        return None

    generators: list[Perm] = []
    order = 1
    for depth in reversed(range(len(path))):
        cells_d, i, base_point = path[depth]
        orbit = _orbit_of(base_point, generators)
        for v in sorted(cells_d[i]):
            if v in orbit:
                continue
            g = search(refiner.individualize(cells_d, i, v), depth + 1)
            if g is not None:
                generators.append(g)
                orbit = _orbit_of(base_point, generators)
        order *= len(orbit)
    return PermGroup(m.n, tuple(generators), order)


def _orbit_of(x, generators):
    orbit = {x}
    frontier = [x]
    while frontier:
        y = frontier.pop()
        for g in generators:
            if g[y] not in orbit:
                orbit.add(g[y])
                frontier.append(g[y])
    return orbit


def is_invariant(g: PermGroup, r: Relation) -> bool:
    if r.n != g.degree:
        raise ValueError(f"degree mismatch: {r.n} != {g.degree}")
    return all(frozenset((h[a], h[b]) for a, b in r.pairs) == r.pairs for h in g.generators)


@dataclass(frozen=True)
class TypeBlock:
    id: str
    color: str
    elements: frozenset[int]


@dataclass(frozen=True)
class OrbitPartition:
    n: int
    blocks: tuple[TypeBlock, ...]

    def type_of(self) -> list[str]:
        out = [""] * self.n
        for b in self.blocks:
            for x in b.elements:
                out[x] = b.id
        return out

    def block(self, type_id: str) -> TypeBlock:
        for b in self.blocks:
            if b.id == type_id:
                return b
        raise KeyError(type_id)

    def split_colors(self) -> dict[str, list[str]]:
        """Colors that are not a single orbit, with the type ids they split into."""
        by_color = defaultdict(list)
        for b in self.blocks:
            by_color[b.color].append(b.id)
        return {c: ids for c, ids in by_color.items() if len(ids) > 1}


def point_orbits(g: PermGroup, m: FiniteStructure) -> OrbitPartition:
    orbits = g.orbits()
    blocks = []
    for color in m.color_names():
        inside = sorted((o for o in orbits if o[0] in m.colors[color]), key=min)
        for k, orbit in enumerate(inside):
            tid = color if len(inside) == 1 else f"{color}.{k}"
            blocks.append(TypeBlock(tid, color, frozenset(orbit)))
    return OrbitPartition(m.n, tuple(blocks))


@dataclass(frozen=True)
class Atom:
    id: int
    src: str
    dst: str
    pairs: Relation
    converse: int
    is_equality: bool

    @property
    def min_pair(self):
        return min(self.pairs.pairs)


@dataclass(frozen=True)
class AtomTable:
    types: OrbitPartition
    atoms: tuple[Atom, ...]
    by_pair: dict[tuple[str, str], tuple[int, ...]] = field(default_factory=dict)


def pair_atoms(g: PermGroup, t: OrbitPartition) -> AtomTable:
    n = g.degree
    maps = [lambda x, h=h: h[x // n] * n + h[x % n] for h in g.generators]
    classes = _union_classes(n * n, maps)
    type_of = t.type_of()
    order = {b.id: k for k, b in enumerate(t.blocks)}

    def key(cls):
        a, b = divmod(min(cls), n)
        return order[type_of[a]], order[type_of[b]], (a, b)

    classes.sort(key=key)
    index = {}
    for k, cls in enumerate(classes):
        for x in cls:
            index[x] = k
    atoms = []
    by_pair = defaultdict(list)
    for k, cls in enumerate(classes):
        a, b = divmod(cls[0], n)
        pairs = Relation(n, frozenset(divmod(x, n) for x in cls))
        atoms.append(Atom(
            id=k,
            src=type_of[a],
            dst=type_of[b],
            pairs=pairs,
            converse=index[b * n + a],
            is_equality=(a == b),
        ))
        by_pair[(type_of[a], type_of[b])].append(k)
    return AtomTable(t, tuple(atoms), {k: tuple(v) for k, v in by_pair.items()})

