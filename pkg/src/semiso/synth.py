"""Finite generic approximations of label specifications.

A specification is an atom table (types, atoms, converses, atom-level
composition).  A model assigns exactly one atom to every ordered pair of
distinct elements so that converses agree and every triangle is allowed by
the composition table.  Genericity is approximated by extension demands:

* level 1: every element ``a`` of type ``p`` sees every non-equality atom
  ``s`` starting at ``p`` on some pair ``(a, b)``;
* level 2: whenever ``atom(a, c)`` is in ``comp(s, t)`` there is a witness
  ``b`` with ``atom(a, b) = s`` and ``atom(b, c) = t``.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from itertools import permutations

from .algebra import (
    AlgebraError,
    LabelAlgebra,
    algebra_from_dict,
    algebra_isomorphic,
    check_table,
    extract_algebra,
    iter_bits,
    mask_of,
)
from .structure import (
    Finding,
    FiniteStructure,
    Relation,
    ValidationReport,
    _load_json,
    validate_structure,
)

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 200_000


class SynthError(ValueError):
    """Bad synthesis request (sizes that contradict the spec, name mismatches)."""


@dataclass(frozen=True)
class SynthSpec:
    algebra: LabelAlgebra

    @property
    def types(self):
        return self.algebra.types

    @property
    def atoms(self):
        return self.algebra.atoms

    def is_singleton(self, p: str) -> bool:
        """True when the only ``(p, p)`` label besides bottom is zero."""
        return [a for a in self.algebra.atoms_between(p, p)
                if not self.atoms[a].is_equality] == []

    def proper_atoms(self, p: str) -> list[int]:
        return [a.id for a in self.atoms if a.src == p and not a.is_equality]

    def default_size(self, p: str) -> int:
        if self.is_singleton(p):
            return 1
        return max(6, 4 * len(self.proper_atoms(p)))

    def resolve_sizes(self, sizes: dict[str, int] | None = None) -> dict[str, int]:
        sizes = dict(sizes or {})
        known = set(self.algebra.type_ids())
        for p in sizes:
            if p not in known:
                raise SynthError(f"size given for unknown type {p!r}")
        out = {}
        for t in self.types:
            size = sizes.get(t.id, self.default_size(t.id))
            if size < 1:
                raise SynthError(f"type {t.id!r} needs a positive size, got {size}")
            if self.is_singleton(t.id) and size != 1:
                raise SynthError(f"type {t.id!r} is a singleton type, size must be 1 (got {size})")
            out[t.id] = size
        return out

    def theta_name(self, atom: int) -> str:
        a = self.atoms[atom]
        return f"theta:{a.src}:{a.id}:{a.dst}"


def parse_spec(text: str) -> SynthSpec:
    return SynthSpec(algebra_from_dict(_load_json(text, AlgebraError)))


def validate_spec(spec: SynthSpec) -> ValidationReport:
    report = ValidationReport()
    check_table(spec.algebra, report)
    for t in spec.types:
        if t.size is None:
            if spec.is_singleton(t.id):
                report.add("size", f"singleton type {t.id!r} declared infinite", f"types.{t.id}")
        elif spec.is_singleton(t.id) != (t.size == 1):
            report.add("size", f"type {t.id!r} has size {t.size} but singleton flag "
                       f"{spec.is_singleton(t.id)}", f"types.{t.id}")
    return report


@dataclass(frozen=True)
class SynthModel:
    structure: FiniteStructure
    element_types: tuple[str, ...]
    atom_of: tuple[tuple[int, ...], ...]  # atom_of[a][b], equality atoms on the diagonal


@dataclass
class SynthResult:
    status: str  # "model", "unsat" or "budget"
    model: SynthModel | None
    seed: int
    nodes: int
    sizes: dict[str, int]


class _BudgetExceeded(Exception):
    pass


class _Search:
    def __init__(self, spec: SynthSpec, sizes: dict[str, int], ext_level: int, seed: int,
                 budget: int):
        alg = spec.algebra
        self.spec = spec
        self.ext_level = ext_level
        self.budget = budget
        self.nodes = 0
        self.types = []
        for t in spec.types:
            self.types.extend([t.id] * sizes[t.id])
        n = self.n = len(self.types)
        self.conv = [a.converse for a in alg.atoms]
        self._conv_cache = {}

        self.pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
        self.index = {pair: k for k, pair in enumerate(self.pairs)}
        self.initial = []
        rng = random.Random(seed)
        self.order = []
        for a, b in self.pairs:
            ids = [i for i in alg.atoms_between(self.types[a], self.types[b])
                   if not alg.atoms[i].is_equality]
            self.initial.append(mask_of(ids))
            rng.shuffle(ids)
            self.order.append(ids)

        # allowed third atom of a triangle i<j<k given the other two
        self.allow_z, self.allow_y, self.allow_x = {}, {}, {}
        for x, y, z in self._triangles(alg):
            self.allow_z[(x, y)] = self.allow_z.get((x, y), 0) | 1 << z
            self.allow_y[(x, z)] = self.allow_y.get((x, z), 0) | 1 << y
            self.allow_x[(y, z)] = self.allow_x.get((y, z), 0) | 1 << x

        self.demand1 = [mask_of(spec.proper_atoms(p)) for p in self.types]
        self.demand2 = {}
        if ext_level >= 2:
            for s, t in alg.composable():
                if alg.atoms[s].is_equality or alg.atoms[t].is_equality:
                    continue
                for z in iter_bits(alg.comp.get((s, t), 0)):
                    if not alg.atoms[z].is_equality:
                        self.demand2.setdefault(z, []).append((s, t))

    def _triangles(self, alg):
        comp = alg.comp
        c = self.conv
        proper = [a for a in alg.atoms if not a.is_equality]

        def has(s, t, u):
            return comp.get((s, t), 0) >> u & 1

        for x in proper:
            for y in proper:
                if x.dst != y.src:
                    continue
                for z in proper:
                    if (z.src, z.dst) != (x.src, y.dst):
                        continue
                    a, b, d = x.id, y.id, z.id
                    if (has(a, b, d) and has(c[b], c[a], c[d]) and has(d, c[b], a)
                            and has(b, c[d], c[a]) and has(c[a], d, b) and has(c[d], a, c[b])):
                        yield a, b, d

    def cmask(self, mask):
        out = self._conv_cache.get(mask)
        if out is None:
            out = mask_of(self.conv[i] for i in iter_bits(mask))
            self._conv_cache[mask] = out
        return out

    def run(self):
        dom = list(self.initial)
        if any(d == 0 for d in dom):
            return None
        return self._solve(0, dom)

    def _solve(self, k, dom):
        if k == len(self.pairs):
            return dom
        for x in self.order[k]:
            if not dom[k] >> x & 1:
                continue
            self.nodes += 1
            if self.nodes > self.budget:
                raise _BudgetExceeded
            nd = list(dom)
            nd[k] = 1 << x
            if self._propagate(k, nd) and self._demands_ok(k, nd):
                found = self._solve(k + 1, nd)
                if found is not None:
                    return found
        return None

    def _propagate(self, k, dom):
        a, b = self.pairs[k]
        index = self.index
        for c in range(self.n):
            if c == a or c == b:
                continue
            i, j, l = sorted((a, b, c))
            ij, jl, il = index[(i, j)], index[(j, l)], index[(i, l)]
            known = {p: p <= k for p in (ij, jl, il)}
            if all(known.values()):
                x, y, z = (_single(dom[p]) for p in (ij, jl, il))
                if not self.allow_z.get((x, y), 0) >> z & 1:
                    return False
                continue
            if known[ij] and known[jl]:
                target, allowed = il, self.allow_z.get((_single(dom[ij]), _single(dom[jl])), 0)
            elif known[ij] and known[il]:
                target, allowed = jl, self.allow_y.get((_single(dom[ij]), _single(dom[il])), 0)
            elif known[jl] and known[il]:
                target, allowed = ij, self.allow_x.get((_single(dom[jl]), _single(dom[il])), 0)
            else:
                continue
            dom[target] &= allowed
            if dom[target] == 0:
                return False
        return True

    def _ordered(self, dom):
        """``od[a][b]``: domain of the ordered pair ``(a, b)``, empty on the diagonal."""
        n = self.n
        od = [[0] * n for _ in range(n)]
        for (a, b), k in self.index.items():
            od[a][b] = dom[k]
            od[b][a] = self.cmask(dom[k])
        return od

    def _demands_ok(self, k, dom):
        """Check extension demands can still be met; may shrink unassigned domains."""
        if self.ext_level < 1:
            return True
        od = self._ordered(dom)
        for a, row in enumerate(od):
            seen = 0
            for m in row:
                seen |= m
            if self.demand1[a] & ~seen:
                return False
        if self.ext_level < 2:
            return True
        for p, (u, v) in enumerate(self.pairs):
            keep = 0
            for z in iter_bits(dom[p]):
                if self._witnessed(od, u, v, z) and self._witnessed(od, v, u, self.conv[z]):
                    keep |= 1 << z
            if keep != dom[p]:
                if keep == 0 or p <= k:
                    return False
                dom[p] = keep
        return True

    def _witnessed(self, od, a, c, z):
        row = od[a]
        for s, t in self.demand2.get(z, ()):
            for b in range(self.n):
                if b != a and b != c and row[b] >> s & 1 and od[b][c] >> t & 1:
                    break
            else:
                return False
        return True


def _single(mask):
    return mask.bit_length() - 1


def _build_model(spec: SynthSpec, types: list[str], dom: list[int], index) -> SynthModel:
    alg = spec.algebra
    n = len(types)
    atom_of = [[-1] * n for _ in range(n)]
    for a in range(n):
        atom_of[a][a] = alg.equality_atom(types[a])
    for (a, b), k in index.items():
        x = _single(dom[k])
        atom_of[a][b] = x
        atom_of[b][a] = alg.atoms[x].converse
    colors = {}
    for t in spec.types:
        colors[f"Col:{t.id}"] = frozenset(x for x in range(n) if types[x] == t.id)
    rels = {spec.theta_name(a.id): set() for a in alg.atoms if not a.is_equality}
    for a in range(n):
        for b in range(n):
            if a != b:
                rels[spec.theta_name(atom_of[a][b])].add((a, b))
    structure = FiniteStructure(n, colors, {k: Relation(n, frozenset(v)) for k, v in rels.items()})
    return SynthModel(structure, tuple(types), tuple(tuple(r) for r in atom_of))


def synthesize(spec: SynthSpec, sizes: dict[str, int] | None = None, ext_level: int = 1,
               seed: int = 0, budget: int = DEFAULT_BUDGET) -> SynthResult:
    """Backtracking search for a model of ``spec``.

    Pairs are assigned in lexicographic order, atom values in a
    seed-shuffled order; the outcome depends only on the arguments.
    """
    if ext_level not in (0, 1, 2):
        raise SynthError(f"ext_level must be 0, 1 or 2, got {ext_level}")
    sizes = spec.resolve_sizes(sizes)
    search = _Search(spec, sizes, ext_level, seed, budget)
    try:
        dom = search.run()
    except _BudgetExceeded:
        log.info("budget of %d nodes exhausted (seed %d)", budget, seed)
        return SynthResult("budget", None, seed, search.nodes, sizes)
    if dom is None:
        return SynthResult("unsat", None, seed, search.nodes, sizes)
    if not search.pairs and ext_level >= 1 and any(search.demand1):
        return SynthResult("unsat", None, seed, search.nodes, sizes)
    model = _build_model(spec, search.types, dom, search.index)
    return SynthResult("model", model, seed, search.nodes, sizes)


def synthesize_portfolio(spec: SynthSpec, seeds, sizes=None, ext_level: int = 1,
                         budget: int = DEFAULT_BUDGET) -> SynthResult:
    """Try seeds in the given order; the first model wins and keeps its seed.

    An ``unsat`` answer is final for every seed, since the search is exhaustive.
    """
    last = None
    for seed in seeds:
        last = synthesize(spec, sizes, ext_level, seed, budget)
        if last.status in ("model", "unsat"):
            return last
    if last is None:
        raise SynthError("portfolio needs at least one seed")
    return last


@dataclass
class VerifyReport:
    findings: list[Finding] = field(default_factory=list)
    coverage: dict[int, float] = field(default_factory=dict)
    comp_realized: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.findings

    def add(self, kind, message, location=""):
        self.findings.append(Finding(kind, message, location))

    def kinds(self) -> set[str]:
        return {f.kind for f in self.findings}

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "coverage": {str(k): v for k, v in sorted(self.coverage.items())},
            "findings": [{"kind": f.kind, "message": f.message, "location": f.location}
                         for f in self.findings],
        }


def model_from_structure(m: FiniteStructure, alg: LabelAlgebra) -> SynthModel:
    """Rename a structure into theta/Col form using its own extracted algebra."""
    if alg.pairs is None or alg.blocks is None:
        raise SynthError("need an extracted algebra with pair sets")
    spec = SynthSpec(alg)
    types = [""] * m.n
    for p, block in alg.blocks.items():
        for x in block:
            types[x] = p
    atom_of = [[-1] * m.n for _ in range(m.n)]
    rels = {}
    for a in alg.atoms:
        for x, y in alg.pairs[a.id].pairs:
            atom_of[x][y] = a.id
        if not a.is_equality:
            rels[spec.theta_name(a.id)] = alg.pairs[a.id]
    colors = {f"Col:{p}": block for p, block in alg.blocks.items()}
    return SynthModel(FiniteStructure(m.n, colors, rels), tuple(types),
                      tuple(tuple(r) for r in atom_of))


def verify_model(m: SynthModel | FiniteStructure, spec: SynthSpec, ext_level: int = 1) -> VerifyReport:
    """Check a model against a spec using only its Col/theta relations."""
    structure = m.structure if isinstance(m, SynthModel) else m
    alg = spec.algebra
    report = VerifyReport()
    n = structure.n

    expected_colors = {f"Col:{t.id}": t.id for t in spec.types}
    expected_rels = {spec.theta_name(a.id): a.id for a in alg.atoms if not a.is_equality}
    if set(structure.colors) != set(expected_colors):
        raise SynthError(f"color names {sorted(structure.colors)} do not match spec types "
                         f"{sorted(expected_colors)}")
    if set(structure.relations) != set(expected_rels):
        raise SynthError(f"relation names {sorted(structure.relations)} do not match spec atoms "
                         f"{sorted(expected_rels)}")
    for f in validate_structure(structure).findings:
        report.add("structure", str(f))
    if not report.ok:
        return report

    types = [""] * n
    for name, members in structure.colors.items():
        for x in members:
            types[x] = expected_colors[name]
    for t in spec.types:
        size = len(structure.colors[f"Col:{t.id}"])
        if spec.is_singleton(t.id) and size != 1:
            report.add("size", f"singleton type {t.id!r} has {size} elements")

    holders = [[[] for _ in range(n)] for _ in range(n)]
    for name, rel in structure.relations.items():
        atom = alg.atoms[expected_rels[name]]
        for a, b in rel.pairs:
            if a == b:
                report.add("diagonal", f"{name} contains ({a}, {a})")
            elif (types[a], types[b]) != (atom.src, atom.dst):
                report.add("typing", f"{name} contains ({a}, {b}) of types ({types[a]},{types[b]})")
            else:
                holders[a][b].append(atom.id)
    atom_of = [[None] * n for _ in range(n)]
    for a in range(n):
        atom_of[a][a] = alg.equality_atom(types[a])
        for b in range(n):
            if a == b:
                continue
            if len(holders[a][b]) == 1:
                atom_of[a][b] = holders[a][b][0]
            else:
                report.add("partition", f"pair ({a}, {b}) carries atoms {sorted(holders[a][b])}")

    for a in range(n):
        for b in range(a + 1, n):
            x, y = atom_of[a][b], atom_of[b][a]
            if x is not None and y is not None and alg.atoms[x].converse != y:
                report.add("converse", f"atom({a},{b})={x} but atom({b},{a})={y}")

    for a, b, c in permutations(range(n), 3):
        x, y, z = atom_of[a][b], atom_of[b][c], atom_of[a][c]
        if None in (x, y, z):
            continue
        if not alg.comp.get((x, y), 0) >> z & 1:
            report.add("triangle", f"atom({a},{c})={z} not in comp({x},{y}) via {b}")

    _check_complements(structure, spec, types, report)

    realized = {}
    for a in range(n):
        for b in range(n):
            for c in range(n):
                x, y, z = atom_of[a][b], atom_of[b][c], atom_of[a][c]
                if None not in (x, y, z):
                    realized[(x, y)] = realized.get((x, y), 0) | 1 << z
    report.comp_realized = realized

    report.coverage[1] = _coverage1(spec, types, atom_of)
    report.coverage[2] = _coverage2(alg, types, atom_of)
    for level in (1, 2):
        if level <= ext_level and report.coverage[level] < 1.0:
            report.add(f"extension-{level}", f"level-{level} coverage {report.coverage[level]:.3f}")
    return report


def _check_complements(structure, spec, types, report):
    """theta_u(a, .) and theta_ubar(a, .) split the Col_q fiber, for every label u."""
    alg = spec.algebra
    for a in range(structure.n):
        p = types[a]
        fibers = {}
        for atom in alg.atoms:
            if atom.src != p:
                continue
            if atom.is_equality:
                fibers[atom.id] = frozenset([a])
            else:
                fibers[atom.id] = structure.relations[spec.theta_name(atom.id)].image(a)
        for t in spec.types:
            q = t.id
            col = structure.colors[f"Col:{q}"]
            for u in alg.labels(p, q):
                ubar = alg.atom_mask(p, q) & ~u.mask
                left = frozenset().union(*(fibers[i] for i in iter_bits(u.mask)))
                right = frozenset().union(*(fibers[i] for i in iter_bits(ubar)))
                if left & right or left | right != col:
                    report.add("complement", f"label {u} at element {a} does not split Col:{q}")


def _coverage1(spec, types, atom_of):
    total = hit = 0
    n = len(types)
    for a in range(n):
        seen = {atom_of[a][b] for b in range(n) if b != a}
        for s in spec.proper_atoms(types[a]):
            total += 1
            hit += s in seen
    return hit / total if total else 1.0


def _coverage2(alg, types, atom_of):
    n = len(types)
    total = hit = 0
    for s, t in alg.composable():
        if alg.atoms[s].is_equality or alg.atoms[t].is_equality:
            continue
        res = alg.comp.get((s, t), 0)
        for a in range(n):
            if types[a] != alg.atoms[s].src:
                continue
            for c in range(n):
                if c == a or types[c] != alg.atoms[t].dst:
                    continue
                z = atom_of[a][c]
                if z is None or not res >> z & 1:
                    continue
                total += 1
                hit += any(atom_of[a][b] == s and atom_of[b][c] == t
                           for b in range(n) if b != a and b != c)
    return hit / total if total else 1.0


@dataclass
class RoundtripReport:
    status: str
    first: LabelAlgebra
    result: SynthResult
    verify: VerifyReport | None = None
    second: LabelAlgebra | None = None
    isomorphism: object = None

    @property
    def verified(self) -> bool:
        return self.verify is not None and self.verify.ok

    @property
    def isomorphic(self) -> bool:
        return self.isomorphism is not None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "seed": self.result.seed,
            "nodes": self.result.nodes,
            "sizes": self.result.sizes,
            "verified": self.verified,
            "isomorphic": self.isomorphic,
            "atoms_before": len(self.first.atoms),
            "atoms_after": None if self.second is None else len(self.second.atoms),
            "verify": None if self.verify is None else self.verify.to_dict(),
        }


def roundtrip(m: FiniteStructure, ext_level: int = 1, seed: int = 0,
              budget: int = DEFAULT_BUDGET, full: bool = True) -> RoundtripReport:
    """extract -> synthesize -> verify -> extract -> compare.

    A verified model may still have a smaller automorphism group than the
    original, so "verified" and "isomorphic" are reported separately.
    """
    first = extract_algebra(m)
    spec = SynthSpec(first)
    sizes = {t.id: t.size for t in first.types}
    result = synthesize(spec, sizes, ext_level, seed, budget)
    if result.model is None:
        return RoundtripReport(result.status, first, result)
    verify = verify_model(result.model, spec, ext_level)
    if not verify.ok:
        return RoundtripReport("verify-failed", first, result, verify)
    if not full:
        return RoundtripReport("verified", first, result, verify)
    second = extract_algebra(result.model.structure)
    iso = algebra_isomorphic(first, second)
    status = "verified-isomorphic" if iso is not None else "verified-not-isomorphic"
    return RoundtripReport(status, first, result, verify, second, iso)
