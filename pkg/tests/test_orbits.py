import itertools

import pytest
from hypothesis import given, settings

from semiso.orbits import (
    automorphisms_bruteforce,
    find_automorphisms,
    is_automorphism,
    is_invariant,
    pair_atoms,
    point_orbits,
)
from semiso.structure import FiniteStructure, Relation, graph, relation_compose, relation_converse

from conftest import cube_graph, structures


def _table(m):
    g = find_automorphisms(m)
    return g, pair_atoms(g, point_orbits(g, m))


def test_single_point():
    m = FiniteStructure(1, {"p": frozenset([0])}, {})
    g = find_automorphisms(m)
    assert g.order == 1
    assert g.elements() == {(0,)}


def test_c5_dihedral(c5):
    g = find_automorphisms(c5)
    brute = {p for p in itertools.permutations(range(5))
             if all((p[a], p[b]) in c5.relations["E"] for a, b in c5.relations["E"])}
    assert len(brute) == 10
    assert g.order == 10
    assert g.elements() == brute


def test_path_p3():
    m = graph(3, [(0, 1), (1, 2)])
    g = find_automorphisms(m)
    assert g.order == 2
    assert (2, 1, 0) in g.generators
    blocks = sorted(sorted(b.elements) for b in point_orbits(g, m).blocks)
    assert blocks == [[0, 2], [1]]


@pytest.mark.parametrize("m, order", [
    (cube_graph(), 48),
    (graph(6, [(a, b) for a in range(3) for b in range(3, 6)]), 72),
    (FiniteStructure(7, {"p": frozenset(range(7))}, {}), 5040),
    (FiniteStructure(4, {"p": frozenset({0}), "q": frozenset({1, 2, 3})}, {}), 6),
    (graph(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]), 4),
])
def test_orders_match_bruteforce(m, order):
    g = find_automorphisms(m)
    brute = automorphisms_bruteforce(m)
    assert len(brute) == order
    assert g.order == order
    assert g.elements() == brute


def test_petersen_order(petersen):
    # |Aut| = |S5| = 120; the brute-force oracle is refused above n = 9
    g = find_automorphisms(petersen)
    assert g.order == 120
    assert len(g.elements()) == 120
    assert all(is_automorphism(h, petersen) for h in g.generators)


@settings(max_examples=80, deadline=None)
@given(structures())
def test_random_structures_match_bruteforce(m):
    g = find_automorphisms(m)
    brute = automorphisms_bruteforce(m)
    assert g.order == len(brute)
    assert g.elements() == brute


def test_point_orbits_examples(c5):
    g = find_automorphisms(c5)
    t = point_orbits(g, c5)
    assert [sorted(b.elements) for b in t.blocks] == [[0, 1, 2, 3, 4]]
    m = FiniteStructure(4, {"a": frozenset({0}), "b": frozenset({1, 2, 3})}, {})
    t = point_orbits(find_automorphisms(m), m)
    assert [(b.id, b.color, sorted(b.elements)) for b in t.blocks] == \
        [("a", "a", [0]), ("b", "b", [1, 2, 3])]
    assert t.split_colors() == {}


def test_color_split_is_reported():
    m = graph(3, [(0, 1), (1, 2)])
    t = point_orbits(find_automorphisms(m), m)
    assert t.split_colors() == {"p": ["p.0", "p.1"]}


def test_atoms_single_point():
    m = FiniteStructure(1, {"p": frozenset([0])}, {})
    _, table = _table(m)
    assert len(table.atoms) == 1
    assert table.atoms[0].is_equality


def test_atoms_c5(c5):
    _, table = _table(c5)
    assert len(table.atoms) == 3
    eq, adj, non = table.atoms
    assert eq.is_equality and eq.pairs == Relation.diagonal(5)
    assert adj.pairs == c5.relations["E"]
    assert len(non.pairs) == 10
    assert adj.converse == adj.id and non.converse == non.id


def test_atoms_dicycle(dicycle):
    _, table = _table(dicycle)
    eq, arc, rev = table.atoms
    assert arc.pairs == dicycle.relations["A"]
    assert rev.pairs == relation_converse(arc.pairs)
    assert arc.converse == rev.id and rev.converse == arc.id


def test_atom_ordering_is_sorted(corpus_structure):
    _, m = corpus_structure
    _, table = _table(m)
    order = [b.id for b in table.types.blocks]
    keys = [(order.index(a.src), order.index(a.dst), a.min_pair) for a in table.atoms]
    assert keys == sorted(keys)


def _check_table_invariants(m):
    g, table = _table(m)
    blocks = {b.id: b.elements for b in table.types.blocks}
    total = 0
    for (p, q), ids in table.by_pair.items():
        union = set()
        for i in ids:
            assert not union & table.atoms[i].pairs.pairs
            union |= table.atoms[i].pairs.pairs
        assert union == {(a, b) for a in blocks[p] for b in blocks[q]}
        total += len(union)
    assert total == m.n ** 2
    for a in table.atoms:
        c = table.atoms[a.converse]
        assert c.converse == a.id
        assert c.pairs == relation_converse(a.pairs)
        assert a.is_equality == (a.pairs.pairs <= {(x, x) for x in range(m.n)})
        assert is_invariant(g, a.pairs)
    for s in table.atoms:
        for t in table.atoms:
            if s.dst != t.src:
                continue
            r = relation_compose(s.pairs, t.pairs)
            for u in table.by_pair[(s.src, t.dst)]:
                inside = table.atoms[u].pairs.pairs & r.pairs
                assert not inside or inside == table.atoms[u].pairs.pairs


def test_table_invariants_corpus(corpus_structure):
    _check_table_invariants(corpus_structure[1])


@settings(max_examples=60, deadline=None)
@given(structures())
def test_table_invariants_random(m):
    _check_table_invariants(m)


def test_is_invariant_examples(c5):
    g = find_automorphisms(c5)
    assert is_invariant(g, Relation.diagonal(5))
    assert is_invariant(g, c5.relations["E"])
    assert not is_invariant(g, Relation(5, {(0, 1)}))
    with pytest.raises(ValueError):
        is_invariant(g, Relation(4))
