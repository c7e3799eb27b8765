import itertools

import pytest
from hypothesis import strategies as st

from semiso.corpus import STRUCTURES, load_spec, load_structure
from semiso.structure import FiniteStructure, Relation, graph


@pytest.fixture(params=STRUCTURES)
def corpus_structure(request):
    return request.param, load_structure(request.param)


@pytest.fixture
def c5():
    return load_structure("c5")


@pytest.fixture
def petersen():
    return load_structure("petersen")


@pytest.fixture
def dicycle():
    return load_structure("dicycle3")


@pytest.fixture
def random_graph_spec():
    return load_spec("random_graph_spec")


def cube_graph():
    return graph(8, [(a, a ^ (1 << k)) for a in range(8) for k in range(3) if a < a ^ (1 << k)])


def naive_compose(r, s):
    """Triple loop over the universe; deliberately unrelated to relation_compose."""
    out = set()
    for a, b, c in itertools.product(range(r.n), repeat=3):
        if (a, b) in r.pairs and (b, c) in s.pairs:
            out.add((a, c))
    return Relation(r.n, frozenset(out))


@st.composite
def relations(draw, n=None):
    n = draw(st.integers(1, 6)) if n is None else n
    pairs = draw(st.frozensets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))))
    return Relation(n, pairs)


@st.composite
def structures(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    coloring = draw(st.lists(st.sampled_from("pq"), min_size=n, max_size=n))
    colors = {}
    for x, c in enumerate(coloring):
        colors.setdefault(c, set()).add(x)
    rels = {}
    for name in draw(st.sets(st.sampled_from("EF"), max_size=2)):
        rels[name] = draw(relations(n))
    return FiniteStructure(n, {c: frozenset(v) for c, v in colors.items()}, rels)
