import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cftwin.errors import StructuralError
from cftwin.graph import (CausalDiagram, ancestors, check_user_name, d_separated,
                          descendants, topological_order)
from oracles import disjoint_triples, dsep_by_paths, forward_dags

TWO_ACTION = CausalDiagram(["A", "B", "Y"], [], [("A", "B"), ("A", "Y"), ("B", "Y")])
TWO_ACTION_U = CausalDiagram(["A", "B", "Y"], ["U", "UB"],
                       [("U", "A"), ("U", "Y"), ("UB", "B"),
                        ("A", "B"), ("A", "Y"), ("B", "Y")])
CHAIN = CausalDiagram(["W", "Z", "X"], [], [("X", "Z"), ("Z", "W")])


def test_topological_order_examples():
    assert topological_order(TWO_ACTION) == ["A", "B", "Y"]
    assert topological_order(CausalDiagram(["N"])) == ["N"]
    assert topological_order(CHAIN) == ["X", "Z", "W"]


def test_topological_order_ties_follow_declaration():
    d = CausalDiagram(["C", "B", "A"], ["U"], [("U", "A")])
    assert topological_order(d) == ["U", "C", "B", "A"]


def test_cycle_names_an_edge():
    with pytest.raises(StructuralError) as err:
        CausalDiagram(["A", "B", "C"], [], [("A", "B"), ("B", "C"), ("C", "A")])
    assert err.value.edge in {("A", "B"), ("B", "C"), ("C", "A")}
    assert "->" in str(err.value)


def test_structural_rejections():
    with pytest.raises(StructuralError):
        CausalDiagram(["A"], ["U"], [("A", "U")])
    with pytest.raises(StructuralError):
        CausalDiagram(["A"], [], [("Q", "A")])
    with pytest.raises(StructuralError):
        CausalDiagram(["A", "A"])
    with pytest.raises(StructuralError):
        check_user_name("A'")


def test_ancestors_descendants_examples():
    assert {"A", "B"} <= ancestors(TWO_ACTION, "Y")
    assert ancestors(TWO_ACTION, "A") == set()
    assert ancestors(CHAIN, "W") == {"X", "Z"}
    assert descendants(TWO_ACTION, "A") == {"B", "Y"}
    assert descendants(TWO_ACTION, "Y") == set()
    assert descendants(CHAIN, "X") == {"Z", "W"}
    with pytest.raises(KeyError):
        ancestors(TWO_ACTION, "Q")


def test_d_separation_examples():
    assert d_separated(CHAIN, {"X"}, {"W"}, {"Z"})
    assert not d_separated(CHAIN, {"X"}, {"W"})
    coll = CausalDiagram(["X", "Z", "W"], [], [("X", "Z"), ("W", "Z")])
    assert d_separated(coll, {"X"}, {"W"}, set())
    assert not d_separated(coll, {"X"}, {"W"}, {"Z"})
    assert not d_separated(TWO_ACTION_U, {"A"}, {"Y"}, set())
    nodes = list(TWO_ACTION_U.nodes)
    assert d_separated(TWO_ACTION_U, {"A"}, {"Y"}, set()) == dsep_by_paths(
        nodes, TWO_ACTION_U.edges, {"A"}, {"Y"}, set())


def test_d_separation_rejects_overlap():
    with pytest.raises(ValueError):
        d_separated(CHAIN, {"X"}, {"X"}, set())
    with pytest.raises(ValueError):
        d_separated(CHAIN, {"X"}, {"W"}, {"W"})


def test_collider_opened_by_descendant():
    d = CausalDiagram(["X", "Z", "W", "D"], [], [("X", "Z"), ("W", "Z"), ("Z", "D")])
    assert not d_separated(d, {"X"}, {"W"}, {"D"})


def _diagram(n, edges):
    names = [f"N{i}" for i in range(n)]
    return names, CausalDiagram(names, [], [(names[a], names[b]) for a, b in edges])


def test_d_separation_matches_path_oracle_small_exhaustive():
    checked = 0
    for n in range(1, 5):
        for edges in forward_dags(n):
            names, d = _diagram(n, edges)
            for x, y, z in disjoint_triples(names):
                assert d.d_separated(x, y, z) == dsep_by_paths(names, d.edges, x, y, z)
                checked += 1
    assert checked == 7188


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_d_separation_matches_path_oracle_six_nodes(seed):
    rng = random.Random(seed)
    pairs = [(i, j) for i in range(6) for j in range(i + 1, 6)]
    names, d = _diagram(6, [p for p in pairs if rng.random() < 0.4])
    perm = names[:]
    rng.shuffle(perm)
    x, y = perm[0], perm[1]
    rest = perm[2:]
    for k in range(len(rest) + 1):
        for z in itertools.combinations(rest, k):
            assert d.d_separated({x}, {y}, z) == dsep_by_paths(names, d.edges, {x}, {y}, z)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
@settings(max_examples=80, deadline=None)
def test_ancestor_descendant_duality_and_order(seed, n):
    rng = random.Random(seed)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    names, d = _diagram(n, [p for p in pairs if rng.random() < 0.5])
    order = d.topological_order()
    assert sorted(order) == sorted(names)
    pos = {v: i for i, v in enumerate(order)}
    assert all(pos[a] < pos[b] for a, b in d.edges)
    for a in names:
        for b in names:
            assert (a in d.ancestors(b)) == (b in d.descendants(a))
