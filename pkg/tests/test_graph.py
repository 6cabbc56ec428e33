import json

import pytest
from hypothesis import given, settings, strategies as st

from gradnet.graph import (
    CellGraph,
    GraphError,
    complete,
    complete_bipartite,
    count_components,
    crown,
    hypercube,
    load_graph,
    path,
    petersen,
    ring,
    star,
)
from oracles import nx_bipartite, nx_components


def test_ring4_edges():
    assert ring(4).sorted_edges == [(1, 2), (1, 4), (2, 3), (3, 4)]


def test_constructors_reject_bad_sizes():
    with pytest.raises(GraphError):
        ring(2)
    with pytest.raises(GraphError):
        complete(1)
    with pytest.raises(GraphError):
        crown(2)


def test_disconnected_rejected():
    with pytest.raises(GraphError, match="connected"):
        CellGraph.from_edge_list([(1, 2), (3, 4)])


def test_duplicate_edge_rejected():
    with pytest.raises(GraphError, match="duplicate"):
        CellGraph.from_edge_list([(1, 2), (2, 1)])


def test_loops_not_in_inputs_or_degree():
    g = CellGraph.from_edge_list([(1, 2), (2, 3)], loops=[2])
    assert g.input_set(2) == (1, 3)
    assert g.degree(2) == 2
    assert g.bipartition() is None
    assert g.odd_cycle() == [2]


def test_figure1_star_centre_two():
    g = load_graph("figure1_g1")
    assert g.degrees() == [1, 3, 1, 1]
    assert g.input_set(2) == (1, 3, 4)


def test_figure2_bipartition():
    g = load_graph("figure2")
    p1, p2 = g.bipartition().as_lists()
    assert p1 == [1, 3, 5, 7, 8, 9, 10]
    assert p2 == [2, 4, 6]
    assert g.degree(2) == 6


def test_figure3_is_34_graph():
    assert load_graph("figure3").is_dm_graph() == (3, 4)
    assert crown(4).is_dm_graph() == (3, 4)
    assert hypercube(3).is_dm_graph() == (3, 4)


def test_odd_cycle_is_a_cycle():
    for g in (complete(3), ring(5), petersen(), load_graph("figure1_g3")):
        cyc = g.odd_cycle()
        assert len(cyc) % 2 == 1
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            assert g.has_edge(a, b)


def test_regularity():
    assert petersen().is_regular() == 3
    assert star(3).is_regular() is None
    assert complete_bipartite(2, 3).is_regular() is None


def test_json_roundtrip(tmp_path):
    g = load_graph("figure4")
    p = tmp_path / "g.json"
    p.write_text(json.dumps(g.to_json()))
    assert load_graph(p) == g


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"n": 3,\n "edges": [[1,2],\n}')
    with pytest.raises(GraphError, match="line 3"):
        load_graph(p)


def test_automorphisms_of_ring():
    assert len(ring(5).automorphisms()) == 10


@st.composite
def connected_graphs(draw):
    n = draw(st.integers(2, 9))
    # random spanning tree plus extra edges
    edges = set()
    for v in range(2, n + 1):
        u = draw(st.integers(1, v - 1))
        edges.add((u, v))
    extra = draw(st.lists(st.tuples(st.integers(1, n), st.integers(1, n)), max_size=12))
    for u, v in extra:
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return CellGraph.from_edge_list(sorted(edges), n=n)


@settings(max_examples=60, deadline=None)
@given(connected_graphs())
def test_bipartite_matches_networkx(g):
    bp = g.bipartition()
    assert (bp is not None) == nx_bipartite(g)
    if bp is not None:
        assert 1 in bp.part1
        for u, v in g.edges:
            assert bp.side(u) != bp.side(v)
    else:
        assert len(g.odd_cycle()) % 2 == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.lists(st.tuples(st.integers(1, 9), st.integers(1, 9)), max_size=15))
def test_count_components_matches_networkx(n, pairs):
    edges = [(u, v) for u, v in pairs if u <= n and v <= n and u != v]
    assert count_components(n, edges) == nx_components(n, edges)


def test_path_and_star():
    assert path(4).degrees() == [1, 2, 2, 1]
    assert star(3, center=2).input_set(2) == (1, 3, 4)
