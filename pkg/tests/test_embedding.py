import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsplit_toolkit.embedding import (
    HardwareGraph,
    ProblemGraph,
    best_embedding,
    chimera_graph,
    clique_graph,
    embedding_stats,
    embedding_to_json,
    find_embedding,
    parse_graph_file,
    serialize_graph_file,
    verify_embedding,
)
from qsplit_toolkit.errors import GraphParseError, ParameterError
from qsplit_toolkit.qubo import QuboMatrix


# -- graphs ------------------------------------------------------------------

def test_chimera_examples():
    g = chimera_graph(2, 2, 4)
    assert g.num_nodes == 32 and len(g.edges) == 80
    tiny = chimera_graph(1, 1, 1)
    assert tiny.num_nodes == 2 and tiny.edges == frozenset({(0, 1)})
    assert g.topology == ("chimera", 2, 2, 4)
    with pytest.raises(ParameterError):
        chimera_graph(0, 2, 4)


@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 4))
def test_chimera_counts_and_bipartite(m, n, t):
    g = chimera_graph(m, n, t)
    assert g.num_nodes == 2 * t * m * n
    assert len(g.edges) == m * n * t * t + t * n * (m - 1) + t * m * (n - 1)
    # Colour (row + col + shore) % 2 separates every edge: Chimera has no odd cycles.
    def colour(q):
        cell, shore = divmod(q // t, 2)
        row, col = divmod(cell, n)
        return (row + col + shore) % 2
    assert all(colour(u) != colour(v) for u, v in g.edges)
    assert max(g.degree(q) for q in range(g.num_nodes)) <= t + 2


def test_chimera_cell_structure():
    g = chimera_graph(2, 2, 4)
    # Cell (0,0): nodes 0-3 shore 0, 4-7 shore 1.
    for a in range(4):
        for b in range(4, 8):
            assert (a, b) in g.edges
    assert (0, 16) in g.edges   # shore 0 k=0 to the cell below
    assert (4, 12) in g.edges   # shore 1 k=0 to the cell to the right
    assert (0, 8) not in g.edges


def test_clique_graph():
    assert len(clique_graph(1).edges) == 0
    assert len(clique_graph(4).edges) == 6
    assert len(clique_graph(128).edges) == 8128


def test_graph_validation():
    with pytest.raises(ParameterError):
        ProblemGraph(2, frozenset({(0, 0)}))
    with pytest.raises(ParameterError):
        ProblemGraph(2, frozenset({(0, 2)}))


def test_problem_graph_from_qubo():
    q = QuboMatrix(3, {(0, 0): 1.0, (0, 2): -1.0})
    assert ProblemGraph.from_qubo(q).edges == frozenset({(0, 2)})


# -- verification ------------------------------------------------------------

def test_identity_embedding_valid():
    h = chimera_graph(2, 2, 2)
    p = ProblemGraph(h.num_nodes, h.edges)
    assert verify_embedding(p, h, {q: [q] for q in range(h.num_nodes)}) == []


def test_shared_node_reported():
    h = chimera_graph(1, 1, 2)
    p = ProblemGraph(2, frozenset({(0, 1)}))
    v = verify_embedding(p, h, {0: [0, 2], 1: [2, 1]})
    assert any("shared" in s for s in v)


def test_disconnected_chain_reported():
    h = chimera_graph(1, 1, 2)       # nodes 0,1 on shore 0; 2,3 on shore 1
    p = ProblemGraph(2, frozenset({(0, 1)}))
    v = verify_embedding(p, h, {0: [0, 1], 1: [2]})
    assert any("disconnected" in s for s in v)


def test_missing_coupler_and_empty_chain():
    h = chimera_graph(1, 1, 2)
    p = ProblemGraph(3, frozenset({(0, 1), (1, 2)}))
    v = verify_embedding(p, h, {0: [0], 1: [1], 2: []})
    assert any("edge (0, 1)" in s for s in v)
    assert any("empty" in s for s in v)
    assert any("do not exist" in s for s in verify_embedding(p, h, {0: [99], 1: [2], 2: [3]}))


# -- search ------------------------------------------------------------------

def test_k2_exact_fit():
    h = chimera_graph(1, 1, 1)
    e = find_embedding(clique_graph(2), h, seed=0)
    assert e is not None and sorted(e[0] + e[1]) == [0, 1]
    assert all(len(c) == 1 for c in e.values())


def test_k5_needs_a_long_chain():
    h = chimera_graph(2, 2, 4)
    p = clique_graph(5)
    e = find_embedding(p, h, seed=1)
    assert e is not None and verify_embedding(p, h, e) == []
    stats = embedding_stats(e)
    assert stats.total_nodes >= 6 and stats.max_chain >= 2


def test_too_large_fails():
    assert find_embedding(clique_graph(10), chimera_graph(1, 1, 4)) is None


def test_empty_problem():
    assert find_embedding(ProblemGraph(0, frozenset()), chimera_graph(1, 1, 1)) == {}
    assert embedding_stats({}).total_nodes == 0


def test_k4_on_chimera_needs_six_nodes():
    # Chimera is triangle-free, so K4 cannot use four singleton chains.
    h = chimera_graph(4, 4, 4)
    e = find_embedding(clique_graph(4), h, seed=0)
    assert e is not None and embedding_stats(e).total_nodes >= 6


def test_singleton_stats():
    s = embedding_stats({0: (1,), 1: (2,), 2: (3,), 3: (4,)}, elapsed=0.5)
    assert (s.total_nodes, s.max_chain, s.elapsed) == (4, 1, 0.5)


def test_search_is_deterministic():
    h = chimera_graph(4, 4, 4)
    p = clique_graph(8)
    assert find_embedding(p, h, seed=5) == find_embedding(p, h, seed=5)


@given(st.integers(0, 2**32 - 1), st.integers(2, 7), st.floats(0.2, 0.9))
def test_random_graphs_embed_validly(seed, n, density):
    import numpy as np
    rng = np.random.default_rng(seed)
    edges = frozenset((i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < density)
    p = ProblemGraph(n, edges)
    h = chimera_graph(3, 3, 4)
    e = find_embedding(p, h, seed=seed, timeout=20)
    if e is not None:
        assert verify_embedding(p, h, e) == []


def test_best_embedding_picks_smallest():
    h = chimera_graph(4, 4, 4)
    p = clique_graph(6)
    seeds = [0, 1, 2, 3]
    best = best_embedding(p, h, seeds)
    sizes = [embedding_stats(find_embedding(p, h, seed=s)).total_nodes for s in seeds]
    assert embedding_stats(best).total_nodes == min(sizes)


# -- files -------------------------------------------------------------------

def test_graph_file_round_trip():
    g = chimera_graph(1, 2, 2)
    text = serialize_graph_file(g)
    assert text.startswith("g 8\n")
    back = parse_graph_file(text, HardwareGraph)
    assert back.edges == g.edges and back.num_nodes == g.num_nodes


@pytest.mark.parametrize("text, line", [
    ("0 1\n", 1),
    ("g 3\n1 0\n", 2),
    ("g 3\n0 3\n", 2),
    ("g 3\n0 x\n", 2),
    ("g 3\n0 1 2\n", 2),
])
def test_graph_parse_errors(text, line):
    with pytest.raises(GraphParseError) as exc:
        parse_graph_file(text)
    assert exc.value.line == line


def test_missing_header():
    with pytest.raises(GraphParseError):
        parse_graph_file("# only a comment\n")


def test_embedding_json():
    doc = json.loads(embedding_to_json({1: (5, 3), 0: (2,)}))
    assert doc == {"0": [2], "1": [3, 5]}
