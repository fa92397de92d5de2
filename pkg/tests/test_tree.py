from __future__ import annotations

import io

import numpy as np
import pytest

from rankmst.correlation import CorrelationMatrix, DistanceMatrix, pearson, to_distance
from rankmst.errors import DataError
from rankmst.tree import (
    Tree,
    TreeEdge,
    kruskal_mst,
    mst_filter,
    read_tree_csv,
    tree_to_json,
    write_tree_csv,
)

from tests.oracles import min_spanning_weight_exhaustive
from tests.synthetic import make_panel, random_correlation_values


def _pair(values: np.ndarray, tickers=None):
    p = values.shape[0]
    tickers = tickers or tuple(f"T{i}" for i in range(p))
    corr = CorrelationMatrix("pearson", tickers, values)
    return to_distance(corr), corr


def test_two_nodes_single_edge():
    d, c = _pair(np.array([[1.0, 0.4], [0.4, 1.0]]))
    tree = kruskal_mst(d, c)
    assert len(tree.edges) == 1
    assert (tree.edges[0].i, tree.edges[0].j) == (0, 1)
    assert tree.edges[0].correlation == 0.4


def test_triangle_two_smallest_edges():
    # d(a,b)=0.1, d(a,c)=0.2, d(b,c)=0.3
    dist = np.array([[0.0, 0.1, 0.2], [0.1, 0.0, 0.3], [0.2, 0.3, 0.0]])
    d = DistanceMatrix(("a", "b", "c"), dist)
    c = CorrelationMatrix("pearson", ("a", "b", "c"), np.eye(3))
    tree = kruskal_mst(d, c)
    assert {(e.i, e.j) for e in tree.edges} == {(0, 1), (0, 2)}
    assert tree.total_distance() == pytest.approx(0.3, abs=1e-15)


def test_matches_exhaustive_minimum_on_7_nodes():
    rng = np.random.default_rng(77)
    for _ in range(3):
        values = random_correlation_values(rng, 7)
        d, c = _pair(values)
        tree = kruskal_mst(d, c)
        want = min_spanning_weight_exhaustive(d.values)
        assert tree.total_distance() == pytest.approx(want, abs=1e-10)


def test_invariant_under_monotone_distance_transform():
    rng = np.random.default_rng(5)
    values = random_correlation_values(rng, 8)
    d, c = _pair(values)
    tree = kruskal_mst(d, c)
    squared = DistanceMatrix(d.tickers, d.values**2)  # order-preserving on [0,2]
    tree2 = kruskal_mst(squared, c)
    assert tree.edge_keys() == tree2.edge_keys()


def test_total_distance_no_worse_than_any_star():
    rng = np.random.default_rng(13)
    values = random_correlation_values(rng, 9)
    d, c = _pair(values)
    total = kruskal_mst(d, c).total_distance()
    for hub in range(9):
        star = sum(d.values[hub, j] for j in range(9) if j != hub)
        assert total <= star + 1e-12


def test_deterministic_tie_break():
    # all distances equal: lexicographic (i, j) order wins
    values = np.full((4, 4), 0.5)
    np.fill_diagonal(values, 1.0)
    d, c = _pair(values)
    tree = kruskal_mst(d, c)
    assert [(e.i, e.j) for e in tree.edges] == [(0, 1), (0, 2), (0, 3)]


def test_nonfinite_distance_rejected():
    dist = np.zeros((3, 3))
    dist[0, 1] = dist[1, 0] = np.nan
    dist[0, 2] = dist[2, 0] = 0.5
    dist[1, 2] = dist[2, 1] = 0.5
    d = DistanceMatrix(("a", "b", "c"), dist)
    c = CorrelationMatrix("pearson", ("a", "b", "c"), np.eye(3))
    with pytest.raises(DataError, match="non-finite"):
        kruskal_mst(d, c)


def test_filter_two_nodes_equals_original():
    rng = np.random.default_rng(1)
    c = pearson(make_panel(rng.standard_normal((30, 2))))
    tree = kruskal_mst(to_distance(c), c)
    filtered = mst_filter(tree, c)
    assert np.array_equal(filtered.values, c.values)


def test_filter_star_edge_count_and_sum():
    tickers = tuple("ABCD")
    values = np.eye(4)
    for j, corr in zip((1, 2, 3), (0.5, 0.6, 0.7)):
        values[0, j] = values[j, 0] = corr
    c = CorrelationMatrix("pearson", tickers, values)
    star = Tree(
        tickers,
        (TreeEdge(0, 1, 1.0, 0.5), TreeEdge(0, 2, 0.9, 0.6), TreeEdge(0, 3, 0.8, 0.7)),
    )
    filtered = mst_filter(star, c)
    off = filtered.values - np.diag(np.diag(filtered.values))
    assert np.count_nonzero(off) == 6
    assert off.sum() == pytest.approx(2 * (0.5 + 0.6 + 0.7), abs=1e-15)
    assert np.array_equal(np.diag(filtered.values), np.ones(4))


def test_filter_ticker_mismatch():
    c = CorrelationMatrix("pearson", ("A", "B", "C"), np.eye(3))
    tree = Tree(("A", "B", "Z"), (TreeEdge(0, 1, 1.0, 0.1), TreeEdge(1, 2, 1.0, 0.1)))
    with pytest.raises(DataError, match="Z"):
        mst_filter(tree, c)


def test_tree_requires_p_minus_1_edges():
    with pytest.raises(DataError, match="edges"):
        Tree(("A", "B", "C"), (TreeEdge(0, 1, 1.0, 0.5),))


def test_tree_csv_roundtrip():
    rng = np.random.default_rng(3)
    c = pearson(make_panel(rng.standard_normal((40, 6))))
    tree = kruskal_mst(to_distance(c), c)
    buf = io.StringIO()
    write_tree_csv(tree, buf)
    back = read_tree_csv(io.StringIO(buf.getvalue()), tree.tickers)
    assert back.edge_keys() == tree.edge_keys()
    assert back.total_distance() == tree.total_distance()


def test_tree_json_adjacency():
    import json

    tree = Tree(("A", "B", "C"), (TreeEdge(0, 1, 0.5, 0.9), TreeEdge(1, 2, 0.6, 0.8)))
    doc = json.loads(tree_to_json(tree))
    assert doc["tickers"] == ["A", "B", "C"]
    assert {n["neighbor"] for n in doc["adjacency"]["B"]} == {"A", "C"}
    assert doc["adjacency"]["A"][0]["correlation"] == 0.9
