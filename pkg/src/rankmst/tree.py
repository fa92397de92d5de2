"""Minimum spanning trees over distance matrices and the MST-filtered
correlation matrix built from them."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import NamedTuple, TextIO

import numpy as np

from .correlation import CorrelationMatrix, DistanceMatrix
from .errors import DataError


class TreeEdge(NamedTuple):
    i: int
    j: int
    distance: float
    correlation: float


@dataclass(frozen=True)
class Tree:
    """Spanning tree as a canonical (i < j, weight-sorted) edge list."""

    tickers: tuple[str, ...]
    edges: tuple[TreeEdge, ...]

    def __post_init__(self):
        p = len(self.tickers)
        if len(self.edges) != p - 1:
            raise DataError(f"a tree on {p} nodes needs {p - 1} edges")
        for e in self.edges:
            if not (0 <= e.i < e.j < p):
                raise DataError("edge endpoints must satisfy 0 <= i < j < p")

    @property
    def n_nodes(self) -> int:
        return len(self.tickers)

    def total_distance(self) -> float:
        return float(sum(e.distance for e in self.edges))

    def edge_keys(self) -> frozenset[tuple[str, str]]:
        """Edges as unordered ticker-name pairs, for cross-tree comparison."""
        out = set()
        for e in self.edges:
            a, b = self.tickers[e.i], self.tickers[e.j]
            out.add((a, b) if a <= b else (b, a))
        return frozenset(out)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        for e in self.edges:
            deg[e.i] += 1
            deg[e.j] += 1
        return deg

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for e in self.edges:
            adj[e.i].append(e.j)
            adj[e.j].append(e.i)
        return adj


@dataclass(frozen=True)
class FilteredCorrelation:
    """Correlation matrix with non-tree entries zeroed; unit diagonal kept."""

    tickers: tuple[str, ...]
    values: np.ndarray


class _UnionFind:
    """Disjoint sets with path compression and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def kruskal_mst(dist: DistanceMatrix, corr: CorrelationMatrix) -> Tree:
    """Kruskal's algorithm on the distance graph.

    Equal distances are broken lexicographically on the (i, j) index pair so
    runs are bit-reproducible.
    """
    if dist.tickers != corr.tickers:
        raise DataError("distance and correlation tickers differ")
    p = len(dist.tickers)
    if p < 2:
        raise DataError("need at least 2 assets to span a tree")
    iu, ju = np.triu_indices(p, k=1)
    weights = dist.values[iu, ju]
    if not np.all(np.isfinite(weights)):
        raise DataError("non-finite distance in matrix")
    order = np.lexsort((ju, iu, weights))
    uf = _UnionFind(p)
    edges: list[TreeEdge] = []
    cvals = corr.values
    for k in order:
        a, b = int(iu[k]), int(ju[k])
        if uf.union(a, b):
            edges.append(TreeEdge(a, b, float(weights[k]), float(cvals[a, b])))
            if len(edges) == p - 1:
                break
    return Tree(dist.tickers, tuple(edges))


def mst_filter(tree: Tree, corr: CorrelationMatrix) -> FilteredCorrelation:
    """Zero out every correlation that is not a tree edge; keep the diagonal."""
    if tree.tickers != corr.tickers:
        absent = sorted(set(tree.tickers) - set(corr.tickers))
        if absent:
            raise DataError(
                f"tree edge references tickers absent from the matrix: {', '.join(absent)}"
            )
        raise DataError("tree and correlation tickers are ordered differently")
    p = len(corr.tickers)
    values = np.zeros((p, p))
    np.fill_diagonal(values, 1.0)
    for e in tree.edges:
        c = corr.values[e.i, e.j]
        values[e.i, e.j] = values[e.j, e.i] = c
    return FilteredCorrelation(corr.tickers, values)


def write_tree_csv(tree: Tree, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["source", "target", "distance", "correlation"])
    for e in tree.edges:
        writer.writerow(
            [tree.tickers[e.i], tree.tickers[e.j], repr(e.distance), repr(e.correlation)]
        )


def read_tree_csv(source: TextIO, tickers: tuple[str, ...]) -> Tree:
    index = {t: k for k, t in enumerate(tickers)}
    reader = csv.reader(source)
    next(reader)  # header
    edges = []
    for record in reader:
        if not record:
            continue
        a, b = index[record[0]], index[record[1]]
        if a > b:
            a, b = b, a
        edges.append(TreeEdge(a, b, float(record[2]), float(record[3])))
    return Tree(tickers, tuple(edges))


def tree_to_json(tree: Tree) -> str:
    """Adjacency document: per-node neighbour lists with edge weights."""
    adjacency: dict[str, list[dict[str, float | str]]] = {t: [] for t in tree.tickers}
    for e in tree.edges:
        a, b = tree.tickers[e.i], tree.tickers[e.j]
        adjacency[a].append(
            {"neighbor": b, "distance": e.distance, "correlation": e.correlation}
        )
        adjacency[b].append(
            {"neighbor": a, "distance": e.distance, "correlation": e.correlation}
        )
    return json.dumps(
        {"tickers": list(tree.tickers), "adjacency": adjacency}, sort_keys=True
    )
