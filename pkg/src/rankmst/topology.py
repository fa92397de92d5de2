"""Node and sector centralities plus tree-shape measures (leaf fraction,
average shortest path, mean occupation layer, degree power-law exponent)."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .data import SectorMap
from .errors import DataError
from .tree import Tree

DEGREE = "degree"
BETWEENNESS = "betweenness"


@dataclass(frozen=True)
class CentralityVector:
    kind: str
    tickers: tuple[str, ...]
    values: np.ndarray


@dataclass(frozen=True)
class SectorCentrality:
    """Per-sector centrality, normalized to sum to 1 across sectors."""

    values: dict[str, float]


@dataclass(frozen=True)
class TopologySummary:
    leaf_fraction: float
    average_shortest_path: float
    mean_occupation_layer: float
    powerlaw_exponent: float


def degree_centrality(tree: Tree) -> CentralityVector:
    """Unweighted degree divided by p - 1."""
    deg = tree.degrees().astype(np.float64)
    return CentralityVector(DEGREE, tree.tickers, deg / (tree.n_nodes - 1))


def _subtree_sizes(tree: Tree) -> tuple[list[int], list[int], np.ndarray]:
    """Iterative DFS from node 0: returns (order, parent, subtree sizes)."""
    p = tree.n_nodes
    adj = tree.adjacency()
    parent = [-1] * p
    order: list[int] = []
    stack = [0]
    seen = [False] * p
    seen[0] = True
    while stack:
        node = stack.pop()
        order.append(node)
        for nb in adj[node]:
            if not seen[nb]:
                seen[nb] = True
                parent[nb] = node
                stack.append(nb)
    sizes = np.ones(p, dtype=np.int64)
    for node in reversed(order):
        if parent[node] >= 0:
            sizes[parent[node]] += sizes[node]
    return order, parent, sizes


def betweenness_centrality(tree: Tree) -> CentralityVector:
    """Fraction of the (p-1)(p-2)/2 off-node pairs whose unique path crosses
    each node.

    Removing node v splits the tree into components of sizes c_1..c_k; the
    number of pairs routed through v is (( sum c )^2 - sum c^2) / 2.
    """
    p = tree.n_nodes
    if p < 3:
        return CentralityVector(
            BETWEENNESS, tree.tickers, np.zeros(p, dtype=np.float64)
        )
    adj = tree.adjacency()
    _, parent, sizes = _subtree_sizes(tree)
    values = np.empty(p, dtype=np.float64)
    rest = p - 1  # total nodes other than v, in every case
    for v in range(p):
        comp_sq = 0
        for nb in adj[v]:
            size = sizes[nb] if parent[nb] == v else p - sizes[v]
            comp_sq += size * size
        values[v] = 0.5 * (rest * rest - comp_sq)
    values /= 0.5 * (p - 1) * (p - 2)
    return CentralityVector(BETWEENNESS, tree.tickers, values)


def sector_centrality(cv: CentralityVector, sectors: SectorMap) -> SectorCentrality:
    """Mean node centrality per sector, normalized so sectors sum to 1."""
    missing = [t for t in cv.tickers if t not in sectors.entries]
    if missing:
        raise DataError(f"no sector assigned for: {', '.join(missing)}")
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for ticker, value in zip(cv.tickers, cv.values):
        sector = sectors.entries[ticker]
        sums[sector] = sums.get(sector, 0.0) + float(value)
        counts[sector] = counts.get(sector, 0) + 1
    raw = {s: sums[s] / counts[s] for s in sums}
    total = sum(raw.values())
    if total == 0:
        raise DataError("all node centralities are zero; cannot normalize sectors")
    return SectorCentrality({s: raw[s] / total for s in sorted(raw)})


def leaf_fraction(tree: Tree) -> float:
    """Share of nodes with exactly one edge."""
    deg = tree.degrees()
    return float(np.count_nonzero(deg == 1)) / tree.n_nodes


def average_shortest_path(tree: Tree) -> float:
    """Mean hop-count distance over unordered node pairs.

    Each edge lies on a(p - a) paths, where a is the size of the subtree it
    cuts off, so the all-pairs total is a single pass over edges.
    """
    p = tree.n_nodes
    _, parent, sizes = _subtree_sizes(tree)
    total = 0
    for node in range(1, p):
        if parent[node] >= 0:
            a = int(sizes[node])
            total += a * (p - a)
    # node 0 is the DFS root; every non-root node has a parent edge
    return total / (p * (p - 1) / 2)


def tree_center(tree: Tree) -> int:
    """Index of the max-degree node; ties go to the lowest ticker index."""
    return int(np.argmax(tree.degrees()))


def hop_distances_from(tree: Tree, source: int) -> np.ndarray:
    dist = np.full(tree.n_nodes, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    adj = tree.adjacency()
    while queue:
        node = queue.popleft()
        for nb in adj[node]:
            if dist[nb] < 0:
                dist[nb] = dist[node] + 1
                queue.append(nb)
    return dist


def mean_occupation_layer(tree: Tree) -> float:
    """Mean hop distance of all nodes to the tree center (max-degree node)."""
    return float(hop_distances_from(tree, tree_center(tree)).mean())


def degree_powerlaw_exponent(tree: Tree) -> float:
    """Discrete maximum-likelihood power-law exponent of the degree
    distribution with k_min = 1: 1 + m / sum(ln(2 k))."""
    if tree.n_nodes < 3:
        raise DataError("power-law fit needs at least 3 nodes")
    deg = tree.degrees()
    if np.all(deg == deg[0]):
        raise DataError("degenerate degree distribution")
    log_sum = float(np.log(2.0 * deg).sum())
    return 1.0 + deg.size / log_sum


def topology_summary(tree: Tree) -> TopologySummary:
    return TopologySummary(
        leaf_fraction=leaf_fraction(tree),
        average_shortest_path=average_shortest_path(tree),
        mean_occupation_layer=mean_occupation_layer(tree),
        powerlaw_exponent=degree_powerlaw_exponent(tree),
    )
