"""Edge-set and matrix-difference measures of how trees and correlation
matrices change across windows and across coefficient methods."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .correlation import CorrelationMatrix
from .errors import DataError
from .tree import FilteredCorrelation, Tree

MatrixLike = CorrelationMatrix | FilteredCorrelation


@dataclass(frozen=True)
class TreeSequence:
    """Chronologically ordered trees over one ticker universe."""

    trees: tuple[Tree, ...]
    window_starts: tuple[int, ...]

    def __post_init__(self):
        if not self.trees:
            raise DataError("tree sequence must contain at least one tree")
        if len(self.trees) != len(self.window_starts):
            raise DataError("one window start per tree required")
        universe = self.trees[0].tickers
        if any(t.tickers != universe for t in self.trees):
            raise DataError("all trees must share one ticker universe")
        if any(b <= a for a, b in zip(self.window_starts, self.window_starts[1:])):
            raise DataError("window starts must be strictly increasing")

    def __len__(self) -> int:
        return len(self.trees)


@dataclass
class StabilityReport:
    """Per-transition edge differences, the survival-ratio series, and the
    edges present in every tree."""

    edge_differences: list[float] = field(default_factory=list)
    survival_ratios: list[float] = field(default_factory=list)
    persistent: frozenset[tuple[str, str]] = frozenset()


def edge_difference(t1: Tree, t2: Tree) -> float:
    """Fraction of edges that differ: 1 - |E1 & E2| / (p - 1)."""
    if t1.tickers != t2.tickers:
        raise DataError("trees are over different ticker universes")
    shared = len(t1.edge_keys() & t2.edge_keys())
    return 1.0 - shared / (t1.n_nodes - 1)


def survival_ratio(seq: TreeSequence) -> list[float]:
    """Fraction of the first tree's edges still present in every tree up to t."""
    p_minus_1 = seq.trees[0].n_nodes - 1
    running = seq.trees[0].edge_keys()
    out = [1.0]
    for tree in seq.trees[1:]:
        running = running & tree.edge_keys()
        out.append(len(running) / p_minus_1)
    return out


def persistent_edges(seq: TreeSequence) -> frozenset[tuple[str, str]]:
    """Edges present in every tree of the sequence."""
    running = seq.trees[0].edge_keys()
    for tree in seq.trees[1:]:
        running = running & tree.edge_keys()
    return frozenset(running)


def stability_report(seq: TreeSequence) -> StabilityReport:
    diffs = [
        edge_difference(a, b) for a, b in zip(seq.trees, seq.trees[1:])
    ]
    return StabilityReport(diffs, survival_ratio(seq), persistent_edges(seq))


def _normalized_pair(cx: MatrixLike, cy: MatrixLike) -> tuple[np.ndarray, np.ndarray]:
    if cx.tickers != cy.tickers:
        raise DataError("matrices are over different ticker universes")
    if cx.values.shape != cy.values.shape:
        raise DataError("matrices have different shapes")
    mx = float(cx.values.sum())
    my = float(cy.values.sum())
    if mx == 0 or my == 0:
        raise DataError("matrix entries sum to zero; cannot normalize")
    return cx.values / mx, cy.values / my


def node_difference(cx: MatrixLike, cy: MatrixLike) -> np.ndarray:
    """Per-node sum of absolute differences between sum-normalized matrices.

    Both matrices are divided by the sum of all their entries (diagonal
    included) before differencing, so uniform scaling cancels.
    """
    nx, ny = _normalized_pair(cx, cy)
    diff = np.abs(nx - ny)
    np.fill_diagonal(diff, 0.0)
    return diff.sum(axis=1)


def matrix_difference(cx: MatrixLike, cy: MatrixLike) -> float:
    """Total absolute difference between sum-normalized matrices, all entries."""
    nx, ny = _normalized_pair(cx, cy)
    return float(np.abs(nx - ny).sum())
