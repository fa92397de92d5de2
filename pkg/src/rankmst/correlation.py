"""Pearson, Spearman, and Kendall tau-b correlation matrices, the distance
transform d = sqrt(2(1-c)), and the largest eigenvalue."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from ._kendall import kendall_pair_counts
from .data import ReturnPanel
from .errors import DataError

PEARSON = "pearson"
SPEARMAN = "spearman"
KENDALL = "kendall_tau_b"
METHODS = (PEARSON, SPEARMAN, KENDALL)

# floating-point slop tolerated before clamping correlations into [-1, 1]
_CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class CorrelationMatrix:
    method: str
    tickers: tuple[str, ...]
    values: np.ndarray  # p x p, symmetric, unit diagonal

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"unknown correlation method {self.method!r}")
        p = len(self.tickers)
        if self.values.shape != (p, p):
            raise DataError("correlation matrix shape does not match tickers")


@dataclass(frozen=True)
class DistanceMatrix:
    tickers: tuple[str, ...]
    values: np.ndarray  # p x p, symmetric, zero diagonal, entries in [0, 2]


def _finalize(values: np.ndarray) -> np.ndarray:
    out = 0.5 * (values + values.T)
    np.clip(out, -1.0, 1.0, out=out)
    np.fill_diagonal(out, 1.0)
    return out


def _check_panel(panel: ReturnPanel) -> np.ndarray:
    if panel.n_days < 2:
        raise DataError("correlation needs at least 2 observations")
    x = panel.returns
    constant = np.ptp(x, axis=0) == 0
    if constant.any():
        ticker = panel.tickers[int(np.argmax(constant))]
        raise DataError(f"zero-variance column: {ticker}")
    return x


def pearson(panel: ReturnPanel) -> CorrelationMatrix:
    """Sample Pearson correlation of the panel's columns."""
    x = _check_panel(panel)
    return CorrelationMatrix(PEARSON, panel.tickers, _pearson_values(x))


def _pearson_values(x: np.ndarray) -> np.ndarray:
    centered = x - x.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", centered, centered))
    z = centered / norms
    return _finalize(z.T @ z)


def tie_group_sizes(column: np.ndarray) -> list[int]:
    """Sizes of the tie groups (runs of equal values) with at least 2 members.

    These are the t_a/u_a counts behind the tau-b denominator corrections:
    a column contributes sum(t*(t-1)/2) tied pairs.
    """
    svals = np.sort(np.asarray(column))
    boundaries = np.flatnonzero(svals[1:] != svals[:-1]) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [svals.size]))
    return [int(e - s) for s, e in zip(starts, ends) if e - s >= 2]


def average_rank(values: np.ndarray) -> np.ndarray:
    """Column-wise 1-based ranks; tied values share the average of their positions."""
    x = values.reshape(-1, 1) if values.ndim == 1 else values
    ranks = np.empty_like(x, dtype=np.float64)
    for j in range(x.shape[1]):
        col = x[:, j]
        order = np.argsort(col, kind="stable")
        svals = col[order]
        boundaries = np.flatnonzero(svals[1:] != svals[:-1]) + 1
        starts = np.concatenate(([0], boundaries))
        ends = np.concatenate((boundaries, [col.size]))
        group_rank = 0.5 * (starts + ends - 1) + 1.0
        ranks[order, j] = np.repeat(group_rank, ends - starts)
    return ranks if values.ndim == 2 else ranks[:, 0]


def spearman(panel: ReturnPanel) -> CorrelationMatrix:
    """Pearson correlation of the column-wise average ranks."""
    x = _check_panel(panel)
    values = _pearson_values(average_rank(x))
    return CorrelationMatrix(SPEARMAN, panel.tickers, values)


def kendall_tau_b(panel: ReturnPanel) -> CorrelationMatrix:
    """Tie-corrected Kendall correlation for every column pair.

    Concordant-minus-discordant counts come from merge-sort inversion
    counting, so each pair costs O(n log n) rather than O(n^2).
    """
    x = _check_panel(panel)
    p = x.shape[1]
    cols = [np.ascontiguousarray(x[:, j]) for j in range(p)]
    values = np.eye(p)
    for i in range(p):
        for j in range(i + 1, p):
            nc_minus_nd, n1, n2, n0 = kendall_pair_counts(cols[i], cols[j])
            denom = math.sqrt(float(n0 - n1) * float(n0 - n2))
            if denom == 0:
                # unreachable given the zero-variance guard, kept as a safety net
                raise DataError(
                    f"tau-b denominator is zero for pair "
                    f"({panel.tickers[i]}, {panel.tickers[j]})"
                )
            values[i, j] = values[j, i] = nc_minus_nd / denom
    return CorrelationMatrix(KENDALL, panel.tickers, _finalize(values))


def compute(method: str, panel: ReturnPanel) -> CorrelationMatrix:
    """Dispatch on the method tag."""
    if method == PEARSON:
        return pearson(panel)
    if method == SPEARMAN:
        return spearman(panel)
    if method == KENDALL:
        return kendall_tau_b(panel)
    raise DataError(f"unknown correlation method {method!r}")


def to_distance(corr: CorrelationMatrix) -> DistanceMatrix:
    """Map correlations to distances via d = sqrt(2(1-c)).

    Correlations out of [-1, 1] by at most 1e-9 are clamped (floating error);
    larger violations raise.
    """
    c = corr.values
    overflow = np.max(np.abs(c)) - 1.0
    if overflow > _CLAMP_TOL:
        raise DataError(f"correlation exceeds [-1, 1] by {overflow:.3e}")
    clipped = np.clip(c, -1.0, 1.0)
    d = np.sqrt(2.0 * (1.0 - clipped))
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(corr.tickers, d)


def largest_eigenvalue(corr: CorrelationMatrix) -> float:
    """Maximum eigenvalue of the (symmetric) correlation matrix."""
    return float(np.linalg.eigvalsh(corr.values)[-1])


def coefficient_scatter(
    cx: CorrelationMatrix, cy: CorrelationMatrix
) -> list[tuple[float, float]]:
    """Upper-triangle coefficient pairs (i < j order) for scatter comparison."""
    if cx.tickers != cy.tickers:
        raise DataError("ticker universes differ between correlation matrices")
    iu, ju = np.triu_indices(len(cx.tickers), k=1)
    return list(zip(cx.values[iu, ju].tolist(), cy.values[iu, ju].tolist()))


def write_matrix_csv(corr: CorrelationMatrix | DistanceMatrix, stream: TextIO) -> None:
    """Ticker-labelled square CSV (header row and leading label column)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["", *corr.tickers])
    for ticker, row in zip(corr.tickers, corr.values):
        writer.writerow([ticker, *[repr(float(v)) for v in row]])


def matrix_to_json(corr: CorrelationMatrix) -> str:
    return json.dumps(
        {
            "method": corr.method,
            "tickers": list(corr.tickers),
            "values": [[float(v) for v in row] for row in corr.values],
        },
        sort_keys=True,
    )


def matrix_from_json(text: str) -> CorrelationMatrix:
    doc = json.loads(text)
    return CorrelationMatrix(
        doc["method"], tuple(doc["tickers"]), np.asarray(doc["values"], dtype=np.float64)
    )


def read_matrix_csv(
    source: TextIO, method: str = PEARSON
) -> CorrelationMatrix:
    reader = csv.reader(source)
    header = next(reader)
    tickers = tuple(t for t in header[1:])
    rows = [[float(v) for v in record[1:]] for record in reader if record]
    return CorrelationMatrix(method, tickers, np.asarray(rows, dtype=np.float64))
