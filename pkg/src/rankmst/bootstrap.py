"""Circular block bootstrap of return panels and the robustness statistics
computed from replicate-to-replicate differences."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from . import correlation
from .data import ReturnPanel
from .errors import DataError
from .parallel import map_ordered
from .stability import edge_difference, matrix_difference
from .tree import FilteredCorrelation, Tree, kruskal_mst, mst_filter

DEFAULT_REPLICATES = 1000
DEFAULT_OUTPUT_LENGTH = 504
DEFAULT_SOURCE_LENGTH = 1008
DEFAULT_BLOCK_LENGTH = 20
DEFAULT_PAIR_BUDGET = 50_000

LAYER_FULL = "full"
LAYER_MST_WEIGHTED = "mst_weighted"
LAYER_MST_UNWEIGHTED = "mst_unweighted"
LAYERS = (LAYER_MST_WEIGHTED, LAYER_MST_UNWEIGHTED, LAYER_FULL)


@dataclass(frozen=True)
class BootstrapSpec:
    replicates: int = DEFAULT_REPLICATES
    output_length: int = DEFAULT_OUTPUT_LENGTH
    source_length: int = DEFAULT_SOURCE_LENGTH
    block_length: int = DEFAULT_BLOCK_LENGTH
    seed: int = 0

    def __post_init__(self):
        if self.replicates < 2:
            raise DataError("need at least 2 bootstrap replicates")
        if self.block_length < 1:
            raise DataError("block length must be at least 1 day")
        if self.output_length < 2 or self.source_length < 2:
            raise DataError("bootstrap lengths must be at least 2 days")


@dataclass(frozen=True)
class RobustnessRow:
    method: str
    layer: str
    mean: float
    sd: float


@dataclass(frozen=True)
class RobustnessTable:
    rows: tuple[RobustnessRow, ...]


def replicate_indices(
    starts: Sequence[int], block_length: int, output_length: int, source_length: int
) -> np.ndarray:
    """Row indices for one replicate: consecutive blocks, wrapping at the end
    of the source, truncated to the output length."""
    offsets = np.arange(block_length)
    rows = (np.asarray(starts, dtype=np.int64)[:, None] + offsets[None, :]) % source_length
    return rows.reshape(-1)[:output_length]


def circular_bootstrap(panel: ReturnPanel, spec: BootstrapSpec) -> list[ReturnPanel]:
    """Pseudo-panels drawn with a circular block bootstrap.

    Every column of a replicate uses the same resampled row indices, so the
    cross-sectional dependence of the source panel is preserved.  Each
    replicate has its own generator spawned from the master seed, making the
    output independent of scheduling.
    """
    if panel.n_days != spec.source_length:
        raise DataError(
            f"panel has {panel.n_days} rows; bootstrap source length is "
            f"{spec.source_length}"
        )
    n_blocks = -(-spec.output_length // spec.block_length)  # ceil
    children = np.random.SeedSequence(spec.seed).spawn(spec.replicates)
    dates = panel.dates[: spec.output_length]
    out = []
    for child in children:
        rng = np.random.default_rng(child)
        starts = rng.integers(0, spec.source_length, size=n_blocks)
        rows = replicate_indices(starts, spec.block_length, spec.output_length, spec.source_length)
        out.append(ReturnPanel(dates, panel.tickers, panel.returns[rows]))
    return out


def sample_pairs(n: int, budget: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """All C(n,2) unordered pairs when they fit the budget, else a seeded
    uniform sample of ``budget`` distinct pairs."""
    if budget < 1:
        raise DataError("pair budget must be at least 1")
    iu, ju = np.triu_indices(n, k=1)
    total = iu.size
    if total <= budget:
        return iu, ju
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    chosen = rng.choice(total, size=budget, replace=False)
    chosen.sort()
    return iu[chosen], ju[chosen]


def _mean_sd(values: np.ndarray) -> tuple[float, float]:
    mean = float(values.mean())
    sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return mean, sd


def robustness_rows(
    panels: Sequence[ReturnPanel],
    method: str,
    pair_budget: int = DEFAULT_PAIR_BUDGET,
    seed: int = 0,
    threads: int = 1,
) -> list[RobustnessRow]:
    """Mean and s.d. of pairwise replicate differences for one coefficient.

    Three layers are reported: sum-normalized full-matrix difference,
    the same difference on MST-filtered matrices, and the unweighted
    edge difference between MSTs.
    """
    if len(panels) < 2:
        raise DataError("need at least 2 replicate panels")

    def build(panel: ReturnPanel) -> tuple[correlation.CorrelationMatrix, Tree, FilteredCorrelation]:
        corr = correlation.compute(method, panel)
        tree = kruskal_mst(correlation.to_distance(corr), corr)
        return corr, tree, mst_filter(tree, corr)

    built = map_ordered(build, panels, threads)
    iu, ju = sample_pairs(len(panels), pair_budget, seed)
    full = np.empty(iu.size)
    weighted = np.empty(iu.size)
    unweighted = np.empty(iu.size)
    for k in range(iu.size):
        ca, ta, fa = built[iu[k]]
        cb, tb, fb = built[ju[k]]
        full[k] = matrix_difference(ca, cb)
        weighted[k] = matrix_difference(fa, fb)
        unweighted[k] = edge_difference(ta, tb)
    rows = []
    for layer, values in (
        (LAYER_MST_WEIGHTED, weighted),
        (LAYER_MST_UNWEIGHTED, unweighted),
        (LAYER_FULL, full),
    ):
        mean, sd = _mean_sd(values)
        rows.append(RobustnessRow(method, layer, mean, sd))
    return rows


def robustness_table(
    panels: Sequence[ReturnPanel],
    methods: Sequence[str],
    pair_budget: int = DEFAULT_PAIR_BUDGET,
    seed: int = 0,
    threads: int = 1,
) -> RobustnessTable:
    rows: list[RobustnessRow] = []
    for method in methods:
        rows.extend(robustness_rows(panels, method, pair_budget, seed, threads))
    return RobustnessTable(tuple(rows))


def write_robustness_csv(table: RobustnessTable, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["method", "layer", "mean", "sd"])
    for row in table.rows:
        writer.writerow([row.method, row.layer, repr(row.mean), repr(row.sd)])
