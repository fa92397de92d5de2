"""Informational comparison of computed statistics against published
benchmark values for the US, UK, and German daily-return datasets
(2000-2019).  Deltas are reported for orientation only, never as pass/fail
gates: they are reproducible only with the original data snapshots."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, TextIO

from .correlation import KENDALL, PEARSON, SPEARMAN

# (country, table, metric key) -> reference value
#
# Metric keys:
#   node_ks_spearman/<layer>/<method_pair>     pooled Spearman rho between
#                                              per-node matrix differences and
#                                              per-node KS distances
#   robustness/<method>/<layer>/<stat>         bootstrap replicate differences
#   edge_difference/<method>/<stat>            adjacent-window MST differences
#   persistent_edge_count/<method>             edges surviving every window
REFERENCE_BENCHMARKS: dict[tuple[str, str, str], float] = {}


def _pair(a: str, b: str) -> str:
    return f"{a}|{b}"


def _add_node_ks(country: str, layer: str, ps: float, pt: float, st: float) -> None:
    REFERENCE_BENCHMARKS[
        (country, "node_ks", f"node_ks_spearman/{layer}/{_pair(PEARSON, SPEARMAN)}")
    ] = ps
    REFERENCE_BENCHMARKS[
        (country, "node_ks", f"node_ks_spearman/{layer}/{_pair(PEARSON, KENDALL)}")
    ] = pt
    REFERENCE_BENCHMARKS[
        (country, "node_ks", f"node_ks_spearman/{layer}/{_pair(SPEARMAN, KENDALL)}")
    ] = st


_add_node_ks("US", "full", 0.221, 0.244, -0.114)
_add_node_ks("UK", "full", 0.409, 0.415, -0.104)
_add_node_ks("DE", "full", 0.331, 0.352, -0.075)
_add_node_ks("US", "mst", -0.005, -0.005, -0.016)
_add_node_ks("UK", "mst", 0.000, -0.008, -0.006)
_add_node_ks("DE", "mst", -0.013, 0.008, 0.021)


def _add_robustness(
    country: str, method: str, weighted: tuple[float, float],
    unweighted: tuple[float, float], full: tuple[float, float]
) -> None:
    for layer, (mean, sd) in (
        ("mst_weighted", weighted),
        ("mst_unweighted", unweighted),
        ("full", full),
    ):
        REFERENCE_BENCHMARKS[
            (country, "robustness", f"robustness/{method}/{layer}/mean")
        ] = mean
        REFERENCE_BENCHMARKS[
            (country, "robustness", f"robustness/{method}/{layer}/sd")
        ] = sd


_add_robustness("US", PEARSON, (0.835, 0.218), (0.722, 0.056), (0.234, 0.094))
_add_robustness("US", SPEARMAN, (0.830, 0.209), (0.721, 0.053), (0.175, 0.074))
_add_robustness("US", KENDALL, (0.824, 0.210), (0.720, 0.053), (0.174, 0.071))
_add_robustness("UK", PEARSON, (0.896, 0.214), (0.750, 0.054), (0.296, 0.137))
_add_robustness("UK", SPEARMAN, (0.904, 0.220), (0.749, 0.056), (0.247, 0.123))
_add_robustness("UK", KENDALL, (0.890, 0.220), (0.747, 0.056), (0.248, 0.123))
_add_robustness("DE", PEARSON, (0.732, 0.249), (0.690, 0.064), (0.226, 0.101))
_add_robustness("DE", SPEARMAN, (0.700, 0.235), (0.690, 0.063), (0.128, 0.058))
_add_robustness("DE", KENDALL, (0.665, 0.231), (0.684, 0.062), (0.121, 0.048))

for _method, _mean, _sd in (
    (PEARSON, 0.138, 0.089),
    (SPEARMAN, 0.131, 0.080),
    (KENDALL, 0.128, 0.077),
):
    REFERENCE_BENCHMARKS[("DE", "stability", f"edge_difference/{_method}/mean")] = _mean
    REFERENCE_BENCHMARKS[("DE", "stability", f"edge_difference/{_method}/sd")] = _sd

for _country, _counts in (("US", (4, 7, 8)), ("UK", (3, 5, 4)), ("DE", (2, 2, 2))):
    for _method, _count in zip((PEARSON, SPEARMAN, KENDALL), _counts):
        REFERENCE_BENCHMARKS[
            (_country, "stability", f"persistent_edge_count/{_method}")
        ] = float(_count)


@dataclass(frozen=True)
class ReportRow:
    country: str
    table: str
    metric: str
    reference: float | None
    computed: float | None
    delta: float | None


def build_report(
    computed: Mapping[str, float], country: str
) -> list[ReportRow]:
    """Pair computed metric values with their published counterparts.

    ``computed`` maps metric keys (see REFERENCE_BENCHMARKS) to values.  When
    ``country`` has no published benchmarks, computed values are emitted with
    empty reference columns.
    """
    rows: list[ReportRow] = []
    reference_countries = {c for c, _, _ in REFERENCE_BENCHMARKS}
    if country in reference_countries:
        for (c, table, metric), ref in sorted(REFERENCE_BENCHMARKS.items()):
            if c != country:
                continue
            value = computed.get(metric)
            delta = None if value is None else value - ref
            rows.append(ReportRow(country, table, metric, ref, value, delta))
    else:
        for metric in sorted(computed):
            rows.append(ReportRow(country, "computed", metric, None, computed[metric], None))
    return rows


def write_report_csv(rows: list[ReportRow], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["country", "table", "metric", "reference", "computed", "delta"])
    for row in rows:
        writer.writerow(
            [
                row.country,
                row.table,
                row.metric,
                "" if row.reference is None else repr(row.reference),
                "" if row.computed is None else repr(row.computed),
                "" if row.delta is None else repr(row.delta),
            ]
        )
