"""Pipeline stages that turn a price CSV into plot-ready analysis artifacts.

Every stage consumes the artifacts of earlier stages from the output
directory, so expensive stages can be re-run in isolation.  All products are
CSV/JSON with floats written via repr, which makes byte-identical reruns of
the same config+seed possible (the manifest carries no timestamps).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import __version__, correlation
from .bootstrap import BootstrapSpec, circular_bootstrap, robustness_table, write_robustness_csv
from .config import RunConfig, validate
from .data import (
    ReturnPanel,
    WindowSpec,
    clean_prices,
    load_prices,
    load_sectors,
    log_returns,
    read_returns_csv,
    sample_variances,
    windows,
    write_prices_csv,
    write_returns_csv,
)
from .errors import ConfigError, DataError
from .gaussianity import KSRecord, ks_distance_gaussian, node_ks_correlation, quantile_normalize
from .parallel import map_ordered
from .portfolio import (
    PortfolioWeights,
    covariance_from_correlation,
    min_variance_weights,
    sharpe_out_of_sample,
    shrink,
    turnover,
)
from .report import build_report, write_report_csv
from .stability import (
    TreeSequence,
    edge_difference,
    node_difference,
    persistent_edges,
    stability_report,
)
from .topology import (
    betweenness_centrality,
    degree_centrality,
    sector_centrality,
    topology_summary,
)
from .tree import Tree, kruskal_mst, mst_filter, read_tree_csv, write_tree_csv

FULL_PORTFOLIO = "full"


class Workspace:
    """Tracks every file written under the output directory with its digest."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}

    def write_text(self, relpath: str, text: str) -> None:
        path = self.root / relpath
        path.parent.mkdir(parents=True, exist_ok=True)
        data = text.encode("utf-8")
        path.write_bytes(data)
        self.files[relpath] = hashlib.sha256(data).hexdigest()

    def read_text(self, relpath: str) -> str:
        path = self.root / relpath
        if not path.is_file():
            raise DataError(
                f"missing artifact {relpath!r}; run the earlier pipeline stages first"
            )
        return path.read_text(encoding="utf-8")

    def exists(self, relpath: str) -> bool:
        return (self.root / relpath).is_file()


def _csv_text(write: Callable[[io.StringIO], None]) -> str:
    buf = io.StringIO()
    write(buf)
    return buf.getvalue()


def _rows_csv(header: list[str], rows: Iterable[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _fmt(value: float) -> str:
    return repr(float(value))


def _corr_path(method: str, start: int) -> str:
    return f"correlations/corr_{method}_w{start:06d}.csv"


def _tree_path(method: str, start: int) -> str:
    return f"trees/mst_{method}_w{start:06d}.csv"


def _load_panel(ws: Workspace) -> ReturnPanel:
    return read_returns_csv(io.StringIO(ws.read_text("returns.csv")))


def _load_windows(config: RunConfig, ws: Workspace) -> list[tuple[int, ReturnPanel]]:
    panel = _load_panel(ws)
    return windows(panel, WindowSpec(config.window, config.step))


def _load_corr(ws: Workspace, method: str, start: int) -> correlation.CorrelationMatrix:
    return correlation.read_matrix_csv(
        io.StringIO(ws.read_text(_corr_path(method, start))), method
    )


def _load_tree(ws: Workspace, method: str, start: int, tickers: tuple[str, ...]) -> Tree:
    return read_tree_csv(io.StringIO(ws.read_text(_tree_path(method, start))), tickers)


def stage_clean(config: RunConfig, ws: Workspace) -> None:
    with open(config.prices, "r", encoding="utf-8", newline="") as f:
        table = load_prices(f)
    with open(config.sectors, "r", encoding="utf-8", newline="") as f:
        sectors = load_sectors(f)
    cleaned = clean_prices(table, config.max_missing_frac)
    panel = log_returns(cleaned)
    used = sectors.for_universe(panel.tickers)
    ws.write_text("cleaned_prices.csv", _csv_text(lambda s: write_prices_csv(cleaned, s)))
    ws.write_text("returns.csv", _csv_text(lambda s: write_returns_csv(panel, s)))
    ws.write_text(
        "sectors_used.csv",
        _rows_csv(["ticker", "sector"], [[t, used.entries[t]] for t in panel.tickers]),
    )


def stage_correlate(config: RunConfig, ws: Workspace) -> None:
    wins = _load_windows(config, ws)
    methods = config.methods

    def one(window: tuple[int, ReturnPanel]):
        start, panel = window
        corrs = {m: correlation.compute(m, panel) for m in methods}
        eigen = {m: correlation.largest_eigenvalue(corrs[m]) for m in methods}
        return start, corrs, eigen

    results = map_ordered(one, wins, config.effective_threads())

    eigen_rows = []
    scatter: dict[tuple[str, str], list[list]] = {
        (a, b): [] for i, a in enumerate(methods) for b in methods[i + 1 :]
    }
    for start, corrs, eigen in results:
        for m in methods:
            ws.write_text(
                _corr_path(m, start),
                _csv_text(lambda s, c=corrs[m]: correlation.write_matrix_csv(c, s)),
            )
            eigen_rows.append([start, m, _fmt(eigen[m])])
        for (ma, mb), rows in scatter.items():
            pairs = correlation.coefficient_scatter(corrs[ma], corrs[mb])
            tickers = corrs[ma].tickers
            iu, ju = np.triu_indices(len(tickers), k=1)
            for k, (x, y) in enumerate(pairs):
                rows.append([start, tickers[iu[k]], tickers[ju[k]], _fmt(x), _fmt(y)])
    ws.write_text(
        "eigenvalues.csv",
        _rows_csv(["window_start", "method", "largest_eigenvalue"], eigen_rows),
    )
    for (ma, mb), rows in scatter.items():
        ws.write_text(
            f"scatter_{ma}_vs_{mb}.csv",
            _rows_csv(["window_start", "ticker_i", "ticker_j", ma, mb], rows),
        )


def stage_mst(config: RunConfig, ws: Workspace) -> None:
    wins = _load_windows(config, ws)
    for start, _ in wins:
        for m in config.methods:
            corr = _load_corr(ws, m, start)
            tree = kruskal_mst(correlation.to_distance(corr), corr)
            ws.write_text(
                _tree_path(m, start),
                _csv_text(lambda s, t=tree: write_tree_csv(t, s)),
            )


def _method_pair(a: str, b: str) -> str:
    return f"{a}|{b}"


def stage_stability(config: RunConfig, ws: Workspace) -> None:
    wins = _load_windows(config, ws)
    starts = [s for s, _ in wins]
    tickers = wins[0][1].tickers
    trees = {
        m: [_load_tree(ws, m, s, tickers) for s in starts] for m in config.methods
    }
    rows: list[list] = []
    for m in config.methods:
        seq = TreeSequence(tuple(trees[m]), tuple(starts))
        rep = stability_report(seq)
        for start, diff in zip(starts[1:], rep.edge_differences):
            rows.append([start, m, "edge_difference", _fmt(diff)])
        for start, ratio in zip(starts, rep.survival_ratios):
            rows.append([start, m, "survival_ratio", _fmt(ratio)])
        ws.write_text(
            f"persistent_edges_{m}.csv",
            _rows_csv(["source", "target"], [list(e) for e in sorted(rep.persistent)]),
        )
    for i, ma in enumerate(config.methods):
        for mb in config.methods[i + 1 :]:
            for k, start in enumerate(starts):
                diff = edge_difference(trees[ma][k], trees[mb][k])
                rows.append(
                    [start, _method_pair(ma, mb), "cross_method_edge_difference", _fmt(diff)]
                )
    ws.write_text(
        "stability.csv", _rows_csv(["window_start", "method_pair", "metric", "value"], rows)
    )


def stage_centrality(config: RunConfig, ws: Workspace) -> None:
    wins = _load_windows(config, ws)
    tickers = wins[0][1].tickers
    sectors = load_sectors(io.StringIO(ws.read_text("sectors_used.csv")))
    centrality_rows: list[list] = []
    topology_rows: list[list] = []
    for start, _ in wins:
        for m in config.methods:
            tree = _load_tree(ws, m, start, tickers)
            for kind, cv in (
                ("degree", degree_centrality(tree)),
                ("betweenness", betweenness_centrality(tree)),
            ):
                sc = sector_centrality(cv, sectors)
                for sector, value in sc.values.items():
                    centrality_rows.append(
                        [start, m, sector, f"sector_{kind}_centrality", _fmt(value)]
                    )
            summary = topology_summary(tree)
            for metric, value in (
                ("leaf_fraction", summary.leaf_fraction),
                ("average_shortest_path", summary.average_shortest_path),
                ("mean_occupation_layer", summary.mean_occupation_layer),
                ("powerlaw_exponent", summary.powerlaw_exponent),
            ):
                topology_rows.append([start, m, "tree", metric, _fmt(value)])
    header = ["window_start", "method", "sector_or_node", "metric", "value"]
    ws.write_text("centrality.csv", _rows_csv(header, centrality_rows))
    ws.write_text("topology.csv", _rows_csv(header, topology_rows))


def stage_gaussianity(config: RunConfig, ws: Workspace) -> None:
    wins = _load_windows(config, ws)
    tickers = wins[0][1].tickers
    methods = config.methods

    ks_records: list[KSRecord] = []
    for start, panel in wins:
        for j, ticker in enumerate(tickers):
            ks_records.append(
                KSRecord(ticker, start, ks_distance_gaussian(panel.returns[:, j]))
            )
    ws.write_text(
        "ks_records.csv",
        _rows_csv(
            ["window_start", "ticker", "ks_distance"],
            [[r.window_start, r.ticker, _fmt(r.distance)] for r in ks_records],
        ),
    )

    pairs = [(a, b) for i, a in enumerate(methods) for b in methods[i + 1 :]]
    diff_rows: list[list] = []
    spearman_rows: list[list] = []
    for layer in ("full", "mst"):
        for ma, mb in pairs:
            diffs: dict[tuple[int, str], float] = {}
            for start, _ in wins:
                ca = _load_corr(ws, ma, start)
                cb = _load_corr(ws, mb, start)
                if layer == "mst":
                    ca = mst_filter(_load_tree(ws, ma, start, tickers), ca)
                    cb = mst_filter(_load_tree(ws, mb, start, tickers), cb)
                vec = node_difference(ca, cb)
                for ticker, value in zip(tickers, vec):
                    diffs[(start, ticker)] = float(value)
                    diff_rows.append(
                        [start, layer, _method_pair(ma, mb), ticker, _fmt(value)]
                    )
            rho = node_ks_correlation(diffs, ks_records)
            spearman_rows.append(
                [config.label, layer, _method_pair(ma, mb), _fmt(rho)]
            )
    ws.write_text(
        "node_differences.csv",
        _rows_csv(["window_start", "layer", "method_pair", "ticker", "value"], diff_rows),
    )
    ws.write_text(
        "node_ks_spearman.csv",
        _rows_csv(["country", "layer", "method_pair", "spearman_rho"], spearman_rows),
    )

    if config.quantile_normalize:
        _quantile_rerun(config, ws, wins)


def _quantile_rerun(
    config: RunConfig, ws: Workspace, wins: list[tuple[int, ReturnPanel]]
) -> None:
    methods = config.methods
    starts = [s for s, _ in wins]

    def one(window: tuple[int, ReturnPanel]) -> dict[str, Tree]:
        _, panel = window
        normalized = quantile_normalize(panel, config.quantiles)
        out = {}
        for m in methods:
            corr = correlation.compute(m, normalized)
            out[m] = kruskal_mst(correlation.to_distance(corr), corr)
        return out

    per_window = map_ordered(one, wins, config.effective_threads())
    rows: list[list] = []
    for m in methods:
        seq = [pw[m] for pw in per_window]
        for start, (a, b) in zip(starts[1:], zip(seq, seq[1:])):
            rows.append([start, m, "edge_difference", _fmt(edge_difference(a, b))])
    for i, ma in enumerate(methods):
        for mb in methods[i + 1 :]:
            for start, pw in zip(starts, per_window):
                rows.append(
                    [
                        start,
                        _method_pair(ma, mb),
                        "cross_method_edge_difference",
                        _fmt(edge_difference(pw[ma], pw[mb])),
                    ]
                )
    ws.write_text(
        "stability_quantile.csv",
        _rows_csv(["window_start", "method_pair", "metric", "value"], rows),
    )


def stage_portfolio(config: RunConfig, ws: Workspace) -> None:
    wins = _load_windows(config, ws)
    tickers = wins[0][1].tickers
    kinds = [FULL_PORTFOLIO] + [f"mst_{m}" for m in config.methods]
    weight_rows: list[list] = []
    metric_rows: list[list] = []
    previous: dict[str, PortfolioWeights] = {}
    for k, (start, panel) in enumerate(wins):
        variances = sample_variances(panel)
        full_corr = correlation.pearson(panel)
        for kind in kinds:
            if kind == FULL_PORTFOLIO:
                corr_like = full_corr
            else:
                method = kind[len("mst_"):]
                corr = _load_corr(ws, method, start)
                corr_like = mst_filter(_load_tree(ws, method, start, tickers), corr)
            cov = covariance_from_correlation(corr_like, variances)
            shrunk = shrink(cov, config.alpha, config.shrink_target)
            w = min_variance_weights(shrunk)
            for ticker, weight in zip(tickers, w.weights):
                weight_rows.append([start, kind, ticker, _fmt(weight)])
            sharpe = ""
            if k + 1 < len(wins):
                sharpe = _fmt(sharpe_out_of_sample(w, wins[k + 1][1]))
            turn = ""
            if kind in previous:
                turn = _fmt(turnover(w, previous[kind]))
            metric_rows.append([start, kind, sharpe, turn])
            previous[kind] = w
    ws.write_text(
        "weights.csv", _rows_csv(["window_start", "method", "ticker", "weight"], weight_rows)
    )
    ws.write_text(
        "portfolio_metrics.csv",
        _rows_csv(["window_start", "method", "sharpe", "turnover"], metric_rows),
    )


def stage_bootstrap(config: RunConfig, ws: Workspace) -> None:
    panel = _load_panel(ws)
    spec = BootstrapSpec(
        replicates=config.bootstrap_replicates,
        output_length=config.bootstrap_output_length,
        source_length=config.bootstrap_source_length,
        block_length=config.block_length,
        seed=config.seed,
    )
    if panel.n_days < spec.source_length:
        raise DataError(
            f"panel has {panel.n_days} days; bootstrap needs the first "
            f"{spec.source_length}"
        )
    source = ReturnPanel(
        panel.dates[: spec.source_length],
        panel.tickers,
        panel.returns[: spec.source_length],
    )
    replicates = circular_bootstrap(source, spec)
    table = robustness_table(
        replicates,
        config.methods,
        config.pair_budget,
        seed=config.seed,
        threads=config.effective_threads(),
    )
    ws.write_text("robustness.csv", _csv_text(lambda s: write_robustness_csv(table, s)))


def _collect_computed(config: RunConfig, ws: Workspace) -> dict[str, float]:
    computed: dict[str, float] = {}
    if ws.exists("stability.csv"):
        per_method: dict[str, list[float]] = {}
        for record in csv.DictReader(io.StringIO(ws.read_text("stability.csv"))):
            if record["metric"] == "edge_difference":
                per_method.setdefault(record["method_pair"], []).append(
                    float(record["value"])
                )
        for method, values in per_method.items():
            arr = np.asarray(values)
            computed[f"edge_difference/{method}/mean"] = float(arr.mean())
            computed[f"edge_difference/{method}/sd"] = (
                float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            )
        for method in config.methods:
            rel = f"persistent_edges_{method}.csv"
            if ws.exists(rel):
                count = max(len(ws.read_text(rel).splitlines()) - 1, 0)
                computed[f"persistent_edge_count/{method}"] = float(count)
    if ws.exists("node_ks_spearman.csv"):
        for record in csv.DictReader(io.StringIO(ws.read_text("node_ks_spearman.csv"))):
            key = f"node_ks_spearman/{record['layer']}/{record['method_pair']}"
            computed[key] = float(record["spearman_rho"])
    if ws.exists("robustness.csv"):
        for record in csv.DictReader(io.StringIO(ws.read_text("robustness.csv"))):
            base = f"robustness/{record['method']}/{record['layer']}"
            computed[f"{base}/mean"] = float(record["mean"])
            computed[f"{base}/sd"] = float(record["sd"])
    return computed


def stage_report(config: RunConfig, ws: Workspace) -> None:
    rows = build_report(_collect_computed(config, ws), config.label)
    ws.write_text("report.csv", _csv_text(lambda s: write_report_csv(rows, s)))


STAGES: list[tuple[str, Callable[[RunConfig, Workspace], None]]] = [
    ("clean", stage_clean),
    ("correlate", stage_correlate),
    ("mst", stage_mst),
    ("stability", stage_stability),
    ("centrality", stage_centrality),
    ("gaussianity", stage_gaussianity),
    ("portfolio", stage_portfolio),
    ("bootstrap", stage_bootstrap),
    ("report", stage_report),
]

_TOGGLED = {
    "stability": lambda c: c.stability,
    "centrality": lambda c: c.centrality,
    "gaussianity": lambda c: c.gaussianity,
    "portfolio": lambda c: c.portfolio,
    "bootstrap": lambda c: c.bootstrap,
}


def _manifest_doc(config: RunConfig, ws: Workspace, error: str | None = None) -> str:
    doc = {
        "version": __version__,
        "config": config.to_dict(),
        "files": dict(sorted(ws.files.items())),
    }
    if error is not None:
        doc["error"] = error
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _write_manifest(config: RunConfig, ws: Workspace, error: str | None = None) -> None:
    text = _manifest_doc(config, ws, error)
    (ws.root / "manifest.json").parent.mkdir(parents=True, exist_ok=True)
    (ws.root / "manifest.json").write_bytes(text.encode("utf-8"))


def run(config: RunConfig) -> Workspace:
    """Run every enabled stage and write the manifest.

    On failure the manifest still lists whatever was produced, together with
    the error, before the exception propagates.
    """
    problems = validate(config)
    if problems:
        raise ConfigError("; ".join(problems))
    ws = Workspace(config.out)
    try:
        for name, stage in STAGES:
            gate = _TOGGLED.get(name)
            if gate is not None and not gate(config):
                continue
            stage(config, ws)
    except Exception as exc:
        _write_manifest(config, ws, error=f"{type(exc).__name__}: {exc}")
        raise
    _write_manifest(config, ws)
    return ws


def run_stage(config: RunConfig, name: str) -> Workspace:
    """Run a single stage against existing artifacts and refresh the manifest."""
    stage = dict(STAGES).get(name)
    if stage is None:
        raise ConfigError(f"unknown stage {name!r}")
    problems = validate(config)
    if problems:
        raise ConfigError("; ".join(problems))
    ws = Workspace(config.out)
    manifest_path = ws.root / "manifest.json"
    if manifest_path.is_file():
        try:
            ws.files.update(json.loads(manifest_path.read_text())["files"])
        except (json.JSONDecodeError, KeyError):
            pass
    try:
        stage(config, ws)
    except Exception as exc:
        _write_manifest(config, ws, error=f"{type(exc).__name__}: {exc}")
        raise
    _write_manifest(config, ws)
    return ws
