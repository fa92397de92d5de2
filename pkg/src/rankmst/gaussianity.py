"""Univariate normality diagnostics and quantile normalization.

The KS statistic is measured against a Gaussian fitted to the series (sample
mean and n-1 standard deviation), evaluated at both one-sided jumps of the
empirical CDF.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.special import ndtr, ndtri

from .correlation import average_rank
from .data import ReturnPanel
from .errors import DataError

DEFAULT_QUANTILES = 200


@dataclass(frozen=True)
class KSRecord:
    ticker: str
    window_start: int
    distance: float


def ks_distance_gaussian(series: np.ndarray) -> float:
    """Supremum distance between the empirical CDF and a fitted Gaussian."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise DataError("KS distance needs a 1-d series of length >= 2")
    sd = x.std(ddof=1)
    if sd == 0:
        raise DataError("zero-variance series")
    z = np.sort((x - x.mean()) / sd)
    cdf = ndtr(z)
    n = x.size
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(np.maximum(np.abs(upper - cdf), np.abs(lower - cdf)).max())


def quantile_normalize(
    panel: ReturnPanel, n_quantiles: int = DEFAULT_QUANTILES
) -> ReturnPanel:
    """Map each column onto standard-normal quantiles by rank.

    Empirical quantile levels (rank - 0.5)/n are interpolated linearly on a
    midpoint grid of ``n_quantiles`` standard-normal quantiles; levels past
    the grid ends clamp to the end quantiles.  Ties share an average rank and
    therefore map to the same value.
    """
    if n_quantiles < 2:
        raise DataError("need at least 2 quantiles")
    x = panel.returns
    constant = np.ptp(x, axis=0) == 0
    if constant.any():
        ticker = panel.tickers[int(np.argmax(constant))]
        raise DataError(f"constant column: {ticker}")
    n = x.shape[0]
    grid_p = (np.arange(1, n_quantiles + 1) - 0.5) / n_quantiles
    grid_z = ndtri(grid_p)
    levels = (average_rank(x) - 0.5) / n
    out = np.empty_like(x)
    for j in range(x.shape[1]):
        out[:, j] = np.interp(levels[:, j], grid_p, grid_z)
    return ReturnPanel(panel.dates, panel.tickers, out)


def spearman_rho(x: np.ndarray, y: np.ndarray) -> float:
    """Spearman correlation of two 1-d samples (average ranks, then Pearson)."""
    rx = average_rank(np.asarray(x, dtype=np.float64))
    ry = average_rank(np.asarray(y, dtype=np.float64))
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt((rx @ rx) * (ry @ ry))
    if denom == 0:
        raise DataError("constant ranks; Spearman correlation undefined")
    return float((rx @ ry) / denom)


def node_ks_correlation(
    node_diffs: Mapping[tuple[int, str], float], ks: Iterable[KSRecord]
) -> float:
    """Spearman correlation between node differences and KS distances, pooled
    over all matched (window, ticker) points."""
    ks_map = {(r.window_start, r.ticker): r.distance for r in ks}
    keys = sorted(set(node_diffs) & set(ks_map))
    if len(keys) < 3:
        raise DataError("need at least 3 matched (window, ticker) points")
    d = np.array([node_diffs[k] for k in keys])
    k = np.array([ks_map[k] for k in keys])
    return spearman_rho(d, k)
