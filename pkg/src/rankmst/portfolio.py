"""Minimum-variance portfolios from full or MST-filtered correlation
matrices, with shrinkage, out-of-sample Sharpe, and turnover."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correlation import CorrelationMatrix
from .data import ReturnPanel
from .errors import DataError, SolverError
from .tree import FilteredCorrelation

DEFAULT_ALPHA = 0.9
TRADING_DAYS = 252

# shrinkage targets: scaled identity tr(S)/p * I (standard), or the literal
# tr(S) * I variant kept behind this switch
SCALED_IDENTITY = "scaled_identity"
TRACE_IDENTITY = "trace_identity"


@dataclass(frozen=True)
class CovarianceMatrix:
    tickers: tuple[str, ...]
    values: np.ndarray


@dataclass(frozen=True)
class ShrunkCovariance:
    tickers: tuple[str, ...]
    values: np.ndarray
    alpha: float


@dataclass(frozen=True)
class PortfolioWeights:
    tickers: tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self):
        w = self.weights
        if np.any(w < -1e-10):
            raise DataError("negative portfolio weight")
        if abs(float(w.sum()) - 1.0) > 1e-8:
            raise DataError("portfolio weights must sum to 1")


def covariance_from_correlation(
    corr: CorrelationMatrix | FilteredCorrelation, variances: np.ndarray
) -> CovarianceMatrix:
    """Rescale a correlation matrix by per-asset volatilities."""
    var = np.asarray(variances, dtype=np.float64)
    if var.shape != (len(corr.tickers),):
        raise DataError("one variance per ticker required")
    if np.any(var < 0):
        raise DataError("negative variance")
    vol = np.sqrt(var)
    return CovarianceMatrix(corr.tickers, corr.values * np.outer(vol, vol))


def shrink(
    cov: CovarianceMatrix,
    alpha: float = DEFAULT_ALPHA,
    target: str = SCALED_IDENTITY,
) -> ShrunkCovariance:
    """Convex combination with an identity target to restore definiteness.

    The default target is (tr(S)/p) I; ``target="trace_identity"`` uses the
    much heavier tr(S) I instead.
    """
    if not 0 < alpha <= 1:
        raise DataError("shrinkage alpha must lie in (0, 1]")
    trace = float(np.trace(cov.values))
    if trace <= 0:
        raise DataError("covariance trace must be positive")
    p = len(cov.tickers)
    if target == SCALED_IDENTITY:
        ridge = (1.0 - alpha) * trace / p
    elif target == TRACE_IDENTITY:
        ridge = (1.0 - alpha) * trace
    else:
        raise DataError(f"unknown shrinkage target {target!r}")
    values = alpha * cov.values + ridge * np.eye(p)
    values = 0.5 * (values + values.T)
    try:
        np.linalg.cholesky(values)
    except np.linalg.LinAlgError:
        raise DataError(
            "shrunk covariance is not positive definite; lower alpha or use "
            "the trace_identity target"
        ) from None
    return ShrunkCovariance(cov.tickers, values, alpha)


def min_variance_weights(
    shrunk: ShrunkCovariance, dual_tol: float = 1e-10
) -> PortfolioWeights:
    """Long-only minimum-variance weights.

    Solves min w'Qw subject to sum(w) = 1, w >= 0 through the equivalent
    nonnegative problem min_{z>=0} z'Qz/2 - sum(z) (then w = z/sum(z)),
    using a Lawson-Hanson-style active set.  Zeroed assets are exactly zero
    and the active assets share one marginal-risk multiplier up to linear
    solver precision.
    """
    q = shrunk.values
    p = q.shape[0]
    if p == 1:
        return PortfolioWeights(shrunk.tickers, np.ones(1))

    z = np.zeros(p)
    passive = np.zeros(p, dtype=bool)
    grad = np.ones(p)  # 1 - Q z
    max_outer = 3 * p + 100
    for _ in range(max_outer):
        candidates = np.flatnonzero(~passive & (grad > dual_tol))
        if candidates.size == 0:
            break
        j = candidates[np.argmax(grad[candidates])]
        passive[j] = True
        for _ in range(p + 1):
            idx = np.flatnonzero(passive)
            trial = np.linalg.solve(q[np.ix_(idx, idx)], np.ones(idx.size))
            if trial.min() > 0:
                z[:] = 0.0
                z[idx] = trial
                break
            held = np.flatnonzero(trial <= 0)
            steps = z[idx[held]] / (z[idx[held]] - trial[held])
            step = steps.min()
            moved = z[idx] + step * (trial - z[idx])
            moved[moved < 0] = 0.0
            moved[held[steps <= step]] = 0.0  # blocking indices land exactly on zero
            z[idx] = moved
            release = idx[moved == 0.0]
            passive[release] = False
            if not passive.any():
                raise SolverError(
                    "active set emptied; covariance may be ill-conditioned",
                    best_weights=None,
                    residual=float("inf"),
                )
        grad = 1.0 - q @ z
    else:
        w = z / z.sum() if z.sum() > 0 else z
        raise SolverError(
            "iteration budget exhausted",
            best_weights=w,
            residual=float(grad.max()),
        )
    total = z.sum()
    if total <= 0:
        raise SolverError("solver returned the zero vector", residual=float("inf"))
    w = z / total
    w[w < 0] = 0.0
    return PortfolioWeights(shrunk.tickers, w / w.sum())


def kkt_residual(shrunk: ShrunkCovariance, weights: PortfolioWeights) -> float:
    """Max violation of the stationarity/complementarity conditions.

    Active assets must share the multiplier lambda = w'Qw; inactive assets
    must have marginal risk at least lambda.
    """
    w = weights.weights
    marginal = shrunk.values @ w
    lam = float(w @ marginal)
    active = w > 0
    res = 0.0
    if active.any():
        res = float(np.abs(marginal[active] - lam).max())
    inactive = ~active
    if inactive.any():
        res = max(res, float(np.maximum(lam - marginal[inactive], 0.0).max()))
    return res


def sharpe_out_of_sample(
    weights: PortfolioWeights, next_window: ReturnPanel
) -> float:
    """Annualized Sharpe ratio of the held portfolio on the following window."""
    if weights.tickers != next_window.tickers:
        raise DataError("weights and panel tickers differ")
    q = next_window.returns @ weights.weights
    sd = q.std(ddof=1)
    if sd == 0:
        raise DataError("portfolio returns have zero standard deviation")
    return float(q.mean() / sd * math.sqrt(TRADING_DAYS))


def turnover(now: PortfolioWeights, prev: PortfolioWeights) -> float:
    """L1 distance between consecutive weight vectors."""
    if now.tickers != prev.tickers:
        raise DataError("weights are over different tickers")
    return float(np.abs(now.weights - prev.weights).sum())
