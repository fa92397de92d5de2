from __future__ import annotations

import math

import numpy as np
import pytest

from rankmst.correlation import CorrelationMatrix
from rankmst.errors import DataError
from rankmst.portfolio import (
    CovarianceMatrix,
    ShrunkCovariance,
    covariance_from_correlation,
    kkt_residual,
    min_variance_weights,
    sharpe_out_of_sample,
    shrink,
    turnover,
)

from tests.oracles import min_variance_pgd
from tests.synthetic import make_panel, random_correlation_values, random_spd


def _tickers(p: int) -> tuple[str, ...]:
    return tuple(f"T{j:02d}" for j in range(p))


def _corr(values: np.ndarray) -> CorrelationMatrix:
    return CorrelationMatrix("pearson", _tickers(values.shape[0]), values)


def _shrunk(values: np.ndarray, alpha: float = 1.0) -> ShrunkCovariance:
    return ShrunkCovariance(_tickers(values.shape[0]), values, alpha)


# --- covariance assembly -------------------------------------------------------

def test_covariance_identity_correlation():
    variances = np.array([1.0, 4.0, 9.0])
    cov = covariance_from_correlation(_corr(np.eye(3)), variances)
    assert np.array_equal(cov.values, np.diag(variances))


def test_covariance_unit_variances():
    values = random_correlation_values(np.random.default_rng(0), 4)
    cov = covariance_from_correlation(_corr(values), np.ones(4))
    assert np.array_equal(cov.values, values)


def test_covariance_matches_elementwise_oracle():
    rng = np.random.default_rng(1)
    values = random_correlation_values(rng, 3)
    variances = rng.uniform(0.5, 2.0, 3)
    cov = covariance_from_correlation(_corr(values), variances).values
    vol = np.sqrt(variances)
    for i in range(3):
        for j in range(3):
            assert cov[i, j] == pytest.approx(vol[i] * vol[j] * values[i, j], abs=1e-14)


def test_covariance_negative_variance_errors():
    with pytest.raises(DataError, match="negative"):
        covariance_from_correlation(_corr(np.eye(2)), np.array([1.0, -0.1]))


# --- shrinkage -------------------------------------------------------------------

def test_shrink_alpha_one_is_identity_map():
    values = random_spd(np.random.default_rng(2), 5)
    cov = CovarianceMatrix(_tickers(5), values)
    assert np.array_equal(shrink(cov, 1.0).values, 0.5 * (values + values.T))


def test_shrink_identity_fixed_point():
    cov = CovarianceMatrix(_tickers(4), np.eye(4))
    for alpha in (0.3, 0.9):
        assert np.allclose(shrink(cov, alpha).values, np.eye(4), atol=1e-15)


def test_shrink_rank_deficient_floor():
    # rank-1 PSD matrix with trace p: smallest eigenvalue rises to (1-a) tr/p
    p = 4
    v = np.ones(p)
    values = np.outer(v, v) * (p / p**2) * p  # trace = p
    cov = CovarianceMatrix(_tickers(p), values)
    shrunk = shrink(cov, 0.9)
    assert np.linalg.eigvalsh(shrunk.values)[0] >= 0.1 - 1e-12


def test_shrink_eigenvalue_floor_psd_inputs():
    rng = np.random.default_rng(3)
    for _ in range(25):
        p = int(rng.integers(2, 12))
        a = rng.standard_normal((p, max(1, p // 2)))
        values = a @ a.T  # PSD, often rank deficient
        values += 1e-12 * np.eye(p)
        cov = CovarianceMatrix(_tickers(p), values)
        alpha = float(rng.uniform(0.5, 0.99))
        floor = (1 - alpha) * np.trace(values) / p
        assert np.linalg.eigvalsh(shrink(cov, alpha).values)[0] >= floor - 1e-12


def test_shrink_trace_identity_switch():
    values = random_spd(np.random.default_rng(4), 3)
    cov = CovarianceMatrix(_tickers(3), values)
    scaled = shrink(cov, 0.9, "scaled_identity").values
    literal = shrink(cov, 0.9, "trace_identity").values
    tr = np.trace(values)
    assert np.allclose(literal - scaled, 0.1 * (tr - tr / 3) * np.eye(3), atol=1e-12)


def test_shrink_rejects_bad_inputs():
    cov = CovarianceMatrix(_tickers(2), -np.eye(2))
    with pytest.raises(DataError, match="trace"):
        shrink(cov, 0.9)
    good = CovarianceMatrix(_tickers(2), np.eye(2))
    with pytest.raises(DataError, match="alpha"):
        shrink(good, 0.0)
    with pytest.raises(DataError, match="target"):
        shrink(good, 0.9, "bogus")


def test_shrink_detects_indefinite_result():
    values = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.999], [0.0, 0.999, 1.0]])
    values[0, 0] = 0.001  # trace small, strong negative eigenvalue survives
    values[1, 2] = values[2, 1] = -1.8
    cov = CovarianceMatrix(_tickers(3), values)
    with pytest.raises(DataError, match="positive definite"):
        shrink(cov, 0.99)


# --- the QP ----------------------------------------------------------------------

def test_weights_equal_for_scaled_identity():
    for p in (2, 5, 9):
        w = min_variance_weights(_shrunk(3.7 * np.eye(p)))
        assert np.allclose(w.weights, np.full(p, 1.0 / p), atol=1e-12)


def test_weights_two_uncorrelated_assets_closed_form():
    w = min_variance_weights(_shrunk(np.diag([1.0, 3.0])))
    assert w.weights == pytest.approx([0.75, 0.25], abs=1e-12)


def test_weights_diagonal_closed_form():
    rng = np.random.default_rng(5)
    variances = rng.uniform(0.2, 3.0, 7)
    w = min_variance_weights(_shrunk(np.diag(variances)))
    want = (1.0 / variances) / (1.0 / variances).sum()
    assert np.max(np.abs(w.weights - want)) < 1e-8


def test_weights_match_projected_gradient_objective():
    rng = np.random.default_rng(6)
    for _ in range(5):
        q = random_spd(rng, 6)
        shrunk = _shrunk(q)
        w = min_variance_weights(shrunk).weights
        ref = min_variance_pgd(q)
        mine = float(w @ q @ w)
        theirs = float(ref @ q @ ref)
        assert mine <= theirs + 1e-8
        assert abs(mine - theirs) < 1e-8


def test_weights_scale_invariance():
    q = random_spd(np.random.default_rng(7), 8)
    w1 = min_variance_weights(_shrunk(q)).weights
    w2 = min_variance_weights(_shrunk(10.0 * q)).weights
    assert np.max(np.abs(w1 - w2)) < 1e-8


def test_kkt_residual_small_on_random_instances():
    rng = np.random.default_rng(8)
    for _ in range(20):
        p = int(rng.integers(2, 30))
        q = random_spd(rng, p)
        shrunk = _shrunk(q)
        w = min_variance_weights(shrunk)
        assert kkt_residual(shrunk, w) <= 1e-8
        assert w.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert w.weights.min() >= 0.0


def test_optimal_beats_equal_weight():
    rng = np.random.default_rng(9)
    for _ in range(10):
        q = random_spd(rng, 6)
        w = min_variance_weights(_shrunk(q)).weights
        equal = np.full(6, 1.0 / 6.0)
        assert w @ q @ w <= equal @ q @ equal + 1e-12


# --- evaluation ------------------------------------------------------------------

def _weights(values: list[float]):
    from rankmst.portfolio import PortfolioWeights

    return PortfolioWeights(_tickers(len(values)), np.asarray(values))


def test_sharpe_zero_mean():
    panel = make_panel(np.array([[0.01], [-0.01], [0.01], [-0.01]]), _tickers(1))
    w = _weights([1.0])
    assert sharpe_out_of_sample(w, panel) == pytest.approx(0.0, abs=1e-12)


def test_sharpe_constant_portfolio_errors():
    panel = make_panel(np.full((5, 1), 0.004), _tickers(1))
    with pytest.raises(DataError, match="zero standard deviation"):
        sharpe_out_of_sample(_weights([1.0]), panel)


def test_sharpe_hand_computed():
    rets = np.array([[0.01, 0.01], [0.02, 0.0], [0.03, 0.02]])
    panel = make_panel(rets, _tickers(2))
    w = _weights([0.5, 0.5])
    q = rets @ np.array([0.5, 0.5])
    want = q.mean() / q.std(ddof=1) * math.sqrt(252.0)
    assert sharpe_out_of_sample(w, panel) == pytest.approx(want, abs=1e-12)


def test_turnover_cases():
    a = _weights([0.5, 0.5])
    assert turnover(a, a) == 0.0
    assert turnover(_weights([1.0, 0.0]), _weights([0.0, 1.0])) == pytest.approx(2.0)
    assert turnover(_weights([0.6, 0.4]), _weights([0.5, 0.5])) == pytest.approx(
        0.2, abs=1e-15
    )


def test_portfolio_weights_invariants():
    from rankmst.portfolio import PortfolioWeights

    with pytest.raises(DataError, match="negative"):
        PortfolioWeights(_tickers(2), np.array([1.1, -0.1]))
    with pytest.raises(DataError, match="sum"):
        PortfolioWeights(_tickers(2), np.array([0.3, 0.3]))
