from __future__ import annotations

import io

import numpy as np
import pytest

from rankmst.bootstrap import (
    BootstrapSpec,
    circular_bootstrap,
    replicate_indices,
    robustness_rows,
    robustness_table,
    sample_pairs,
    write_robustness_csv,
)
from rankmst.data import ReturnPanel
from rankmst.errors import DataError

from tests.synthetic import make_panel


def _source(seed: int = 0, n: int = 120, p: int = 4) -> ReturnPanel:
    rng = np.random.default_rng(seed)
    return make_panel(rng.standard_normal((n, p)) * 0.01)


def test_identity_block_reproduces_panel():
    rows = replicate_indices([0], block_length=120, output_length=120, source_length=120)
    assert np.array_equal(rows, np.arange(120))


def test_wraparound_indices():
    rows = replicate_indices([119], block_length=3, output_length=3, source_length=120)
    assert rows.tolist() == [119, 0, 1]


def test_blocks_concatenate_and_truncate():
    rows = replicate_indices([10, 50], block_length=7, output_length=10, source_length=120)
    assert rows.tolist() == [10, 11, 12, 13, 14, 15, 16, 50, 51, 52]


def test_same_seed_bit_identical():
    panel = _source()
    spec = BootstrapSpec(replicates=6, output_length=60, source_length=120, block_length=10, seed=99)
    a = circular_bootstrap(panel, spec)
    b = circular_bootstrap(panel, spec)
    for ra, rb in zip(a, b):
        assert np.array_equal(ra.returns, rb.returns)


def test_different_seeds_differ():
    panel = _source()
    a = circular_bootstrap(panel, BootstrapSpec(4, 60, 120, 10, seed=1))
    b = circular_bootstrap(panel, BootstrapSpec(4, 60, 120, 10, seed=2))
    assert not all(np.array_equal(x.returns, y.returns) for x, y in zip(a, b))


def test_replicates_share_row_indices_across_columns():
    panel = _source()
    spec = BootstrapSpec(replicates=3, output_length=50, source_length=120, block_length=10, seed=5)
    for rep in circular_bootstrap(panel, spec):
        # every replicate row must be an exact source row (cross-section intact)
        source_rows = {tuple(r) for r in panel.returns}
        assert all(tuple(r) in source_rows for r in rep.returns)


def test_row_selection_frequency_uniform_within_3se():
    panel = _source(n=50)
    replicates = 400
    spec = BootstrapSpec(replicates, output_length=50, source_length=50, block_length=5, seed=11)
    counts = np.zeros(50)
    for rep in circular_bootstrap(panel, spec):
        idx = replicate_indices_from_panel(rep, panel)
        for i in idx:
            counts[i] += 1
    draws = replicates * 50
    expected = draws / 50.0
    se = np.sqrt(draws * (1 / 50) * (1 - 1 / 50))
    assert np.max(np.abs(counts - expected)) <= 3.0 * se


def replicate_indices_from_panel(rep: ReturnPanel, source: ReturnPanel) -> list[int]:
    lookup = {tuple(r): i for i, r in enumerate(source.returns)}
    return [lookup[tuple(r)] for r in rep.returns]


def test_panel_length_must_match_source():
    panel = _source(n=100)
    with pytest.raises(DataError, match="source length"):
        circular_bootstrap(panel, BootstrapSpec(2, 60, 120, 10, seed=0))


def test_spec_validation():
    with pytest.raises(DataError):
        BootstrapSpec(replicates=1)
    with pytest.raises(DataError):
        BootstrapSpec(block_length=0)


# --- pair sampling -----------------------------------------------------------

def test_sample_pairs_all_when_within_budget():
    iu, ju = sample_pairs(5, 100, seed=0)
    assert iu.size == 10
    assert sorted(zip(iu.tolist(), ju.tolist())) == [
        (i, j) for i in range(5) for j in range(i + 1, 5)
    ]


def test_sample_pairs_budgeted_and_seeded():
    a = sample_pairs(60, 50, seed=3)
    b = sample_pairs(60, 50, seed=3)
    c = sample_pairs(60, 50, seed=4)
    assert a[0].size == 50
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert not (np.array_equal(a[0], c[0]) and np.array_equal(a[1], c[1]))
    pairs = set(zip(a[0].tolist(), a[1].tolist()))
    assert len(pairs) == 50  # distinct


def test_sample_pairs_budget_validation():
    with pytest.raises(DataError, match="budget"):
        sample_pairs(5, 0, seed=0)


# --- robustness table ---------------------------------------------------------

def test_identical_replicates_give_zero_rows():
    panel = _source(n=60)
    reps = [panel, panel, panel]
    rows = robustness_rows(reps, "pearson", pair_budget=10, seed=0)
    assert {r.layer for r in rows} == {"full", "mst_weighted", "mst_unweighted"}
    for row in rows:
        assert row.mean == 0.0
        assert row.sd == 0.0


def test_two_replicates_single_pair():
    reps = [_source(1, n=60), _source(2, n=60)]
    rows = robustness_rows(reps, "spearman", pair_budget=10_000, seed=0)
    for row in rows:
        assert row.sd == 0.0  # a single pair has no dispersion
        assert row.mean >= 0.0


def test_robustness_invariant_to_replicate_order_with_full_budget():
    reps = [_source(s, n=60) for s in range(5)]
    table = robustness_table(reps, ["pearson"], pair_budget=100, seed=0)
    table_rev = robustness_table(list(reversed(reps)), ["pearson"], pair_budget=100, seed=0)
    for a, b in zip(table.rows, table_rev.rows):
        assert a.layer == b.layer
        assert a.mean == pytest.approx(b.mean, abs=1e-15)
        assert a.sd == pytest.approx(b.sd, abs=1e-15)


def test_robustness_threads_do_not_change_results():
    reps = [_source(s, n=60) for s in range(6)]
    one = robustness_table(reps, ["pearson", "kendall_tau_b"], 50, seed=1, threads=1)
    four = robustness_table(reps, ["pearson", "kendall_tau_b"], 50, seed=1, threads=4)
    assert one == four


def test_robustness_needs_two_replicates():
    with pytest.raises(DataError, match="2 replicate"):
        robustness_rows([_source()], "pearson", 10, seed=0)


def test_robustness_csv_layout():
    reps = [_source(s, n=60) for s in range(3)]
    table = robustness_table(reps, ["pearson"], 10, seed=0)
    buf = io.StringIO()
    write_robustness_csv(table, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "method,layer,mean,sd"
    assert len(lines) == 4
    assert lines[1].startswith("pearson,mst_weighted,")
