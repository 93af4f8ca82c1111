"""Deterministic cell formatting and table rendering."""

import json
import math

import numpy as np
import pytest

from qdbias.clustering import HdbscanParams, cluster_points
from qdbias.corpus import JudgmentMatrix
from qdbias.reports import (
    Table,
    cluster_diagnostics_table,
    corpus_stats_table,
    fig_cluster_metrics_table,
    fmt,
    purity_summary_table,
    render_tsv,
    table_to_json,
)
from qdbias.corpus import corpus_stats
from qdbias.synth import gaussian_blobs


def test_fmt_covers_the_cell_types():
    assert fmt(None) == "NA"
    assert fmt(True) == "1" and fmt(False) == "0"
    assert fmt(np.bool_(True)) == "1"
    assert fmt(7) == "7" and fmt(np.int64(-3)) == "-3"
    assert fmt(27.0) == "27"
    assert fmt(0.5) == "0.5"
    assert fmt(1 / 3) == "0.3333333333"
    assert fmt(float("nan")) == "NA"
    assert fmt(float("inf")) == "inf" and fmt(float("-inf")) == "-inf"
    assert fmt("majority") == "majority"


def test_render_tsv_layout_and_na():
    table = Table("t", ["x", "y"], [[1, None], [0.25, "z"]])
    assert render_tsv(table) == "x\ty\n1\tNA\n0.25\tz\n"


def test_table_width_validation():
    with pytest.raises(ValueError):
        Table("t", ["x", "y"], [[1]])


def test_table_to_json_plain_types():
    table = Table("t", ["x", "y"], [[np.int32(2), np.float64(0.5)], [True, None]])
    payload = json.loads(table_to_json(table))
    assert payload["columns"] == ["x", "y"]
    assert payload["rows"] == [[2, 0.5], [True, None]]


def clustered_fixture():
    points, truth = gaussian_blobs(np.eye(4) * 2.0, 30, 0.05, seed=5)
    pairs = tuple(("q1" if i % 2 == 0 else "q2", f"d{i:03d}") for i in range(len(points)))
    human = (truth % 2).astype(np.int8)
    judge = human.copy()
    judge[::7] ^= 1
    matrix = JudgmentMatrix(pairs=pairs, human=human, judges={"j": judge})
    result = cluster_points(points, HdbscanParams(min_cluster_size=10, min_samples=3))
    return matrix, result


def test_cluster_diagnostics_rows_and_noise_last():
    matrix, result = clustered_fixture()
    table, undefined = cluster_diagnostics_table(matrix, result)
    assert table.columns[:6] == ["cluster_id", "size", "p_relevant", "entropy", "purity", "majority"]
    assert "ac1_j" in table.columns and "kappa_j" in table.columns
    ids = [row[0] for row in table.rows]
    non_noise = [i for i in ids if i >= 0]
    assert non_noise == sorted(non_noise)
    if -1 in ids:
        assert ids[-1] == -1
    sizes = {row[0]: row[1] for row in table.rows}
    for cid, size in sizes.items():
        assert size == int(np.sum(result.labels == cid))
    # constant-label clusters make kappa undefined, counted not dropped
    assert undefined >= 0


def test_purity_summary_groups_by_majority():
    matrix, result = clustered_fixture()
    table = purity_summary_table(matrix, result, coverage=0.8)
    assert table.columns == ["majority", "n_clusters", "mean_purity", "purity_at_coverage", "coverage"]
    majorities = [row[0] for row in table.rows]
    assert majorities == sorted(majorities)
    assert sum(row[1] for row in table.rows) == result.n_clusters


def test_fig_cluster_metrics_excludes_noise():
    matrix, result = clustered_fixture()
    table = fig_cluster_metrics_table(matrix, result, "j")
    assert table.columns == ["cluster_id", "kappa", "ac1", "entropy", "size"]
    assert all(row[0] >= 0 for row in table.rows)
    assert len(table.rows) == result.n_clusters
    for row in table.rows:
        assert row[2] is not None and not math.isnan(row[2])


def test_corpus_stats_table_single_row():
    matrix, _ = clustered_fixture()
    table = corpus_stats_table(corpus_stats(matrix))
    assert len(table.rows) == 1
    assert table.rows[0][0] == 2  # two queries
