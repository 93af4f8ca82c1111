"""Tabular report rendering with deterministic formatting.

Every table is built as an in-memory (columns, rows) pair and serialized
through one formatting function, so identical analysis results always
render to identical bytes.  Undefined statistics (e.g. kappa with
degenerate marginals) print as ``NA``; booleans print as 1/0.
"""

from __future__ import annotations

import json
import math
from typing import Mapping, Sequence

import numpy as np

from .agreement import (
    PairedLabels,
    cluster_purity,
    cohen_kappa,
    gwet_ac1,
    label_entropy,
    purity_at_coverage,
)
from .bland_altman import BaPoint, BaResult
from .clustering import ClusterResult
from .corpus import CorpusStats, JudgmentMatrix
from .variation import BiasReport

__all__ = [
    "Table",
    "ba_tables",
    "cluster_assignment_table",
    "cluster_diagnostics_table",
    "corpus_stats_table",
    "fig_cluster_metrics_table",
    "fig_delta_table",
    "fig_top_queries_table",
    "fmt",
    "purity_summary_table",
    "ranking_table",
    "render_tsv",
    "table_to_json",
    "variation_table",
]


class Table:
    """Ordered columns plus rows of plain Python values."""

    def __init__(self, name: str, columns: Sequence[str], rows: Sequence[Sequence[object]]):
        for i, row in enumerate(rows):
            if len(row) != len(columns):
                raise ValueError(f"table {name!r} row {i} has {len(row)} cells, expected {len(columns)}")
        self.name = name
        self.columns = list(columns)
        self.rows = [list(row) for row in rows]


def fmt(value: object) -> str:
    """One deterministic cell representation for every table."""
    if value is None:
        return "NA"
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "NA"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".10g")
    return str(value)


def render_tsv(table: Table) -> str:
    lines = ["\t".join(table.columns)]
    for row in table.rows:
        lines.append("\t".join(fmt(cell) for cell in row))
    return "\n".join(lines) + "\n"


def _plain(value: object) -> object:
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        return None if math.isnan(x) else x
    return value


def table_to_json(table: Table) -> str:
    payload = {
        "columns": table.columns,
        "rows": [[_plain(cell) for cell in row] for row in table.rows],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def corpus_stats_table(stats: CorpusStats) -> Table:
    return Table(
        "corpus_stats",
        ["n_queries", "n_documents", "n_judgments", "pct_relevant", "pct_nonrelevant"],
        [[stats.n_queries, stats.n_documents, stats.n_judgments, stats.pct_relevant, stats.pct_nonrelevant]],
    )


def cluster_assignment_table(matrix: JudgmentMatrix, result: ClusterResult) -> Table:
    rows = [
        [qid, did, int(result.labels[i]), float(result.strengths[i])]
        for i, (qid, did) in enumerate(matrix.pairs)
    ]
    return Table("cluster_assignments", ["query_id", "doc_id", "cluster_id", "stability"], rows)


def _cluster_ids_with_noise_last(labels: np.ndarray) -> list[int]:
    ids = sorted(int(c) for c in np.unique(labels) if c >= 0)
    if np.any(labels == -1):
        ids.append(-1)
    return ids


def cluster_diagnostics_table(matrix: JudgmentMatrix, result: ClusterResult) -> tuple[Table, int]:
    """Per-cluster label balance and per-judge agreement; noise row last.

    Also returns the count of undefined kappa cells, for warning totals.
    """
    judge_ids = matrix.judge_ids
    columns = ["cluster_id", "size", "p_relevant", "entropy", "purity", "majority"]
    for judge_id in judge_ids:
        columns.append(f"ac1_{judge_id}")
        columns.append(f"kappa_{judge_id}")
    rows = []
    undefined_kappa = 0
    for cluster_id in _cluster_ids_with_noise_last(result.labels):
        idx = np.flatnonzero(result.labels == cluster_id)
        diag = cluster_purity(matrix.human[idx])
        row: list[object] = [cluster_id, diag.n, diag.p_relevant, diag.entropy, diag.purity, diag.majority]
        for judge_id in judge_ids:
            pairs = PairedLabels(matrix.human[idx], matrix.judges[judge_id][idx])
            row.append(gwet_ac1(pairs).value)
            kappa = cohen_kappa(pairs).value
            if kappa is None:
                undefined_kappa += 1
            row.append(kappa)
        rows.append(row)
    return Table("cluster_diagnostics", columns, rows), undefined_kappa


def purity_summary_table(matrix: JudgmentMatrix, result: ClusterResult, coverage: float) -> Table:
    """Purity-at-coverage over non-noise clusters, split by majority label."""
    groups: dict[str, list[float]] = {}
    for cluster_id in sorted(int(c) for c in np.unique(result.labels) if c >= 0):
        idx = np.flatnonzero(result.labels == cluster_id)
        diag = cluster_purity(matrix.human[idx])
        groups.setdefault(diag.majority, []).append(diag.purity)
    rows = []
    for majority in sorted(groups):
        purities = groups[majority]
        rows.append(
            [
                majority,
                len(purities),
                float(np.mean(purities)),
                purity_at_coverage(purities, coverage),
                coverage,
            ]
        )
    return Table(
        "purity_summary",
        ["majority", "n_clusters", "mean_purity", "purity_at_coverage", "coverage"],
        rows,
    )


def variation_table(report: BiasReport) -> Table:
    rows = [
        [r.query_id, r.judge_id, r.n_cells, r.min_ac1, r.max_ac1, r.delta, r.flags, r.bss]
        for r in report.records
    ]
    return Table(
        "variation",
        ["query_id", "judge_id", "n_cells", "min_ac1", "max_ac1", "delta", "flags", "bss"],
        rows,
    )


def ranking_table(report: BiasReport) -> Table:
    rows = [
        [rank, s.query_id, s.judges_flagged, s.bias_prone, s.mean_bss]
        for rank, s in enumerate(report.queries, start=1)
    ]
    return Table("ranking", ["rank", "query_id", "judges_flagged", "bias_prone", "mean_bss"], rows)


def ba_tables(
    named_points: Mapping[str, Sequence[BaPoint]],
    named_results: Mapping[str, BaResult | None],
) -> tuple[Table, Table]:
    point_rows = []
    for measure in sorted(named_points):
        for p in named_points[measure]:
            key = list(p.key) + [""] * (2 - len(p.key))
            point_rows.append([measure, key[0], key[1], p.a, p.b, p.mean, p.diff, p.n])
    points = Table(
        "ba_points",
        ["measure", "key1", "key2", "a", "b", "mean", "diff", "n"],
        point_rows,
    )
    summary_rows = []
    for measure in sorted(named_results):
        r = named_results[measure]
        if r is None:
            summary_rows.append([measure, 0, None, None, None, None])
        else:
            summary_rows.append([measure, r.n, r.bias, r.sd, r.loa_low, r.loa_high])
    summary = Table(
        "ba_summary",
        ["measure", "n_points", "bias", "sd", "loa_low", "loa_high"],
        summary_rows,
    )
    return points, summary


def fig_cluster_metrics_table(matrix: JudgmentMatrix, result: ClusterResult, judge_id: str) -> Table:
    """Per-cluster kappa/AC1/entropy scatter data for one judge; no noise row."""
    rows = []
    for cluster_id in sorted(int(c) for c in np.unique(result.labels) if c >= 0):
        idx = np.flatnonzero(result.labels == cluster_id)
        pairs = PairedLabels(matrix.human[idx], matrix.judges[judge_id][idx])
        rows.append(
            [
                cluster_id,
                cohen_kappa(pairs).value,
                gwet_ac1(pairs).value,
                label_entropy(matrix.human[idx]),
                int(idx.size),
            ]
        )
    return Table(f"fig_cluster_metrics_{judge_id}", ["cluster_id", "kappa", "ac1", "entropy", "size"], rows)


def fig_delta_table(report: BiasReport) -> Table:
    rows = [[r.query_id, r.judge_id, r.delta] for r in report.records]
    return Table("fig_delta", ["query_id", "judge_id", "delta"], rows)


def fig_top_queries_table(report: BiasReport, limit: int = 10) -> Table:
    rows = [
        [rank, s.query_id, s.judges_flagged, s.mean_bss]
        for rank, s in enumerate(report.queries[:limit], start=1)
    ]
    return Table("fig_top_queries", ["rank", "query_id", "judges_flagged", "mean_bss"], rows)
