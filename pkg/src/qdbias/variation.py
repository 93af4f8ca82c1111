"""Cluster-conditional agreement variation and bias-prone query flags.

For every (query, cluster, judge) cell with enough pairs, the judge's
chance-corrected agreement with the human labels (AC1) is computed over
just that cell.  The spread of a judge's cell scores within one query,
delta = max - min, drives three flags per (query, judge):

* A (absolute): delta >= tau_abs.
* R (relative): delta >= median + iqr_multiplier * IQR, where the median
  and IQR pool that judge's deltas across all queries
  (linear-interpolation quantiles).
* D (extreme disagreement): the judge is near-perfect in one cluster and
  near-chance in another, max > extreme_high and min < extreme_low, with at
  least two cells.

Bias severity score per (query, judge): bss = delta + 1 if D else delta.
A query is bias-prone when at least min_judges_flagged judges raise any
flag on it; queries rank by mean bss over judges, descending.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .agreement import PairedLabels, gwet_ac1, observed_agreement
from .corpus import JudgmentMatrix

__all__ = [
    "AgreementCell",
    "BiasReport",
    "HeuristicConfig",
    "QuerySummary",
    "VariationRecord",
    "analyze_variation",
    "delta_ac1",
    "flag_variation",
    "per_cell_ac1",
    "rank_queries",
]

_MISSING_POLICIES = ("zero", "skip")


@dataclass(frozen=True)
class HeuristicConfig:
    min_cell_size: int = 3
    tau_abs: float = 0.5
    iqr_multiplier: float = 1.5
    extreme_high: float = 0.8
    extreme_low: float = 0.2
    min_judges_flagged: int = 2
    include_noise_cells: bool = False
    missing_bss_policy: str = "zero"

    def __post_init__(self):
        if self.min_cell_size < 2:
            raise ValueError(f"min_cell_size must be >= 2, got {self.min_cell_size}")
        if self.missing_bss_policy not in _MISSING_POLICIES:
            raise ValueError(
                f"missing_bss_policy must be one of {_MISSING_POLICIES}, got {self.missing_bss_policy!r}"
            )


@dataclass(frozen=True)
class AgreementCell:
    query_id: str
    cluster_id: int
    judge_id: str
    n: int
    ac1: float
    pa: float


@dataclass(frozen=True)
class VariationRecord:
    query_id: str
    judge_id: str
    n_cells: int
    min_ac1: float
    max_ac1: float
    delta: float
    flag_abs: bool = False
    flag_rel: bool = False
    flag_extreme: bool = False
    bss: float = 0.0

    @property
    def flagged(self) -> bool:
        return self.flag_abs or self.flag_rel or self.flag_extreme

    @property
    def flags(self) -> str:
        parts = []
        if self.flag_abs:
            parts.append("A")
        if self.flag_rel:
            parts.append("R")
        if self.flag_extreme:
            parts.append("D")
        return ",".join(parts)


@dataclass(frozen=True)
class QuerySummary:
    query_id: str
    judges_flagged: int
    bias_prone: bool
    mean_bss: float


@dataclass(frozen=True)
class BiasReport:
    cells: tuple[AgreementCell, ...]
    records: tuple[VariationRecord, ...]
    queries: tuple[QuerySummary, ...]
    config: HeuristicConfig


def per_cell_ac1(
    matrix: JudgmentMatrix,
    cluster_labels: np.ndarray,
    config: HeuristicConfig | None = None,
) -> list[AgreementCell]:
    """AC1 per (query, cluster, judge) cell holding >= min_cell_size pairs.

    cluster_labels is aligned to matrix.pairs; label -1 marks noise and is
    skipped unless include_noise_cells is set.  Cells come back sorted by
    (query_id, cluster_id, judge_id).
    """
    config = config or HeuristicConfig()
    labels = np.asarray(cluster_labels)
    if labels.shape != (matrix.n_pairs,):
        raise ValueError(f"cluster_labels has shape {labels.shape}, expected ({matrix.n_pairs},)")
    cells: list[AgreementCell] = []
    by_query = matrix.pair_indices_by_query()
    for query_id in sorted(by_query):
        q_idx = by_query[query_id]
        q_labels = labels[q_idx]
        present = sorted(int(c) for c in np.unique(q_labels))
        for cluster_id in present:
            if cluster_id == -1 and not config.include_noise_cells:
                continue
            idx = q_idx[q_labels == cluster_id]
            if idx.size < config.min_cell_size:
                continue
            human = matrix.human[idx]
            for judge_id in matrix.judge_ids:
                pairs = PairedLabels(human, matrix.judges[judge_id][idx])
                score = gwet_ac1(pairs)
                cells.append(
                    AgreementCell(
                        query_id=query_id,
                        cluster_id=cluster_id,
                        judge_id=judge_id,
                        n=int(idx.size),
                        ac1=float(score.value),
                        pa=observed_agreement(pairs),
                    )
                )
    return cells


def delta_ac1(cells: Iterable[AgreementCell]) -> list[VariationRecord]:
    """Collapse cells to per-(query, judge) spread records.

    A (query, judge) with a single qualifying cell yields delta 0; flags are
    left unset here (see flag_variation).
    """
    grouped: dict[tuple[str, str], list[float]] = {}
    for cell in cells:
        grouped.setdefault((cell.query_id, cell.judge_id), []).append(cell.ac1)
    records = []
    for (query_id, judge_id), values in sorted(grouped.items()):
        lo, hi = min(values), max(values)
        records.append(
            VariationRecord(
                query_id=query_id,
                judge_id=judge_id,
                n_cells=len(values),
                min_ac1=lo,
                max_ac1=hi,
                delta=hi - lo,
            )
        )
    return records


def flag_variation(
    records: Sequence[VariationRecord], config: HeuristicConfig | None = None
) -> list[VariationRecord]:
    """Apply the A / R / D flags and fill in bss.

    The R threshold pools each judge's deltas over all of its records, so a
    judge must stand out against its own typical spread.
    """
    config = config or HeuristicConfig()
    thresholds: dict[str, float] = {}
    by_judge: dict[str, list[float]] = {}
    for rec in records:
        by_judge.setdefault(rec.judge_id, []).append(rec.delta)
    for judge_id, deltas in by_judge.items():
        arr = np.asarray(deltas)
        q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
        thresholds[judge_id] = float(med + config.iqr_multiplier * (q3 - q1))
    out = []
    for rec in records:
        flag_abs = rec.delta >= config.tau_abs
        flag_rel = rec.delta >= thresholds[rec.judge_id]
        flag_extreme = (
            rec.n_cells >= 2
            and rec.max_ac1 > config.extreme_high
            and rec.min_ac1 < config.extreme_low
        )
        bss = rec.delta + (1.0 if flag_extreme else 0.0)
        out.append(
            replace(rec, flag_abs=flag_abs, flag_rel=flag_rel, flag_extreme=flag_extreme, bss=bss)
        )
    return out


def rank_queries(
    records: Sequence[VariationRecord],
    judge_ids: Sequence[str],
    query_ids: Sequence[str],
    config: HeuristicConfig | None = None,
) -> list[QuerySummary]:
    """Per-query flag counts and mean bss, ranked by mean bss descending.

    Under the "zero" policy a judge with no record for a query contributes
    bss 0 and the mean divides by the full judge count; under "skip" the
    mean runs over present records only and recordless queries are omitted.
    """
    config = config or HeuristicConfig()
    by_query: dict[str, list[VariationRecord]] = {q: [] for q in query_ids}
    for rec in records:
        by_query.setdefault(rec.query_id, []).append(rec)
    summaries = []
    for query_id in sorted(by_query):
        recs = by_query[query_id]
        if not recs and config.missing_bss_policy == "skip":
            continue
        judges_flagged = sum(1 for r in recs if r.flagged)
        if config.missing_bss_policy == "zero":
            mean_bss = sum(r.bss for r in recs) / len(judge_ids) if judge_ids else 0.0
        else:
            mean_bss = sum(r.bss for r in recs) / len(recs) if recs else 0.0
        summaries.append(
            QuerySummary(
                query_id=query_id,
                judges_flagged=judges_flagged,
                bias_prone=judges_flagged >= config.min_judges_flagged,
                mean_bss=mean_bss,
            )
        )
    summaries.sort(key=lambda s: (-s.mean_bss, s.query_id))
    return summaries


def analyze_variation(
    matrix: JudgmentMatrix,
    cluster_labels: np.ndarray,
    config: HeuristicConfig | None = None,
) -> BiasReport:
    """Full cell -> spread -> flag -> ranking run over one judgment matrix."""
    config = config or HeuristicConfig()
    cells = per_cell_ac1(matrix, cluster_labels, config)
    records = flag_variation(delta_ac1(cells), config)
    queries = rank_queries(records, matrix.judge_ids, matrix.query_ids(), config)
    return BiasReport(
        cells=tuple(cells),
        records=tuple(records),
        queries=tuple(queries),
        config=config,
    )
