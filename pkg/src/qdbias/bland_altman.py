"""Bland-Altman bias summaries between paired measurement series.

The core statistic set for paired series (a_i, b_i): bias = mean(a - b),
sd = sample standard deviation of the differences (ddof=1), and 95% limits
of agreement bias +/- 1.96 sd.  At least two points are required, since the
sample sd is undefined below that.

Two ready-made pairings over a clustered judgment matrix:

* ba_label_rates: per (query, condition) with condition in {dense, noise},
  a = human relevant rate, b = one judge's relevant rate;
* ba_condition_contrast: per (query, judge), a = size-weighted pooled AC1
  over the query's dense (non-noise) cells, b = AC1 over the query's noise
  pairs, so the differences expose agreement shifts between dense and
  sparse embedding regions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .corpus import JudgmentMatrix
from .variation import AgreementCell, HeuristicConfig, per_cell_ac1

__all__ = [
    "BaPoint",
    "BaResult",
    "ConditionPartition",
    "ba_condition_contrast",
    "ba_label_rates",
    "ba_stats",
    "partition_by_noise",
    "pooled_ac1",
]

NOISE_CONDITION = "noise"
DENSE_CONDITION = "dense"


@dataclass(frozen=True)
class ConditionPartition:
    dense: np.ndarray
    noise: np.ndarray


@dataclass(frozen=True)
class BaPoint:
    key: tuple[str, ...]
    a: float
    b: float
    n: int

    @property
    def mean(self) -> float:
        return (self.a + self.b) / 2.0

    @property
    def diff(self) -> float:
        return self.a - self.b


@dataclass(frozen=True)
class BaResult:
    bias: float
    sd: float
    loa_low: float
    loa_high: float
    n: int


def partition_by_noise(cluster_labels: np.ndarray) -> ConditionPartition:
    """Split point indices into dense (label >= 0) and noise (label -1)."""
    labels = np.asarray(cluster_labels)
    return ConditionPartition(
        dense=np.flatnonzero(labels >= 0),
        noise=np.flatnonzero(labels == -1),
    )


def ba_stats(a: Sequence[float], b: Sequence[float]) -> BaResult:
    """Bias, sd of differences, and 95% limits of agreement for a vs b."""
    a_arr = np.asarray(a, dtype=np.float64)
    b_arr = np.asarray(b, dtype=np.float64)
    if a_arr.shape != b_arr.shape or a_arr.ndim != 1:
        raise ValueError(f"a and b must be 1-d and the same length, got {a_arr.shape} and {b_arr.shape}")
    if a_arr.size < 2:
        raise ValueError(f"limits of agreement need at least 2 points, got {a_arr.size}")
    diffs = a_arr - b_arr
    bias = float(np.mean(diffs))
    sd = float(np.std(diffs, ddof=1))
    return BaResult(
        bias=bias,
        sd=sd,
        loa_low=bias - 1.96 * sd,
        loa_high=bias + 1.96 * sd,
        n=int(a_arr.size),
    )


def pooled_ac1(cells: Iterable[AgreementCell]) -> float | None:
    """Size-weighted mean AC1 over cells; None when there are no cells."""
    total = 0.0
    weight = 0
    for cell in cells:
        total += cell.n * cell.ac1
        weight += cell.n
    if weight == 0:
        return None
    return total / weight


def _stats_or_none(points: list[BaPoint]) -> BaResult | None:
    if len(points) < 2:
        return None
    return ba_stats([p.a for p in points], [p.b for p in points])


def ba_label_rates(
    matrix: JudgmentMatrix,
    cluster_labels: np.ndarray,
    judge_id: str,
    min_pairs: int = 2,
) -> tuple[list[BaPoint], BaResult | None]:
    """One point per (query, condition): human vs judge relevant-label rate.

    Subsets smaller than min_pairs are skipped; with fewer than two points
    overall the summary is None.
    """
    if judge_id not in matrix.judges:
        raise KeyError(f"unknown judge {judge_id!r}")
    labels = np.asarray(cluster_labels)
    if labels.shape != (matrix.n_pairs,):
        raise ValueError(f"cluster_labels has shape {labels.shape}, expected ({matrix.n_pairs},)")
    judge = matrix.judges[judge_id]
    points: list[BaPoint] = []
    by_query = matrix.pair_indices_by_query()
    for query_id in sorted(by_query):
        q_idx = by_query[query_id]
        q_noise = labels[q_idx] == -1
        for condition, idx in (
            (DENSE_CONDITION, q_idx[~q_noise]),
            (NOISE_CONDITION, q_idx[q_noise]),
        ):
            if idx.size < min_pairs:
                continue
            points.append(
                BaPoint(
                    key=(query_id, condition),
                    a=float(np.mean(matrix.human[idx])),
                    b=float(np.mean(judge[idx])),
                    n=int(idx.size),
                )
            )
    return points, _stats_or_none(points)


def ba_condition_contrast(
    matrix: JudgmentMatrix,
    cluster_labels: np.ndarray,
    config: HeuristicConfig | None = None,
) -> tuple[list[BaPoint], BaResult | None]:
    """One point per (query, judge): pooled dense AC1 vs noise-pair AC1.

    Queries missing either side (no qualifying dense cell, or fewer than
    min_cell_size noise pairs) contribute no point.
    """
    config = config or HeuristicConfig()
    cells = per_cell_ac1(matrix, cluster_labels, replace(config, include_noise_cells=True))
    grouped: dict[tuple[str, str], dict[str, list[AgreementCell]]] = {}
    for cell in cells:
        slot = grouped.setdefault((cell.query_id, cell.judge_id), {"dense": [], "noise": []})
        slot["noise" if cell.cluster_id == -1 else "dense"].append(cell)
    points: list[BaPoint] = []
    for (query_id, judge_id), slot in sorted(grouped.items()):
        dense = pooled_ac1(slot["dense"])
        if dense is None or not slot["noise"]:
            continue
        noise_cell = slot["noise"][0]
        n = sum(c.n for c in slot["dense"]) + noise_cell.n
        points.append(BaPoint(key=(query_id, judge_id), a=dense, b=noise_cell.ac1, n=n))
    return points, _stats_or_none(points)
