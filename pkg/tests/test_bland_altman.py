"""Bland-Altman statistics and the two matrix-level pairings."""

import numpy as np
import pytest

from qdbias.bland_altman import (
    BaPoint,
    ba_condition_contrast,
    ba_label_rates,
    ba_stats,
    partition_by_noise,
    pooled_ac1,
)
from qdbias.corpus import JudgmentMatrix
from qdbias.variation import AgreementCell, HeuristicConfig


def test_ba_stats_hand_worked():
    a = [1.0, 2.0, 3.0, 4.0]
    b = [0.5, 2.5, 2.0, 3.0]
    # diffs: 0.5, -0.5, 1.0, 1.0 -> mean 0.5, sample sd sqrt(0.5)
    result = ba_stats(a, b)
    assert result.bias == pytest.approx(0.5)
    assert result.sd == pytest.approx(np.sqrt(0.5))
    assert result.loa_low == pytest.approx(0.5 - 1.96 * np.sqrt(0.5))
    assert result.loa_high == pytest.approx(0.5 + 1.96 * np.sqrt(0.5))
    assert result.n == 4


def test_ba_stats_requires_two_points_and_same_shape():
    with pytest.raises(ValueError):
        ba_stats([1.0], [2.0])
    with pytest.raises(ValueError):
        ba_stats([1.0, 2.0], [1.0])


def test_ba_point_mean_and_diff():
    p = BaPoint(key=("q", "dense"), a=0.8, b=0.6, n=10)
    assert p.mean == pytest.approx(0.7)
    assert p.diff == pytest.approx(0.2)


def test_partition_by_noise():
    labels = np.array([0, -1, 2, -1, 1])
    split = partition_by_noise(labels)
    assert split.dense.tolist() == [0, 2, 4]
    assert split.noise.tolist() == [1, 3]


def test_pooled_ac1_weights_by_cell_size():
    cells = [
        AgreementCell("q", 0, "j", 10, 1.0, 1.0),
        AgreementCell("q", 1, "j", 30, 0.5, 0.7),
    ]
    assert pooled_ac1(cells) == pytest.approx((10 * 1.0 + 30 * 0.5) / 40)
    assert pooled_ac1([]) is None


def build_matrix(pairs, human, judges):
    return JudgmentMatrix(
        pairs=tuple(pairs),
        human=np.array(human, dtype=np.int8),
        judges={j: np.array(v, dtype=np.int8) for j, v in judges.items()},
    )


def rates_fixture():
    # qA: 3 dense pairs + 2 noise pairs; qB: 2 dense pairs + 1 noise pair
    pairs = [("qA", f"d{i}") for i in range(5)] + [("qB", f"d{i}") for i in range(3)]
    human = [1, 1, 0, 1, 0, 0, 1, 1]
    judge = [1, 0, 0, 0, 0, 1, 1, 0]
    labels = np.array([0, 0, 0, -1, -1, 1, 1, -1])
    return build_matrix(pairs, human, {"j": judge}), labels


def test_ba_label_rates_points_and_skip_rule():
    matrix, labels = rates_fixture()
    points, result = ba_label_rates(matrix, labels, "j", min_pairs=2)
    keyed = {p.key: p for p in points}
    # qB's single noise pair is below min_pairs and yields no point
    assert set(keyed) == {("qA", "dense"), ("qA", "noise"), ("qB", "dense")}
    assert keyed[("qA", "dense")].a == pytest.approx(2 / 3)
    assert keyed[("qA", "dense")].b == pytest.approx(1 / 3)
    assert keyed[("qA", "noise")].a == pytest.approx(0.5)
    assert keyed[("qA", "noise")].b == pytest.approx(0.0)
    assert keyed[("qB", "dense")].a == pytest.approx(0.5)
    assert result is not None
    diffs = [p.diff for p in points]
    assert result.bias == pytest.approx(float(np.mean(diffs)))
    assert result.n == 3


def test_ba_label_rates_unknown_judge_and_short_input():
    matrix, labels = rates_fixture()
    with pytest.raises(KeyError):
        ba_label_rates(matrix, labels, "nope")
    points, result = ba_label_rates(matrix, labels, "j", min_pairs=5)
    assert points == [] and result is None


def contrast_fixture():
    # Two queries, each with one dense cluster (4 pairs) and 3 noise pairs.
    pairs = [(q, f"d{i}") for q in ("qA", "qB") for i in range(7)]
    labels = np.array([0, 0, 0, 0, -1, -1, -1] * 2)
    human = [1, 1, 0, 0, 1, 0, 1] * 2
    judge = [1, 1, 0, 0, 0, 1, 0] + [1, 1, 0, 1, 1, 0, 1]
    return build_matrix(pairs, human, {"j": judge}), labels


def test_ba_condition_contrast_dense_vs_noise():
    matrix, labels = contrast_fixture()
    points, result = ba_condition_contrast(
        matrix, labels, HeuristicConfig(min_cell_size=3)
    )
    keyed = {p.key: p for p in points}
    assert set(keyed) == {("qA", "j"), ("qB", "j")}
    # qA: judge matches human on all 4 dense pairs, disagrees on all noise
    assert keyed[("qA", "j")].a == pytest.approx(1.0)
    assert keyed[("qA", "j")].b < 0.0
    assert keyed[("qA", "j")].n == 7
    assert result is not None and result.n == 2


def test_ba_condition_contrast_needs_noise_cells():
    matrix, labels = contrast_fixture()
    no_noise = np.where(labels == -1, 0, labels)
    points, result = ba_condition_contrast(matrix, no_noise, HeuristicConfig(min_cell_size=3))
    assert points == [] and result is None


def test_loa_covers_about_95_percent():
    rng = np.random.default_rng(7)
    diffs = rng.normal(0.1, 0.3, size=2000)
    a = diffs
    b = np.zeros_like(diffs)
    result = ba_stats(a, b)
    covered = np.mean((diffs >= result.loa_low) & (diffs <= result.loa_high))
    assert 0.92 <= covered <= 0.98
