"""Density clustering: MST cross-checks, recovery, determinism, edge cases."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdbias.clustering import (
    HdbscanParams,
    build_mst,
    cluster_points,
    core_distances,
    mutual_reachability,
)
from qdbias.embeddings import DegenerateVectorError
from qdbias.rng import CounterRng
from qdbias.synth import gaussian_blobs

from oracles import brute_mutual_reachability, kruskal_mst_weights


def test_core_distances_hand_case():
    points = np.array([[0.0], [1.0], [3.0]])
    assert core_distances(points, 1).tolist() == [1.0, 1.0, 2.0]
    assert core_distances(points, 2).tolist() == [3.0, 2.0, 3.0]
    with pytest.raises(ValueError):
        core_distances(points, 3)


def test_mutual_reachability_formula_and_diagonal():
    points = np.array([[0.0], [1.0], [3.0]])
    core = core_distances(points, 1)
    mr = mutual_reachability(points, core)
    assert np.array_equal(mr, mr.T)
    assert mr[0, 0] == core[0]
    # d(0,1)=1, cores are (1,1) -> reach 1; d(1,2)=2, cores (1,2) -> 2
    assert mr[0, 1] == 1.0
    assert mr[1, 2] == 2.0
    oracle_mr, oracle_core = brute_mutual_reachability(points, 1)
    assert np.array_equal(core, oracle_core)
    assert np.array_equal(mr, oracle_mr)


def test_mst_matches_kruskal_oracle_exactly():
    for seed in range(25):
        rng = CounterRng(seed)
        n = 4 + int(rng.integers(5, 1)[0])
        points = rng.normals(n * 3).reshape(n, 3)
        min_samples = 1 + int(rng.integers(min(3, n - 1), 1)[0])
        core = core_distances(points, min_samples)
        mst = build_mst(points, core)
        oracle_mr, _ = brute_mutual_reachability(points, min_samples)
        assert mst.shape == (n - 1, 3)
        assert np.array_equal(np.sort(mst[:, 2]), np.asarray(kruskal_mst_weights(oracle_mr)))


def test_mst_edge_ordering_contract():
    points = CounterRng(77).normals(12 * 2).reshape(12, 2)
    mst = build_mst(points, core_distances(points, 2))
    weights = mst[:, 2]
    assert np.all(np.diff(weights) >= 0)
    assert np.all(mst[:, 0] < mst[:, 1])
    # ties (if any) break by (low, high) index
    keys = list(zip(weights.tolist(), mst[:, 0].tolist(), mst[:, 1].tolist()))
    assert keys == sorted(keys)


def test_recovers_three_gaussians():
    centers = np.zeros((3, 8))
    for i in range(3):
        centers[i, i] = 1.0
    points, truth = gaussian_blobs(centers, 60, 0.05, seed=4)
    result = cluster_points(points, HdbscanParams(min_cluster_size=10, min_samples=5))
    assert result.n_clusters == 3
    # every recovered cluster is label-pure against the plant
    for cid in range(3):
        members = truth[result.labels == cid]
        assert members.size >= 50
        assert len(set(members.tolist())) == 1


def test_single_blob_yields_no_clusters():
    points, _ = gaussian_blobs(np.zeros((1, 4)), 150, 0.1, seed=6)
    result = cluster_points(points, HdbscanParams(min_cluster_size=10, min_samples=5))
    assert result.n_clusters == 0
    assert result.noise_count == 150


def test_uniform_box_is_mostly_noise():
    points = CounterRng(8).uniforms(150 * 8).reshape(150, 8)
    result = cluster_points(points, HdbscanParams(min_cluster_size=15, min_samples=5))
    assert result.noise_count >= 0.95 * 150


def test_deterministic_and_scale_invariant():
    points, _ = gaussian_blobs(np.eye(3), 40, 0.08, seed=10)
    params = HdbscanParams(min_cluster_size=8, min_samples=4)
    first = cluster_points(points, params)
    second = cluster_points(points, params)
    assert np.array_equal(first.labels, second.labels)
    assert np.array_equal(first.strengths, second.strengths)
    assert np.array_equal(first.mst_edges, second.mst_edges)
    # doubling every coordinate is exact in binary floating point
    scaled = cluster_points(2.0 * points, params)
    assert np.array_equal(first.labels, scaled.labels)
    assert np.array_equal(first.strengths, scaled.strengths)


def test_cluster_ids_ordered_by_size_then_first_member():
    big = gaussian_blobs(np.array([[0.0, 0.0]]), 40, 0.03, seed=1)[0]
    small = gaussian_blobs(np.array([[5.0, 5.0]]), 20, 0.03, seed=2)[0]
    # small blob's points come first in the array; the bigger blob must
    # still take cluster id 0
    points = np.vstack([small, big])
    result = cluster_points(points, HdbscanParams(min_cluster_size=10, min_samples=3))
    assert result.n_clusters == 2
    assert result.cluster_sizes[0] >= result.cluster_sizes[1]
    assert result.labels[-1] == 0
    assert result.labels[0] == 1


def test_strengths_bounds_and_noise_zero():
    points = np.vstack(
        [
            gaussian_blobs(np.array([[0.0, 0.0], [10.0, 0.0]]), 30, 0.05, seed=3)[0],
            np.array([[50.0, 50.0], [-40.0, 60.0], [70.0, -80.0]]),
        ]
    )
    result = cluster_points(points, HdbscanParams(min_cluster_size=10, min_samples=3))
    assert np.all(result.strengths >= 0.0) and np.all(result.strengths <= 1.0)
    assert np.all(result.strengths[result.labels == -1] == 0.0)
    assert result.strengths[result.labels >= 0].max() == 1.0


def test_tiny_inputs_are_all_noise():
    points = np.zeros((3, 2))
    result = cluster_points(points, HdbscanParams(min_cluster_size=2, min_samples=5))
    assert result.n_clusters == 0
    assert result.labels.tolist() == [-1, -1, -1]
    empty = cluster_points(np.zeros((0, 2)))
    assert empty.labels.size == 0


def test_normalized_metric_equals_euclidean_on_unit_vectors():
    raw = CounterRng(14).normals(80 * 5).reshape(80, 5)
    unit = raw / np.linalg.norm(raw, axis=1)[:, None]
    params_a = HdbscanParams(min_cluster_size=5, min_samples=3, metric="euclidean")
    params_b = HdbscanParams(min_cluster_size=5, min_samples=3, metric="euclidean_on_normalized")
    assert np.array_equal(cluster_points(unit, params_a).labels, cluster_points(unit, params_b).labels)
    with pytest.raises(DegenerateVectorError):
        cluster_points(np.zeros((10, 3)), params_b)


def test_param_validation():
    with pytest.raises(ValueError):
        HdbscanParams(min_cluster_size=1)
    with pytest.raises(ValueError):
        HdbscanParams(min_samples=0)
    with pytest.raises(ValueError):
        HdbscanParams(metric="cosine")
    with pytest.raises(ValueError):
        cluster_points(np.zeros(5))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(8, 24))
def test_flat_labeling_invariants(seed, n):
    points = CounterRng(seed, stream_id=3).normals(n * 3).reshape(n, 3)
    params = HdbscanParams(min_cluster_size=4, min_samples=2)
    result = cluster_points(points, params)
    labels = result.labels
    assert labels.shape == (n,)
    assert labels.min() >= -1
    k = result.n_clusters
    assert set(labels.tolist()) - {-1} == set(range(k))
    assert len(result.cluster_sizes) == k
    for cid in range(k):
        assert int(np.sum(labels == cid)) == result.cluster_sizes[cid]
        assert result.cluster_sizes[cid] >= params.min_cluster_size
    assert sorted(result.cluster_sizes, reverse=True) == list(result.cluster_sizes)
    assert result.mst_edges.shape == (n - 1, 3)
