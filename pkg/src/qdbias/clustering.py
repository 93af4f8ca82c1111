"""Density-based clustering of embedding vectors with noise.

Hierarchical density clustering over mutual-reachability distances:

1. core distance of a point = distance to its min_samples-th nearest
   *other* point;
2. mutual reachability d_mr(a, b) = max(core_a, core_b, d(a, b));
3. exact minimum spanning tree of the complete mutual-reachability graph
   (Prim, one distance row at a time, so memory stays O(n));
4. single-linkage dendrogram from the sorted MST edges;
5. condensed tree keeping only components of at least min_cluster_size
   points, with lambda = 1 / distance;
6. cluster stability = sum over departures of (lambda_leave - lambda_birth)
   * size, and excess-of-mass selection: an internal cluster is kept only if
   its stability strictly exceeds the summed stability of its selected
   descendants.  The root is never selectable, so data forming one
   undifferentiated blob yields zero clusters and no point is forced into a
   cluster.

Everything is deterministic: ties in Prim resolve to the lowest candidate
index, MST edges are reported sorted by (weight, low index, high index), and
output cluster ids are assigned by decreasing member count (ties to the
cluster holding the lowest point index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .embeddings import DegenerateVectorError

__all__ = [
    "ClusterResult",
    "HdbscanParams",
    "build_mst",
    "cluster_points",
    "core_distances",
    "mutual_reachability",
]

_METRICS = ("euclidean", "euclidean_on_normalized")


@dataclass(frozen=True)
class HdbscanParams:
    min_cluster_size: int = 15
    min_samples: int = 5
    metric: str = "euclidean"

    def __post_init__(self):
        if self.min_cluster_size < 2:
            raise ValueError(f"min_cluster_size must be >= 2, got {self.min_cluster_size}")
        if self.min_samples < 1:
            raise ValueError(f"min_samples must be >= 1, got {self.min_samples}")
        if self.metric not in _METRICS:
            raise ValueError(f"metric must be one of {_METRICS}, got {self.metric!r}")


@dataclass(frozen=True)
class ClusterResult:
    """Flat clustering: labels[i] is the cluster of point i, -1 for noise.

    strengths[i] is the point's relative persistence inside its cluster
    (1 at the density peak, 0 for noise).  cluster_sizes / stabilities are
    indexed by output cluster id.
    """

    labels: np.ndarray
    strengths: np.ndarray
    n_clusters: int
    cluster_sizes: tuple[int, ...]
    stabilities: tuple[float, ...]
    mst_edges: np.ndarray
    params: HdbscanParams

    @property
    def noise_count(self) -> int:
        return int(np.sum(self.labels == -1))


def _prepare(points: np.ndarray, metric: str) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"points must be a 2-d array, got shape {x.shape}")
    if metric == "euclidean_on_normalized":
        norms = np.linalg.norm(x, axis=1)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise DegenerateVectorError(f"zero vector at row {zero[0]} cannot be normalized")
        x = x / norms[:, None]
    return x


def core_distances(points: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance from each point to its min_samples-th nearest other point."""
    x = np.asarray(points, dtype=np.float64)
    n = len(x)
    if min_samples < 1:
        raise ValueError(f"min_samples must be >= 1, got {min_samples}")
    if n <= min_samples:
        raise ValueError(f"need more than min_samples={min_samples} points, got {n}")
    core = np.empty(n)
    chunk = max(1, 2_000_000 // max(n, 1))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        rows = cdist(x[start:stop], x)
        rows[np.arange(stop - start), np.arange(start, stop)] = np.inf
        core[start:stop] = np.partition(rows, min_samples - 1, axis=1)[:, min_samples - 1]
    return core


def mutual_reachability(points: np.ndarray, core: np.ndarray) -> np.ndarray:
    """Full mutual-reachability matrix; the diagonal equals the core distances.

    Materializes an (n, n) array, so this is for small inputs and cross
    checks; build_mst never calls it.
    """
    x = np.asarray(points, dtype=np.float64)
    d = cdist(x, x)
    return np.maximum(d, np.maximum(core[:, None], core[None, :]))


def build_mst(points: np.ndarray, core: np.ndarray) -> np.ndarray:
    """Exact MST over mutual-reachability distances, one row at a time.

    Returns an (n-1, 3) array of (i, j, weight) with i < j, sorted by
    (weight, i, j).
    """
    x = np.asarray(points, dtype=np.float64)
    n = len(x)
    if n < 2:
        return np.empty((0, 3))
    in_tree = np.zeros(n, dtype=bool)
    best_w = np.full(n, np.inf)
    best_from = np.full(n, -1, dtype=np.int64)
    edges = np.empty((n - 1, 3))
    current = 0
    in_tree[0] = True
    for step in range(n - 1):
        d = cdist(x[current : current + 1], x)[0]
        reach = np.maximum(d, np.maximum(core, core[current]))
        better = ~in_tree & (reach < best_w)
        best_w[better] = reach[better]
        best_from[better] = current
        candidates = np.where(in_tree, np.inf, best_w)
        nxt = int(np.argmin(candidates))
        edges[step] = (best_from[nxt], nxt, best_w[nxt])
        in_tree[nxt] = True
        current = nxt
    low = np.minimum(edges[:, 0], edges[:, 1])
    high = np.maximum(edges[:, 0], edges[:, 1])
    order = np.lexsort((high, low, edges[:, 2]))
    return np.column_stack([low, high, edges[:, 2]])[order]


def _single_linkage(mst_edges: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Merge nodes bottom-up; node ids 0..n-1 are points, n..2n-2 merges."""
    parent = np.arange(2 * n - 1, dtype=np.int64)

    def find(node: int) -> int:
        root = node
        while parent[root] != root:
            root = parent[root]
        while parent[node] != root:
            parent[node], node = root, parent[node]
        return root

    size = np.ones(2 * n - 1, dtype=np.int64)
    left = np.empty(n - 1, dtype=np.int64)
    right = np.empty(n - 1, dtype=np.int64)
    dist = np.empty(n - 1)
    for step in range(n - 1):
        i, j, w = mst_edges[step]
        a, b = find(int(i)), find(int(j))
        node = n + step
        left[step], right[step], dist[step] = a, b, w
        size[node] = size[a] + size[b]
        parent[a] = parent[b] = node
    return left, right, dist, size


def _leaves_under(node: int, left: np.ndarray, right: np.ndarray, n: int) -> list[int]:
    out: list[int] = []
    stack = [node]
    while stack:
        cur = stack.pop()
        if cur < n:
            out.append(cur)
        else:
            stack.append(int(left[cur - n]))
            stack.append(int(right[cur - n]))
    return out


def _condense(
    left: np.ndarray,
    right: np.ndarray,
    dist: np.ndarray,
    size: np.ndarray,
    n: int,
    min_cluster_size: int,
) -> list[tuple[int, int, float, int]]:
    """Rows (parent_cluster, child, lambda, child_size); child < n is a point."""
    root = 2 * n - 2
    rows: list[tuple[int, int, float, int]] = []
    relabel = {root: n}
    next_cluster = n + 1
    stack = [root]
    while stack:
        node = stack.pop()
        cluster = relabel[node]
        d = dist[node - n]
        lam = np.inf if d <= 0.0 else 1.0 / d
        a, b = int(left[node - n]), int(right[node - n])
        big_a = size[a] >= min_cluster_size
        big_b = size[b] >= min_cluster_size
        if big_a and big_b:
            for child in (a, b):
                rows.append((cluster, next_cluster, lam, int(size[child])))
                relabel[child] = next_cluster
                next_cluster += 1
                stack.append(child)
        elif big_a or big_b:
            keep, drop = (a, b) if big_a else (b, a)
            relabel[keep] = cluster
            stack.append(keep)
            for point in _leaves_under(drop, left, right, n):
                rows.append((cluster, point, lam, 1))
        else:
            for point in _leaves_under(a, left, right, n):
                rows.append((cluster, point, lam, 1))
            for point in _leaves_under(b, left, right, n):
                rows.append((cluster, point, lam, 1))
    return rows


def _stabilities(rows: list[tuple[int, int, float, int]], n: int) -> dict[int, float]:
    births = {n: 0.0}
    for _, child, lam, _ in rows:
        if child >= n:
            births[child] = lam
    stability = {c: 0.0 for c in births}
    for parent, _, lam, child_size in rows:
        if np.isinf(lam) and np.isinf(births[parent]):
            continue
        stability[parent] += (lam - births[parent]) * child_size
    return stability


def _select_eom(rows: list[tuple[int, int, float, int]], stability: dict[int, float], n: int) -> set[int]:
    children: dict[int, list[int]] = {c: [] for c in stability}
    for parent, child, _, _ in rows:
        if child >= n:
            children[parent].append(child)
    selected = {c: False for c in stability}
    subtree = {}
    for c in sorted(stability, reverse=True):
        kids = children[c]
        if not kids:
            selected[c] = c != n
            subtree[c] = stability[c]
        else:
            child_sum = sum(subtree[k] for k in kids)
            if c != n and stability[c] > child_sum:
                selected[c] = True
                subtree[c] = stability[c]
                stack = list(kids)
                while stack:
                    k = stack.pop()
                    selected[k] = False
                    stack.extend(children[k])
            else:
                subtree[c] = child_sum
    return {c for c, keep in selected.items() if keep}


def cluster_points(points: np.ndarray, params: HdbscanParams | None = None) -> ClusterResult:
    """Cluster raw vectors.  Inputs too small to define core distances
    (n <= min_samples) come back as all noise."""
    params = params or HdbscanParams()
    x = _prepare(points, params.metric)
    n = len(x)
    if n <= params.min_samples:
        return ClusterResult(
            labels=np.full(n, -1, dtype=np.int64),
            strengths=np.zeros(n),
            n_clusters=0,
            cluster_sizes=(),
            stabilities=(),
            mst_edges=np.empty((0, 3)),
            params=params,
        )
    core = core_distances(x, params.min_samples)
    mst = build_mst(x, core)
    left, right, dist, size = _single_linkage(mst, n)
    rows = _condense(left, right, dist, size, n, params.min_cluster_size)
    stability = _stabilities(rows, n)
    chosen = _select_eom(rows, stability, n)

    cluster_parent = {child: parent for parent, child, _, _ in rows if child >= n}
    point_home: dict[int, tuple[int, float]] = {}
    for parent, child, lam, _ in rows:
        if child < n:
            point_home[child] = (parent, lam)

    labels = np.full(n, -1, dtype=np.int64)
    lambdas = np.zeros(n)
    for point in range(n):
        home, lam = point_home[point]
        c = home
        while c is not None and c not in chosen:
            c = cluster_parent.get(c)
        if c is not None:
            labels[point] = c
            lambdas[point] = lam

    members: dict[int, list[int]] = {}
    for point in range(n):
        if labels[point] != -1:
            members.setdefault(int(labels[point]), []).append(point)
    ranked = sorted(members, key=lambda c: (-len(members[c]), members[c][0]))
    output_id = {c: i for i, c in enumerate(ranked)}

    strengths = np.zeros(n)
    final = np.full(n, -1, dtype=np.int64)
    for c, pts in members.items():
        lam_vals = lambdas[pts]
        finite = lam_vals[np.isfinite(lam_vals)]
        lam_max = float(np.max(finite)) if finite.size else np.inf
        for p in pts:
            final[p] = output_id[c]
            if np.isinf(lambdas[p]):
                strengths[p] = 1.0
            elif np.isinf(lam_max) or lam_max <= 0.0:
                strengths[p] = 0.0
            else:
                strengths[p] = min(1.0, lambdas[p] / lam_max)

    return ClusterResult(
        labels=final,
        strengths=strengths,
        n_clusters=len(ranked),
        cluster_sizes=tuple(len(members[c]) for c in ranked),
        stabilities=tuple(float(stability[c]) for c in ranked),
        mst_edges=mst,
        params=params,
    )
