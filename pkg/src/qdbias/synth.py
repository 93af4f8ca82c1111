"""Synthetic judgment corpora with planted cluster-conditional judge bias.

A scenario is a set of (query, cluster, point-count) cells.  Each point is a
judged query-document pair: its embedding is drawn from its cluster's
isotropic Gaussian, the human label is Bernoulli(human_relevant_rate), and
each judge flips the human label with cluster-conditional error rates
(alpha = P(judge 1 | human 0), beta = P(judge 0 | human 1)).  Noise points
are drawn uniformly in a box and carry every judge's default profile.

All randomness flows through seeded CounterRng substreams in a fixed order,
so a scenario regenerates bit-identically from (spec, seed):

* substream 1: cluster-point offsets (normals, point order)
* substream 2: human labels (one uniform per point)
* substream 3: human grade jitter (one uniform per point)
* substream 4: noise-point coordinates
* substream 10+j: judge j flips (one uniform per point)
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import GradedJudgment, write_qrels
from .embeddings import EmbeddingSet, write_qdv
from .rng import CounterRng

__all__ = [
    "JudgeSpec",
    "ScenarioCell",
    "ScenarioSpec",
    "SynthResult",
    "expected_ac1",
    "gaussian_blobs",
    "generate",
    "planted_bias_scenario",
    "write_corpus",
]


@dataclass(frozen=True)
class ScenarioCell:
    query_id: str
    cluster: int
    n_points: int


@dataclass(frozen=True)
class JudgeSpec:
    """Per-judge error profile: a default (alpha, beta) plus per-cluster overrides."""

    judge_id: str
    default_alpha: float
    default_beta: float
    overrides: tuple[tuple[int, float, float], ...] = ()

    def profile(self, cluster: int) -> tuple[float, float]:
        for c, alpha, beta in self.overrides:
            if c == cluster:
                return alpha, beta
        return self.default_alpha, self.default_beta


@dataclass(frozen=True)
class ScenarioSpec:
    dimension: int
    sigma: float
    separation: float
    human_relevant_rate: float
    cells: tuple[ScenarioCell, ...]
    judges: tuple[JudgeSpec, ...]
    noise_points: int = 0

    def __post_init__(self):
        n_clusters = self.n_clusters
        if n_clusters > self.dimension:
            raise ValueError(
                f"{n_clusters} clusters need dimension >= {n_clusters}, got {self.dimension}"
            )
        if not 0.0 <= self.human_relevant_rate <= 1.0:
            raise ValueError(f"human_relevant_rate must lie in [0, 1], got {self.human_relevant_rate}")

    @property
    def n_clusters(self) -> int:
        return 1 + max((cell.cluster for cell in self.cells), default=-1)

    def to_json(self) -> str:
        payload = {
            "dimension": self.dimension,
            "sigma": self.sigma,
            "separation": self.separation,
            "human_relevant_rate": self.human_relevant_rate,
            "cells": [[c.query_id, c.cluster, c.n_points] for c in self.cells],
            "judges": [
                {
                    "judge_id": j.judge_id,
                    "default_alpha": j.default_alpha,
                    "default_beta": j.default_beta,
                    "overrides": [list(o) for o in j.overrides],
                }
                for j in self.judges
            ],
            "noise_points": self.noise_points,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        payload = json.loads(text)
        return cls(
            dimension=payload["dimension"],
            sigma=payload["sigma"],
            separation=payload["separation"],
            human_relevant_rate=payload["human_relevant_rate"],
            cells=tuple(ScenarioCell(q, int(c), int(n)) for q, c, n in payload["cells"]),
            judges=tuple(
                JudgeSpec(
                    judge_id=j["judge_id"],
                    default_alpha=j["default_alpha"],
                    default_beta=j["default_beta"],
                    overrides=tuple((int(c), float(a), float(b)) for c, a, b in j["overrides"]),
                )
                for j in payload["judges"]
            ),
            noise_points=payload.get("noise_points", 0),
        )


@dataclass(frozen=True)
class SynthResult:
    spec: ScenarioSpec
    seed: int
    pairs: tuple[tuple[str, str], ...]
    human_grades: np.ndarray
    human_labels: np.ndarray
    judge_labels: dict[str, np.ndarray]
    embeddings: EmbeddingSet
    true_clusters: np.ndarray

    @property
    def n_points(self) -> int:
        return len(self.pairs)


def expected_ac1(p: float, alpha: float, beta: float) -> float:
    """Population AC1 between a Bernoulli(p) rater and its noisy copy.

    With alpha = P(b=1 | a=0) and beta = P(b=0 | a=1):
    Pa = p(1-beta) + (1-p)(1-alpha), p_b = p(1-beta) + (1-p)alpha,
    pi = (p + p_b)/2, Pe = 2 pi (1 - pi), AC1 = (Pa - Pe)/(1 - Pe).
    """
    pa = p * (1.0 - beta) + (1.0 - p) * (1.0 - alpha)
    p_b = p * (1.0 - beta) + (1.0 - p) * alpha
    pi = (p + p_b) / 2.0
    pe = 2.0 * pi * (1.0 - pi)
    return (pa - pe) / (1.0 - pe)


def gaussian_blobs(
    centers: np.ndarray, points_per_cluster: int, sigma: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Isotropic Gaussian clusters around the given centers.

    Returns (points, labels) with points_per_cluster rows per center, in
    center order; deterministic in the seed.
    """
    centers = np.asarray(centers, dtype=np.float64)
    k, dim = centers.shape
    rng = CounterRng(seed, stream_id=1)
    offsets = rng.normals(k * points_per_cluster * dim).reshape(k * points_per_cluster, dim)
    labels = np.repeat(np.arange(k), points_per_cluster)
    points = centers[labels] + sigma * offsets
    return points, labels


def _axis_centers(n_clusters: int, dimension: int, separation: float) -> np.ndarray:
    centers = np.zeros((n_clusters, dimension))
    for c in range(n_clusters):
        centers[c, c] = separation
    return centers


def generate(spec: ScenarioSpec, seed: int) -> SynthResult:
    """Materialize a scenario under the documented substream schedule."""
    centers = _axis_centers(spec.n_clusters, spec.dimension, spec.separation)
    base = CounterRng(seed)

    pairs: list[tuple[str, str]] = []
    clusters: list[int] = []
    doc_counter = 0
    for cell in sorted(spec.cells, key=lambda c: c.query_id):
        for _ in range(cell.n_points):
            pairs.append((cell.query_id, f"d{doc_counter:06d}"))
            clusters.append(cell.cluster)
            doc_counter += 1
    query_ids = sorted({cell.query_id for cell in spec.cells})
    for i in range(spec.noise_points):
        pairs.append((query_ids[i % len(query_ids)], f"d{doc_counter:06d}"))
        clusters.append(-1)
        doc_counter += 1

    n = len(pairs)
    n_clustered = n - spec.noise_points
    true_clusters = np.asarray(clusters, dtype=np.int64)

    points = np.empty((n, spec.dimension))
    offsets = base.substream(1).normals(n_clustered * spec.dimension)
    points[:n_clustered] = (
        centers[true_clusters[:n_clustered]]
        + spec.sigma * offsets.reshape(n_clustered, spec.dimension)
    )
    if spec.noise_points:
        coords = base.substream(4).uniforms(spec.noise_points * spec.dimension)
        box = coords.reshape(spec.noise_points, spec.dimension) * 2.0 - 1.0
        points[n_clustered:] = box * spec.separation

    human_labels = base.substream(2).bernoulli(spec.human_relevant_rate, n)
    jitter = base.substream(3).bernoulli(0.5, n)
    human_grades = np.where(human_labels == 1, 2 + jitter, jitter).astype(np.int64)

    judge_labels: dict[str, np.ndarray] = {}
    for j, judge in enumerate(spec.judges):
        flips = base.substream(10 + j).uniforms(n)
        labels = np.empty(n, dtype=np.int8)
        for i in range(n):
            alpha, beta = judge.profile(int(true_clusters[i]))
            p_flip = beta if human_labels[i] == 1 else alpha
            labels[i] = human_labels[i] ^ (flips[i] < p_flip)
        judge_labels[judge.judge_id] = labels

    order = sorted(range(n), key=lambda i: pairs[i])
    pairs_sorted = tuple(pairs[i] for i in order)
    idx = np.asarray(order)
    embeddings = EmbeddingSet.from_records(
        spec.dimension,
        [(q, d, points[i].astype(np.float32)) for (q, d), i in zip(pairs_sorted, idx)],
    )
    return SynthResult(
        spec=spec,
        seed=seed,
        pairs=pairs_sorted,
        human_grades=human_grades[idx],
        human_labels=human_labels[idx],
        judge_labels={k: v[idx] for k, v in judge_labels.items()},
        embeddings=embeddings,
        true_clusters=true_clusters[idx],
    )


def planted_bias_scenario() -> ScenarioSpec:
    """Fixed scenario with one query whose judgments split by cluster.

    Query q00 spans clusters 0 and 1.  Judges judge0 and judge1 agree
    perfectly with the human in cluster 0 and answer at random in cluster 1,
    so their per-query agreement spread is extreme there; every other cell
    uses a mild symmetric error rate.  Queries q01..q19 each span two of
    clusters 2..7 round-robin.
    """
    cells = [
        ScenarioCell("q00", 0, 72),
        ScenarioCell("q00", 1, 72),
    ]
    for qi in range(1, 20):
        first = 2 + (2 * (qi - 1)) % 6
        second = 2 + (2 * (qi - 1) + 1) % 6
        cells.append(ScenarioCell(f"q{qi:02d}", first, 12))
        cells.append(ScenarioCell(f"q{qi:02d}", second, 12))
    biased = ((0, 0.0, 0.0), (1, 0.5, 0.5))
    judges = tuple(
        JudgeSpec(
            judge_id=f"judge{j}",
            default_alpha=0.05,
            default_beta=0.05,
            overrides=biased if j < 2 else (),
        )
        for j in range(4)
    )
    return ScenarioSpec(
        dimension=16,
        sigma=0.05,
        separation=1.0,
        human_relevant_rate=0.5,
        cells=tuple(cells),
        judges=judges,
        noise_points=40,
    )


def write_corpus(result: SynthResult, directory: Path | str) -> dict[str, Path]:
    """Write a result as pipeline inputs; returns paths keyed by role.

    ``human.qrels`` keeps the graded labels; each judge file maps its binary
    labels to grades {0, 2} so binarization recovers them exactly.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    human_path = directory / "human.qrels"
    with human_path.open("w", encoding="utf-8") as fh:
        write_qrels(
            [
                GradedJudgment(q, d, int(g))
                for (q, d), g in zip(result.pairs, result.human_grades)
            ],
            fh,
        )
    paths["human"] = human_path

    for judge_id, labels in result.judge_labels.items():
        judge_path = directory / f"{judge_id}.qrels"
        with judge_path.open("w", encoding="utf-8") as fh:
            write_qrels(
                [
                    GradedJudgment(q, d, 2 * int(v))
                    for (q, d), v in zip(result.pairs, labels)
                ],
                fh,
            )
        paths[judge_id] = judge_path

    emb_path = directory / "embeddings.qdv"
    with emb_path.open("wb") as fh:
        write_qdv(result.embeddings, fh)
    paths["embeddings"] = emb_path
    return paths
