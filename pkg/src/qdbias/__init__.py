"""Cluster-level agreement and bias diagnostics for LLM relevance judgments.

qdbias aligns human and LLM relevance labels over (query, document) pairs,
clusters joint query-document embeddings with HDBSCAN, and localizes
systematic disagreement per semantic neighborhood: chance-corrected agreement
(Gwet's AC1, Cohen's kappa), cluster-based agreement variation, heuristic
bias flags with a severity ranking, and Bland-Altman bias summaries.
"""

__version__ = "0.1.0"

from qdbias.agreement import (
    AgreementScore,
    ClusterLabelDiagnostics,
    PairedLabels,
    cluster_purity,
    cohen_kappa,
    gwet_ac1,
    label_entropy,
    observed_agreement,
    purity_at_coverage,
)
from qdbias.corpus import (
    CorpusStats,
    GradedJudgment,
    JudgmentMatrix,
    align_judgments,
    binarize,
    corpus_stats,
    parse_qrels,
)
from qdbias.embeddings import EmbeddingSet, l2_normalize, parse_qdv_tsv, read_qdv, write_qdv
from qdbias.clustering import ClusterResult, HdbscanParams, cluster_points

__all__ = [
    "AgreementScore",
    "ClusterLabelDiagnostics",
    "ClusterResult",
    "CorpusStats",
    "EmbeddingSet",
    "GradedJudgment",
    "HdbscanParams",
    "JudgmentMatrix",
    "PairedLabels",
    "align_judgments",
    "binarize",
    "cluster_points",
    "cluster_purity",
    "cohen_kappa",
    "corpus_stats",
    "gwet_ac1",
    "l2_normalize",
    "label_entropy",
    "observed_agreement",
    "parse_qdv_tsv",
    "purity_at_coverage",
    "read_qdv",
    "write_qdv",
]
