"""Chance-corrected two-rater agreement statistics and cluster label diagnostics.

Implements the binary two-rater case of Gwet's AC1 and Cohen's kappa:

    Pa  = fraction of items both raters label identically
    AC1 = (Pa - Pe) / (1 - Pe)   with Pe = 2*pi*(1 - pi), pi = (pA + pB) / 2
    kappa = (Pa - Pe) / (1 - Pe) with Pe = pA*pB + (1 - pA)*(1 - pB)

where pA, pB are the raters' positive-label rates.  For binary labels the AC1
chance term never exceeds 0.5, so AC1 is always defined; kappa degenerates to
an undefined value when both marginals are identical and extreme (Pe = 1).
Undefined kappa is represented as ``value=None`` and must be excluded from
aggregates, never coerced.

Also provides per-cluster label diagnostics (positive rate, binary entropy,
purity, majority label) and the purity-at-coverage order statistic used to
compare clusterings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

__all__ = [
    "AgreementScore",
    "ClusterLabelDiagnostics",
    "PairedLabels",
    "cluster_purity",
    "cohen_kappa",
    "gwet_ac1",
    "label_entropy",
    "observed_agreement",
    "purity_at_coverage",
]


def _as_binary_array(labels: Sequence[int] | np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D label sequence")
    if not np.issubdtype(arr.dtype, np.integer):
        if np.issubdtype(arr.dtype, np.bool_):
            arr = arr.astype(np.int64)
        else:
            as_int = arr.astype(np.int64, casting="unsafe")
            if not np.array_equal(as_int, arr):
                raise ValueError(f"{name} contains non-integer labels")
            arr = as_int
    if not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} contains labels outside {{0, 1}}")
    return arr.astype(np.int64)


@dataclass(frozen=True)
class PairedLabels:
    """Aligned binary label vectors from two raters (a = human, b = judge)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        a = _as_binary_array(self.a, "a")
        b = _as_binary_array(self.b, "b")
        if a.shape != b.shape:
            raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return int(self.a.size)


@dataclass(frozen=True)
class AgreementScore:
    """A chance-corrected agreement value with its components.

    ``value`` is ``None`` when the coefficient is undefined (kappa with
    degenerate identical marginals).  ``pa`` is the observed agreement,
    ``pe`` the chance term, ``n`` the number of paired items.
    """

    value: float | None
    pa: float
    pe: float
    n: int
    kind: Literal["AC1", "kappa"]

    @property
    def defined(self) -> bool:
        return self.value is not None


def observed_agreement(pairs: PairedLabels) -> float:
    """Fraction of positions where both raters assigned the same label."""
    return float(np.mean(pairs.a == pairs.b))


def gwet_ac1(pairs: PairedLabels) -> AgreementScore:
    """Gwet's AC1 for two raters on binary labels.

    Chance term Pe = 2*pi*(1 - pi) with pi the mean of the two raters'
    positive rates; Pe <= 0.5, so the coefficient is always defined.
    """
    pa = observed_agreement(pairs)
    p_a1 = float(np.mean(pairs.a))
    p_b1 = float(np.mean(pairs.b))
    pi = (p_a1 + p_b1) / 2.0
    pe = 2.0 * pi * (1.0 - pi)
    value = (pa - pe) / (1.0 - pe)
    return AgreementScore(value=value, pa=pa, pe=pe, n=pairs.n, kind="AC1")


def cohen_kappa(pairs: PairedLabels) -> AgreementScore:
    """Cohen's kappa for two raters on binary labels.

    Chance term Pe = pA*pB + (1 - pA)*(1 - pB).  When Pe = 1 (both raters
    constant with the same label) kappa is undefined and ``value`` is None.
    """
    pa = observed_agreement(pairs)
    p_a1 = float(np.mean(pairs.a))
    p_b1 = float(np.mean(pairs.b))
    pe = p_a1 * p_b1 + (1.0 - p_a1) * (1.0 - p_b1)
    if pe >= 1.0:
        return AgreementScore(value=None, pa=pa, pe=1.0, n=pairs.n, kind="kappa")
    value = (pa - pe) / (1.0 - pe)
    return AgreementScore(value=value, pa=pa, pe=pe, n=pairs.n, kind="kappa")


def label_entropy(labels: Sequence[int] | np.ndarray) -> float:
    """Binary Shannon entropy, in bits, of the positive-label fraction.

    H(p) = -p*log2(p) - (1-p)*log2(1-p), with 0*log2(0) taken as 0, so the
    result lies in [0, 1].
    """
    arr = _as_binary_array(labels, "labels")
    p = float(np.mean(arr))
    h = 0.0
    for q in (p, 1.0 - p):
        if q > 0.0:
            h -= q * math.log2(q)
    return h


@dataclass(frozen=True)
class ClusterLabelDiagnostics:
    """Label balance summary for one cluster's human labels."""

    p_relevant: float
    entropy: float
    purity: float
    majority: Literal["relevant", "nonrelevant", "tie"]
    n: int


def cluster_purity(labels: Sequence[int] | np.ndarray) -> ClusterLabelDiagnostics:
    """Majority-label purity and entropy of a cluster's binary labels."""
    arr = _as_binary_array(labels, "labels")
    p = float(np.mean(arr))
    purity = max(p, 1.0 - p)
    if p > 0.5:
        majority: Literal["relevant", "nonrelevant", "tie"] = "relevant"
    elif p < 0.5:
        majority = "nonrelevant"
    else:
        majority = "tie"
    return ClusterLabelDiagnostics(
        p_relevant=p,
        entropy=label_entropy(arr),
        purity=purity,
        majority=majority,
        n=int(arr.size),
    )


def purity_at_coverage(purities: Sequence[float], coverage: float = 0.8) -> float:
    """Purity level achieved by at least ``coverage`` of the clusters.

    Returns the largest observed purity v such that the fraction of purities
    >= v is at least ``coverage``: sort descending and take the order
    statistic at 1-based index ceil(coverage * n).
    """
    if len(purities) == 0:
        raise ValueError("purities must be non-empty")
    if not 0.0 < coverage <= 1.0:
        raise ValueError(f"coverage must lie in (0, 1], got {coverage}")
    ordered = sorted((float(p) for p in purities), reverse=True)
    k = math.ceil(coverage * len(ordered))
    return ordered[k - 1]
