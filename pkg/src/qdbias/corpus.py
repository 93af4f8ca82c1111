"""TREC qrels ingestion and human/LLM judgment alignment.

Parses the standard whitespace-separated qrels format
(``query_id 0 doc_id grade``), binarizes graded labels, and inner-joins all
raters into a single matrix keyed by (query_id, doc_id).  Pairs missing from
any rater are dropped and counted, never imputed: agreement statistics need
genuinely paired labels.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "AlignmentError",
    "CorpusStats",
    "GradedJudgment",
    "JudgmentMatrix",
    "ParsedQrels",
    "QrelsGradeError",
    "QrelsParseError",
    "align_judgments",
    "binarize",
    "corpus_stats",
    "matrix_to_tsv",
    "parse_qrels",
    "write_qrels",
]

GRADE_MIN = 0
GRADE_MAX = 3
DEFAULT_BINARIZE_THRESHOLD = 2


class QrelsParseError(ValueError):
    """A qrels line that does not match ``query_id 0 doc_id grade``."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class QrelsGradeError(ValueError):
    """A grade outside the supported [0, 3] range."""

    def __init__(self, grade: int, line_number: int | None = None):
        where = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{where}grade {grade} outside [{GRADE_MIN}, {GRADE_MAX}]")
        self.grade = grade
        self.line_number = line_number


class AlignmentError(ValueError):
    """Raters share no (query_id, doc_id) keys; nothing can be compared."""


@dataclass(frozen=True)
class GradedJudgment:
    """One qrels row: a graded relevance label for a (query, document) pair."""

    query_id: str
    doc_id: str
    grade: int

    def __post_init__(self) -> None:
        for name, token in (("query_id", self.query_id), ("doc_id", self.doc_id)):
            if not token or any(c.isspace() for c in token):
                raise ValueError(f"{name} must be a non-empty whitespace-free token, got {token!r}")
        if not GRADE_MIN <= self.grade <= GRADE_MAX:
            raise QrelsGradeError(self.grade)

    @property
    def key(self) -> tuple[str, str]:
        return (self.query_id, self.doc_id)


@dataclass(frozen=True)
class ParsedQrels:
    """Parse result: judgments in input order plus a duplicate-key counter."""

    judgments: list[GradedJudgment]
    duplicate_keys: int = 0


def parse_qrels(stream: IO[str] | str | Iterable[str]) -> ParsedQrels:
    """Parse qrels lines into graded judgments.

    Each non-empty line must carry at least four whitespace-separated fields:
    ``query_id``, an ignored iteration field, ``doc_id``, and an integer
    grade in [0, 3].  Duplicate (query_id, doc_id) keys keep the grade of the
    last occurrence (at the first occurrence's position) and increment
    ``duplicate_keys``.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    judgments: list[GradedJudgment] = []
    index: dict[tuple[str, str], int] = {}
    duplicates = 0
    for line_number, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) < 4:
            raise QrelsParseError(line_number, f"expected >= 4 fields, got {len(fields)}: {line!r}")
        query_id, _, doc_id, grade_text = fields[:4]
        try:
            grade = int(grade_text)
        except ValueError:
            raise QrelsParseError(line_number, f"grade field {grade_text!r} is not an integer") from None
        if not GRADE_MIN <= grade <= GRADE_MAX:
            raise QrelsGradeError(grade, line_number)
        judgment = GradedJudgment(query_id=query_id, doc_id=doc_id, grade=grade)
        slot = index.get(judgment.key)
        if slot is None:
            index[judgment.key] = len(judgments)
            judgments.append(judgment)
        else:
            judgments[slot] = judgment
            duplicates += 1
    return ParsedQrels(judgments=judgments, duplicate_keys=duplicates)


def write_qrels(judgments: Sequence[GradedJudgment], stream: IO[str]) -> None:
    """Serialize judgments back to qrels lines (inverse of parse_qrels)."""
    for j in judgments:
        stream.write(f"{j.query_id} 0 {j.doc_id} {j.grade}\n")


def binarize(grade: int, threshold: int = DEFAULT_BINARIZE_THRESHOLD) -> int:
    """Map a graded label to binary relevance: 1 iff grade >= threshold."""
    if not GRADE_MIN <= grade <= GRADE_MAX:
        raise QrelsGradeError(grade)
    return 1 if grade >= threshold else 0


@dataclass(frozen=True)
class JudgmentMatrix:
    """Aligned binary labels over (query_id, doc_id) pairs for all raters.

    ``pairs`` is sorted by (query_id, doc_id); ``human`` and each judge
    vector hold one 0/1 label per pair.  ``dropped_count`` counts keys
    present in some rater but absent from at least one other.
    """

    pairs: tuple[tuple[str, str], ...]
    human: np.ndarray
    judges: dict[str, np.ndarray]
    dropped_count: int = 0

    def __post_init__(self) -> None:
        n = len(self.pairs)
        if len(set(self.pairs)) != n:
            raise ValueError("duplicate (query_id, doc_id) keys in matrix")
        vectors = {"human": self.human, **self.judges}
        for name, vec in vectors.items():
            if vec.shape != (n,):
                raise ValueError(f"label vector {name!r} has shape {vec.shape}, expected ({n},)")
            if not np.isin(vec, (0, 1)).all():
                raise ValueError(f"label vector {name!r} contains non-binary labels")

    @property
    def n_pairs(self) -> int:
        return len(self.pairs)

    @property
    def judge_ids(self) -> list[str]:
        return list(self.judges)

    def query_ids(self) -> list[str]:
        """Distinct query ids in pair order."""
        seen: dict[str, None] = {}
        for qid, _ in self.pairs:
            seen.setdefault(qid)
        return list(seen)

    def pair_indices_by_query(self) -> dict[str, np.ndarray]:
        out: dict[str, list[int]] = {}
        for i, (qid, _) in enumerate(self.pairs):
            out.setdefault(qid, []).append(i)
        return {qid: np.asarray(idx, dtype=np.intp) for qid, idx in out.items()}


def align_judgments(
    human: Sequence[GradedJudgment],
    judges: Mapping[str, Sequence[GradedJudgment]],
    threshold: int = DEFAULT_BINARIZE_THRESHOLD,
) -> JudgmentMatrix:
    """Inner-join human and judge qrels on (query_id, doc_id) and binarize.

    Pair order is sorted by (query_id, doc_id) for determinism.  Keys missing
    from any rater are excluded and counted in ``dropped_count``.  Raises
    AlignmentError when the intersection is empty.
    """
    if not judges:
        raise ValueError("at least one judge is required")
    rater_maps: dict[str, dict[tuple[str, str], int]] = {
        "human": {j.key: j.grade for j in human},
    }
    for name, records in judges.items():
        if name == "human":
            raise ValueError("judge name 'human' is reserved")
        rater_maps[name] = {j.key: j.grade for j in records}

    key_sets = [set(m) for m in rater_maps.values()]
    shared = set.intersection(*key_sets)
    if not shared:
        counts = ", ".join(f"{name}: {len(m)} keys" for name, m in rater_maps.items())
        raise AlignmentError(f"no (query_id, doc_id) keys shared by all raters ({counts})")
    dropped = len(set.union(*key_sets)) - len(shared)

    pairs = tuple(sorted(shared))
    human_vec = np.array([binarize(rater_maps["human"][k], threshold) for k in pairs], dtype=np.int8)
    judge_vecs = {
        name: np.array([binarize(rater_maps[name][k], threshold) for k in pairs], dtype=np.int8)
        for name in judges
    }
    return JudgmentMatrix(pairs=pairs, human=human_vec, judges=judge_vecs, dropped_count=dropped)


@dataclass(frozen=True)
class CorpusStats:
    """Corpus-level counts over the aligned matrix's human labels."""

    n_queries: int
    n_documents: int
    n_judgments: int
    pct_relevant: float
    pct_nonrelevant: float


def corpus_stats(matrix: JudgmentMatrix) -> CorpusStats:
    """Query/document/judgment counts and human label rates, to 1 decimal."""
    if matrix.n_pairs == 0:
        raise ValueError("matrix is empty")
    queries = {qid for qid, _ in matrix.pairs}
    documents = {did for _, did in matrix.pairs}
    n = matrix.n_pairs
    relevant = int(np.sum(matrix.human))
    return CorpusStats(
        n_queries=len(queries),
        n_documents=len(documents),
        n_judgments=n,
        pct_relevant=round(100.0 * relevant / n, 1),
        pct_nonrelevant=round(100.0 * (n - relevant) / n, 1),
    )


def matrix_to_tsv(matrix: JudgmentMatrix, stream: IO[str]) -> None:
    """Write the aligned matrix as TSV: query_id, doc_id, human, judges..."""
    names = matrix.judge_ids
    stream.write("\t".join(["query_id", "doc_id", "human", *names]) + "\n")
    for i, (qid, did) in enumerate(matrix.pairs):
        row = [qid, did, str(int(matrix.human[i]))]
        row.extend(str(int(matrix.judges[name][i])) for name in names)
        stream.write("\t".join(row) + "\n")
