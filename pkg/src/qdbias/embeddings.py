"""Storage for joint query-document embedding vectors.

One fixed-dimension float32 vector per (query_id, doc_id) pair, with two
interchangeable encodings:

* QDV1, a byte-exact little-endian binary format:
  header ``QDV1`` + dimension (u32) + record count (u64), then per record
  qid length (u16) + qid UTF-8 bytes + doc id length (u16) + doc id bytes +
  dimension * f32.  Records are written sorted by (query_id, doc_id) so a
  given set always serializes to identical bytes.
* A human-inspectable TSV fallback: ``query_id<TAB>doc_id<TAB>v1,v2,...``.

Vectors with NaN/Inf components are rejected at load time; zero vectors are
rejected by normalization, since they have no direction and poison
cosine-equivalent distances downstream.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

__all__ = [
    "EmbeddingSet",
    "QdvError",
    "QdvMagicError",
    "QdvTruncatedError",
    "QdvDuplicateKeyError",
    "QdvNonFiniteError",
    "DegenerateVectorError",
    "DimensionMismatchError",
    "l2_normalize",
    "missing_keys",
    "parse_qdv_tsv",
    "read_qdv",
    "write_qdv",
    "write_qdv_tsv",
]

_MAGIC = b"QDV1"
_HEADER = struct.Struct("<4sIQ")
_U16 = struct.Struct("<H")
_NORM_TOL = 1e-5


class QdvError(ValueError):
    """Base class for QDV1 stream errors."""


class QdvMagicError(QdvError):
    """Stream does not start with the QDV1 magic bytes."""


class QdvTruncatedError(QdvError):
    """Stream ended before the promised records were read."""


class QdvDuplicateKeyError(QdvError):
    """Two records share the same (query_id, doc_id) key."""


class QdvNonFiniteError(QdvError):
    """A vector carries a NaN or Inf component."""


class DegenerateVectorError(ValueError):
    """A zero vector cannot be normalized."""


class DimensionMismatchError(ValueError):
    """A TSV line's vector length disagrees with the set dimension."""

    def __init__(self, line_number: int, expected: int, got: int):
        super().__init__(f"line {line_number}: expected {expected} components, got {got}")
        self.line_number = line_number


Key = tuple[str, str]


@dataclass(frozen=True)
class EmbeddingSet:
    """Immutable keyed collection of float32 vectors of one dimension.

    Keys are held sorted by (query_id, doc_id); ``matrix`` row i is the
    vector for ``keys[i]``.  ``normalized`` is true when every vector's L2
    norm is within 1e-5 of 1.
    """

    dimension: int
    keys: tuple[Key, ...]
    matrix: np.ndarray
    normalized: bool

    @classmethod
    def from_records(cls, dimension: int, records: Iterable[tuple[str, str, np.ndarray]]) -> "EmbeddingSet":
        if dimension <= 0:
            raise ValueError(f"dimension must be positive, got {dimension}")
        by_key: dict[Key, np.ndarray] = {}
        for query_id, doc_id, vector in records:
            key = (query_id, doc_id)
            if key in by_key:
                raise QdvDuplicateKeyError(f"duplicate key {key}")
            vec = np.asarray(vector, dtype=np.float32)
            if vec.shape != (dimension,):
                raise ValueError(f"vector for {key} has shape {vec.shape}, expected ({dimension},)")
            if not np.isfinite(vec).all():
                raise QdvNonFiniteError(f"vector for {key} has NaN/Inf components")
            by_key[key] = vec
        keys = tuple(sorted(by_key))
        if keys:
            matrix = np.stack([by_key[k] for k in keys]).astype(np.float32)
            norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
            normalized = bool(np.max(np.abs(norms - 1.0), initial=0.0) <= _NORM_TOL)
        else:
            matrix = np.empty((0, dimension), dtype=np.float32)
            normalized = True
        return cls(dimension=dimension, keys=keys, matrix=matrix, normalized=normalized)

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: Key) -> bool:
        return key in self._index

    @property
    def _index(self) -> dict[Key, int]:
        cached = self.__dict__.get("_index_cache")
        if cached is None:
            cached = {key: i for i, key in enumerate(self.keys)}
            self.__dict__["_index_cache"] = cached
        return cached

    def vector(self, key: Key) -> np.ndarray:
        return self.matrix[self._index[key]]

    def vectors_for(self, pairs: Sequence[Key]) -> np.ndarray:
        """Rows for ``pairs`` in the given order; KeyError on any missing key."""
        index = self._index
        rows = np.empty(len(pairs), dtype=np.intp)
        for i, key in enumerate(pairs):
            if key not in index:
                raise KeyError(f"no embedding for pair {key}")
            rows[i] = index[key]
        return self.matrix[rows]


def missing_keys(embeddings: EmbeddingSet, pairs: Sequence[Key]) -> list[Key]:
    """Pairs with no embedding, in input order.  Callers must report these."""
    index = embeddings._index
    return [key for key in pairs if key not in index]


def read_qdv(stream: IO[bytes] | bytes) -> EmbeddingSet:
    """Load an EmbeddingSet from a QDV1 stream.

    Raises QdvMagicError, QdvTruncatedError, QdvDuplicateKeyError, or
    QdvNonFiniteError; trailing bytes after the last record raise QdvError.
    """
    data = stream if isinstance(stream, (bytes, bytearray)) else stream.read()
    if bytes(data[:4]) != _MAGIC:
        raise QdvMagicError(f"bad magic {bytes(data[:4])!r}, expected {_MAGIC!r}")
    if len(data) < _HEADER.size:
        raise QdvTruncatedError("stream shorter than the QDV1 header")
    _, dimension, count = _HEADER.unpack_from(data, 0)
    if dimension == 0:
        raise QdvError("header dimension is 0")
    offset = _HEADER.size
    vector_bytes = 4 * dimension

    def take_token(pos: int, record: int) -> tuple[str, int]:
        if pos + _U16.size > len(data):
            raise QdvTruncatedError(f"record {record}: stream ended inside a token length")
        (length,) = _U16.unpack_from(data, pos)
        pos += _U16.size
        if pos + length > len(data):
            raise QdvTruncatedError(f"record {record}: stream ended inside a token")
        return data[pos : pos + length].decode("utf-8"), pos + length

    records: list[tuple[str, str, np.ndarray]] = []
    for i in range(count):
        query_id, offset = take_token(offset, i)
        doc_id, offset = take_token(offset, i)
        if offset + vector_bytes > len(data):
            raise QdvTruncatedError(f"record {i}: stream ended inside the vector")
        vec = np.frombuffer(data, dtype="<f4", count=dimension, offset=offset).copy()
        offset += vector_bytes
        if not np.isfinite(vec).all():
            raise QdvNonFiniteError(f"vector for ({query_id}, {doc_id}) has NaN/Inf components")
        records.append((query_id, doc_id, vec))
    if offset != len(data):
        raise QdvError(f"{len(data) - offset} trailing bytes after the last record")
    return EmbeddingSet.from_records(dimension, records)


def write_qdv(embeddings: EmbeddingSet, stream: IO[bytes]) -> int:
    """Write the QDV1 encoding (records in key order); returns bytes written."""
    out = io.BytesIO()
    out.write(_HEADER.pack(_MAGIC, embeddings.dimension, len(embeddings.keys)))
    for i, (query_id, doc_id) in enumerate(embeddings.keys):
        for token in (query_id, doc_id):
            raw = token.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"id {token!r} exceeds 65535 UTF-8 bytes")
            out.write(_U16.pack(len(raw)))
            out.write(raw)
        out.write(embeddings.matrix[i].astype("<f4").tobytes())
    payload = out.getvalue()
    stream.write(payload)
    return len(payload)


def parse_qdv_tsv(stream: IO[str] | str) -> EmbeddingSet:
    """Parse the TSV fallback; dimension is fixed by the first line."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    records: list[tuple[str, str, np.ndarray]] = []
    dimension: int | None = None
    for line_number, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"line {line_number}: expected 3 tab-separated fields, got {len(parts)}")
        query_id, doc_id, values = parts
        vec = np.array([float(v) for v in values.split(",")], dtype=np.float32)
        if dimension is None:
            dimension = int(vec.size)
            if dimension == 0:
                raise ValueError(f"line {line_number}: empty vector")
        elif vec.size != dimension:
            raise DimensionMismatchError(line_number, dimension, int(vec.size))
        records.append((query_id, doc_id, vec))
    if dimension is None:
        raise ValueError("TSV stream holds no records; dimension cannot be inferred")
    return EmbeddingSet.from_records(dimension, records)


def write_qdv_tsv(embeddings: EmbeddingSet, stream: IO[str]) -> None:
    """Write the TSV fallback with lossless float formatting.

    float32 -> float64 is exact and repr(float) is shortest-round-trip, so
    parsing the line recovers the identical float32 vector.
    """
    for i, (query_id, doc_id) in enumerate(embeddings.keys):
        values = ",".join(repr(float(v)) for v in embeddings.matrix[i])
        stream.write(f"{query_id}\t{doc_id}\t{values}\n")


def l2_normalize(embeddings: EmbeddingSet) -> EmbeddingSet:
    """Scale every vector to unit L2 norm.

    Already-normalized sets are returned unchanged, making the operation
    exactly idempotent.  Zero vectors raise DegenerateVectorError.
    """
    if embeddings.normalized:
        return embeddings
    wide = embeddings.matrix.astype(np.float64)
    norms = np.linalg.norm(wide, axis=1)
    zero_rows = np.flatnonzero(norms == 0.0)
    if zero_rows.size:
        raise DegenerateVectorError(f"zero vector for pair {embeddings.keys[zero_rows[0]]}")
    scaled = (wide / norms[:, None]).astype(np.float32)
    return EmbeddingSet(
        dimension=embeddings.dimension,
        keys=embeddings.keys,
        matrix=scaled,
        normalized=True,
    )
