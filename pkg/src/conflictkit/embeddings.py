"""Sentence-vector storage and normalized pairwise similarity.

Vectors are produced by an external encoder and exchanged through the EMB1
binary format; this module only loads them and computes similarities.

EMB1 layout (little-endian, no padding):
    magic "EMB1" (4 ASCII bytes), u32 count, u32 dim,
    then per row: u32 id byte-length, UTF-8 id bytes, dim x float32.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from .validation import check_similarity_values, check_unique_ids

EMB1_MAGIC = b"EMB1"


class EmbeddingFormatError(ValueError):
    """Raised for malformed EMB1 data; carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Fixed-dimension float32 vectors keyed by text id, in file order."""

    ids: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ids", check_unique_ids(self.ids))
        vectors = np.asarray(self.vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise ValueError(f"vectors must be 2-dimensional, got {vectors.ndim}")
        if vectors.shape[0] != len(self.ids):
            raise ValueError(
                f"row count {vectors.shape[0]} does not match id count {len(self.ids)}"
            )
        if not np.isfinite(vectors).all():
            raise ValueError("vectors contain non-finite entries")
        object.__setattr__(self, "vectors", vectors)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def row(self, text_id: str) -> np.ndarray:
        return self.vectors[self.index(text_id)]

    def index(self, text_id: str) -> int:
        try:
            return self._index[text_id]
        except AttributeError:
            object.__setattr__(
                self, "_index", {i: k for k, i in enumerate(self.ids)}
            )
            return self._index[text_id]


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric pairwise similarities in [0, 1] with unit diagonal."""

    ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ids", check_unique_ids(self.ids))
        object.__setattr__(
            self, "values", check_similarity_values(self.values, self.ids)
        )

    def __len__(self) -> int:
        return len(self.ids)


def load_embeddings(stream: BinaryIO) -> EmbeddingMatrix:
    """Read an EMB1 stream; malformed content raises ``EmbeddingFormatError``."""
    offset = 0

    def read_exact(n: int, what: str) -> bytes:
        nonlocal offset
        buf = stream.read(n)
        if len(buf) != n:
            raise EmbeddingFormatError(f"truncated file while reading {what}", offset)
        offset += n
        return buf

    magic = read_exact(4, "magic")
    if magic != EMB1_MAGIC:
        raise EmbeddingFormatError(f"bad magic {magic!r}, expected {EMB1_MAGIC!r}", 0)
    count, dim = struct.unpack("<II", read_exact(8, "header"))
    if dim == 0:
        raise EmbeddingFormatError("dimension must be positive", 4)

    # rows are collected incrementally so a corrupted count/dim header fails
    # on the first short read instead of provoking one huge allocation
    ids: list[str] = []
    rows: list[np.ndarray] = []
    for r in range(count):
        (id_len,) = struct.unpack("<I", read_exact(4, f"id length of row {r}"))
        row_offset = offset
        try:
            ids.append(read_exact(id_len, f"id of row {r}").decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise EmbeddingFormatError(f"id of row {r} is not UTF-8", row_offset) from exc
        vec_offset = offset
        vec = np.frombuffer(read_exact(4 * dim, f"vector of row {r}"), dtype="<f4")
        if not np.isfinite(vec).all():
            raise EmbeddingFormatError(f"non-finite value in row {r}", vec_offset)
        rows.append(vec)

    trailing = stream.read(1)
    if trailing:
        raise EmbeddingFormatError("trailing bytes after last row", offset)
    vectors = np.vstack(rows) if rows else np.empty((0, dim), dtype=np.float32)
    return EmbeddingMatrix(ids=tuple(ids), vectors=vectors)


def write_embeddings(matrix: EmbeddingMatrix, stream: BinaryIO) -> None:
    stream.write(EMB1_MAGIC)
    stream.write(struct.pack("<II", len(matrix), matrix.dim))
    for text_id, row in zip(matrix.ids, matrix.vectors):
        encoded = text_id.encode("utf-8")
        stream.write(struct.pack("<I", len(encoded)))
        stream.write(encoded)
        stream.write(np.ascontiguousarray(row, dtype="<f4").tobytes())


def normalized_cosine(u, v) -> float:
    """Cosine similarity affinely mapped to [0, 1]: (cos + 1) / 2, clamped.

    Accumulates in float64 regardless of input dtype; zero-norm vectors are
    rejected because they signal an upstream encoding failure.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"vectors must share one dimension, got {u.shape} and {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("zero-norm vector has no cosine similarity")
    cos = float(np.dot(u, v) / (nu * nv))
    return min(1.0, max(0.0, (cos + 1.0) / 2.0))


def pairwise_similarity(matrix: EmbeddingMatrix) -> SimilarityMatrix:
    """All-pairs normalized cosine; exactly symmetric with unit diagonal."""
    vectors = matrix.vectors.astype(np.float64)
    norms = np.linalg.norm(vectors, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"zero-norm embedding for id {matrix.ids[zero[0]]!r}")
    unit = vectors / norms[:, None]
    sims = np.clip((unit @ unit.T + 1.0) / 2.0, 0.0, 1.0)
    # store the upper triangle once and mirror it so symmetry is bit-exact
    upper = np.triu(sims, k=1)
    values = upper + upper.T
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(ids=matrix.ids, values=values)
