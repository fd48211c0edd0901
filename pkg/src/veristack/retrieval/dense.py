"""Exhaustive dense retrieval over unit-normalized embeddings.

With all rows unit length, cosine similarity is a dot product; scores are
accumulated in float64 regardless of storage dtype so that ranking does not
depend on summation order quirks of float32.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import DimensionMismatch
from .chunking import TextChunk

_NORM_TOL = 1e-5


def normalize_rows(vectors: np.ndarray) -> np.ndarray:
    """L2-normalize rows, returning float32. Zero rows are rejected."""
    mat = np.asarray(vectors, dtype=np.float32)
    if mat.ndim != 2:
        raise ValueError("expected a 2-D array of row vectors")
    norms = np.linalg.norm(mat.astype(np.float64), axis=1)
    if np.any(norms == 0.0):
        raise ValueError("cannot normalize a zero vector")
    return (mat.astype(np.float64) / norms[:, None]).astype(np.float32)


class DenseIndex:
    """Immutable flat index: one unit-norm float32 row per chunk."""

    def __init__(self, chunks: Sequence[TextChunk], vectors: np.ndarray) -> None:
        mat = np.asarray(vectors, dtype=np.float32)
        if mat.ndim != 2:
            raise ValueError("vectors must be 2-D")
        if len(chunks) != mat.shape[0]:
            raise ValueError(f"{len(chunks)} chunks but {mat.shape[0]} vectors")
        if mat.shape[0]:
            norms = np.linalg.norm(mat.astype(np.float64), axis=1)
            bad = np.abs(norms - 1.0) > _NORM_TOL
            if np.any(bad):
                raise ValueError(f"{int(bad.sum())} row(s) are not unit-normalized")
        self.chunks: tuple[TextChunk, ...] = tuple(chunks)
        self.matrix = mat

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1]) if self.matrix.size or self.matrix.ndim == 2 else 0

    def __len__(self) -> int:
        return len(self.chunks)


def dense_topk(index: DenseIndex, query_vec: np.ndarray, k: int) -> list[tuple[TextChunk, float]]:
    """Top ``k`` chunks by cosine, ties broken by (doc_url, chunk index).

    The query must be unit-normalized and match the index dimension.
    Returns fewer than ``k`` pairs when the index is smaller than ``k``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(index) == 0:
        return []
    q = np.asarray(query_vec, dtype=np.float64).reshape(-1)
    if q.shape[0] != index.dim:
        raise DimensionMismatch(f"query dim {q.shape[0]} != index dim {index.dim}")
    norm = float(np.linalg.norm(q))
    if abs(norm - 1.0) > _NORM_TOL:
        raise ValueError("query vector must be unit-normalized")
    scores = index.matrix.astype(np.float64) @ q
    order = sorted(
        range(len(index)),
        key=lambda i: (-scores[i], index.chunks[i].doc_url, index.chunks[i].index),
    )
    return [(index.chunks[i], float(scores[i])) for i in order[: min(k, len(index))]]
