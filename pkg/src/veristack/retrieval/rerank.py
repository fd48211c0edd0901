"""Cross-encoder style rescoring of dense candidates via the backend."""

from __future__ import annotations

from typing import Sequence

from ..backend.wire import ModelBackend
from ..errors import BackendMalformed
from .chunking import TextChunk


def rerank(
    query: str,
    candidates: Sequence[TextChunk],
    k: int,
    backend: ModelBackend,
    model: str,
) -> list[tuple[TextChunk, float]]:
    """Score all candidates in one backend call and keep the top ``k``.

    Ties keep input (dense ranking) order, so rescoring can only reorder
    candidates the reranker actually distinguishes.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not candidates:
        raise ValueError("candidates must be non-empty")
    scores = backend.rerank(model, query, [c.text for c in candidates])
    if len(scores) != len(candidates):
        raise BackendMalformed(f"rerank returned {len(scores)} scores for {len(candidates)} candidates")
    order = sorted(range(len(candidates)), key=lambda i: (-scores[i], i))
    return [(candidates[i], float(scores[i])) for i in order[: min(k, len(candidates))]]
