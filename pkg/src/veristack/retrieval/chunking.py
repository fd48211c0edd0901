"""Fixed-width document chunking with neighbor expansion.

Chunks are windows of Unicode code points, not bytes and not graphemes:
``len(text)`` arithmetic everywhere. The last chunk of a document is allowed
to be short; an empty document yields no chunks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..core import StoreKind
from ..errors import ChunkNotInDocument


@dataclass(frozen=True)
class TextChunk:
    doc_url: str
    index: int      # position of this chunk within its document, 0-based
    start: int      # [start, end) in code points of the source text
    end: int
    text: str

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("chunk index must be >= 0")
        if not (0 <= self.start < self.end):
            raise ValueError("chunk span must be non-empty and non-negative")
        if self.end - self.start != len(self.text):
            raise ValueError("chunk span does not match text length")


@dataclass(frozen=True)
class TextEvidenceItem:
    """A reranked chunk together with its adjacent context.

    ``neighbors`` holds the surviving adjacent chunks (center excluded) in
    document order; ``combined_text`` is the document-order concatenation of
    neighbors and center, which is exactly the source span they cover.
    """

    center: TextChunk
    neighbors: tuple[TextChunk, ...]
    combined_text: str
    source_store: Optional[StoreKind] = None
    embed_score: float = 0.0
    rerank_score: float = 0.0


def chunk_document(text: str, chunk_chars: int, doc_url: str = "") -> list[TextChunk]:
    """Split ``text`` into consecutive windows of at most ``chunk_chars``."""
    if chunk_chars < 1:
        raise ValueError("chunk_chars must be >= 1")
    chunks: list[TextChunk] = []
    for i, start in enumerate(range(0, len(text), chunk_chars)):
        end = min(start + chunk_chars, len(text))
        chunks.append(TextChunk(doc_url=doc_url, index=i, start=start, end=end, text=text[start:end]))
    return chunks


def augment_with_neighbors(
    chunk: TextChunk,
    doc_chunks: Sequence[TextChunk],
    span: int = 1,
    *,
    source_store: Optional[StoreKind] = None,
    embed_score: float = 0.0,
    rerank_score: float = 0.0,
) -> TextEvidenceItem:
    """Attach up to ``span`` chunks on each side of ``chunk``.

    ``doc_chunks`` must be the full ordered chunk list of the chunk's own
    document; the chunk is located by its index and verified against it.
    Boundary chunks simply keep fewer neighbors.
    """
    if span < 0:
        raise ValueError("span must be >= 0")
    if chunk.index >= len(doc_chunks) or doc_chunks[chunk.index] != chunk:
        raise ChunkNotInDocument(
            f"chunk {chunk.index} of {chunk.doc_url!r} not found in its document chunk list"
        )
    lo = max(0, chunk.index - span)
    hi = min(len(doc_chunks) - 1, chunk.index + span)
    window = [doc_chunks[i] for i in range(lo, hi + 1)]
    neighbors = tuple(c for c in window if c.index != chunk.index)
    combined = "".join(c.text for c in window)
    return TextEvidenceItem(
        center=chunk,
        neighbors=neighbors,
        combined_text=combined,
        source_store=source_store,
        embed_score=embed_score,
        rerank_score=rerank_score,
    )
