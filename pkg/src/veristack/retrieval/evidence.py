"""Evidence assembly: dense retrieval, rescoring and visual matching.

Textual stores go through chunk -> embed -> dense top-N -> rerank top-n ->
neighbor expansion, in that order; neighbor expansion happens strictly
after reranking so context never influences the ranking itself. The image
store is matched in a shared text/image embedding space, once by the claim
text and once per claim image.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from ..backend.wire import ModelBackend, load_image_bytes
from ..core import Claim, ImageRef, KnowledgeStore, PipelineConfig, StoreKind
from .chunking import TextChunk, TextEvidenceItem, augment_with_neighbors, chunk_document
from .dense import DenseIndex, dense_topk, normalize_rows
from .embed_cache import EmbedCache
from .rerank import rerank as rerank_chunks

import base64

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ImageEvidenceItem:
    """One retrieved image with the query that surfaced it.

    ``matched_by`` is ``"claim_text"`` or ``"claim_image_<i>"`` (1-based).
    """

    image: ImageRef
    source_url: str
    score: float
    matched_by: str


@dataclass(frozen=True)
class EvidenceBundle:
    """Everything retrieval hands to the analysis agents.

    Fields are None only for hand-built bundles where a set is deliberately
    absent; the retrieval entry point always fills all three (possibly with
    empty tuples, which simply means nothing was retrieved).
    """

    text_text: Optional[tuple[TextEvidenceItem, ...]] = None
    image_text: Optional[tuple[TextEvidenceItem, ...]] = None
    images: Optional[tuple[ImageEvidenceItem, ...]] = None


def _embed_in_batches(
    texts: Sequence[str], backend: ModelBackend, model: str, batch_size: int
) -> list[list[float]]:
    out: list[list[float]] = []
    for i in range(0, len(texts), batch_size):
        out.extend(backend.embed(model, texts[i : i + batch_size]))
    return out


def _doc_entries(store: KnowledgeStore) -> list[tuple[str, str]]:
    """(unique doc key, text) for entries with substantive text.

    Repeated urls get a ``#<n>`` suffix so chunk provenance stays unambiguous.
    """
    seen: dict[str, int] = {}
    docs: list[tuple[str, str]] = []
    for entry in store.entries:
        if entry.text is None or not entry.text.strip():
            continue
        n = seen.get(entry.url, 0)
        seen[entry.url] = n + 1
        key = entry.url if n == 0 else f"{entry.url}#{n + 1}"
        docs.append((key, entry.text))
    return docs


def build_text_index(
    store: KnowledgeStore,
    backend: ModelBackend,
    cfg: PipelineConfig,
    cache: EmbedCache | None = None,
) -> tuple[DenseIndex, dict[str, list[TextChunk]]]:
    """Chunk and embed every textual entry of ``store``.

    Returns the dense index plus a doc-url -> ordered chunk list map needed
    later for neighbor expansion. Embeddings are fetched from the cache per
    document when available; misses are embedded and written back.
    """
    if not store.kind.is_textual:
        raise ValueError(f"store kind {store.kind.value} holds images, not text")
    all_chunks: list[TextChunk] = []
    all_vecs: list[np.ndarray] = []
    doc_map: dict[str, list[TextChunk]] = {}
    for doc_url, text in _doc_entries(store):
        chunks = chunk_document(text, cfg.chunk_chars, doc_url)
        if not chunks:
            continue
        mat = cache.get(text) if cache is not None else None
        if mat is not None and mat.shape[0] != len(chunks):
            log.warning("cache row mismatch for %s; re-embedding", doc_url)
            mat = None
        if mat is None:
            raw = _embed_in_batches(
                [c.text for c in chunks], backend, cfg.embed_model, cfg.embed_batch_size
            )
            mat = normalize_rows(np.array(raw, dtype=np.float32))
            if cache is not None:
                cache.put(text, mat, doc_url)
        doc_map[doc_url] = chunks
        all_chunks.extend(chunks)
        all_vecs.append(mat)
    if not all_chunks:
        return DenseIndex([], np.zeros((0, 1), dtype=np.float32)), {}
    return DenseIndex(all_chunks, np.vstack(all_vecs)), doc_map


def retrieve_text_evidence(
    claim: Claim,
    store: KnowledgeStore,
    cfg: PipelineConfig,
    backend: ModelBackend,
    cache: EmbedCache | None = None,
) -> list[TextEvidenceItem]:
    """Full textual retrieval for one claim against one store.

    Output is ordered by rerank score (descending, dense-rank ties) and
    already carries neighbor context.
    """
    index, doc_map = build_text_index(store, backend, cfg, cache)
    if len(index) == 0:
        return []
    qraw = np.asarray(backend.embed(cfg.embed_model, [claim.text])[0], dtype=np.float64)
    qnorm = float(np.linalg.norm(qraw))
    if qnorm == 0.0:
        return []
    hits = dense_topk(index, qraw / qnorm, cfg.dense_k)
    dense_score = {id(chunk): score for chunk, score in hits}
    candidates = [chunk for chunk, _ in hits]
    reranked = rerank_chunks(claim.text, candidates, cfg.rerank_k, backend, cfg.rerank_model)
    items: list[TextEvidenceItem] = []
    for chunk, rscore in reranked:
        items.append(
            augment_with_neighbors(
                chunk,
                doc_map[chunk.doc_url],
                cfg.neighbor_span,
                source_store=store.kind,
                embed_score=dense_score[id(chunk)],
                rerank_score=rscore,
            )
        )
    return items


def _image_b64_items(refs: Sequence[ImageRef]) -> list[dict]:
    return [
        {"image_b64": base64.b64encode(load_image_bytes(ref)).decode("ascii")} for ref in refs
    ]


def _mm_unit(vec: Sequence[float]) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(arr))
    return arr / norm if norm else arr


def retrieve_visual_evidence(
    claim: Claim,
    store: KnowledgeStore,
    cfg: PipelineConfig,
    backend: ModelBackend,
) -> list[ImageEvidenceItem]:
    """Match store images by claim text and by each claim image.

    Takes the top ``visual_text_k`` for the text query and the top
    ``visual_per_image_k`` per claim image, then deduplicates on image id
    keeping the higher score. Output is ordered by descending score with
    image id as tie-break.
    """
    if store.kind.is_textual:
        raise ValueError(f"store kind {store.kind.value} holds text, not images")
    entries = [e for e in store.entries if e.image is not None]
    if not entries:
        return []
    vecs = []
    for i in range(0, len(entries), cfg.embed_batch_size):
        batch = entries[i : i + cfg.embed_batch_size]
        vecs.extend(
            backend.mm_embed(cfg.mm_embed_model, _image_b64_items([e.image for e in batch]))
        )
    matrix = np.array([_mm_unit(v) for v in vecs], dtype=np.float64)

    def top_by(qvec: np.ndarray, k: int, tag: str) -> list[ImageEvidenceItem]:
        scores = matrix @ qvec
        order = sorted(range(len(entries)), key=lambda i: (-scores[i], entries[i].image.id))
        return [
            ImageEvidenceItem(
                image=entries[i].image,
                source_url=entries[i].url,
                score=float(scores[i]),
                matched_by=tag,
            )
            for i in order[: min(k, len(entries))]
        ]

    queries: list[dict] = [{"text": claim.text}]
    queries.extend(_image_b64_items(claim.images))
    qvecs = backend.mm_embed(cfg.mm_embed_model, queries)
    picked: list[ImageEvidenceItem] = list(
        top_by(_mm_unit(qvecs[0]), cfg.visual_text_k, "claim_text")
    )
    for n, qv in enumerate(qvecs[1:], start=1):
        picked.extend(top_by(_mm_unit(qv), cfg.visual_per_image_k, f"claim_image_{n}"))

    best: dict[str, ImageEvidenceItem] = {}
    for item in picked:
        prev = best.get(item.image.id)
        if prev is None or item.score > prev.score:
            best[item.image.id] = item
    return sorted(best.values(), key=lambda it: (-it.score, it.image.id))


def retrieve_evidence(
    claim: Claim,
    stores: Mapping[StoreKind, KnowledgeStore],
    cfg: PipelineConfig,
    backend: ModelBackend,
    cache_root: str | None = None,
) -> EvidenceBundle:
    """Run all three retrievals for a claim. Absent stores yield empty sets."""
    cache = EmbedCache(cache_root, cfg.embed_model) if cache_root else None

    def textual(kind: StoreKind) -> tuple[TextEvidenceItem, ...]:
        store = stores.get(kind)
        if store is None:
            return ()
        return tuple(retrieve_text_evidence(claim, store, cfg, backend, cache))

    image_store = stores.get(StoreKind.TEXT_QUERY_IMAGE)
    images: tuple[ImageEvidenceItem, ...] = ()
    if image_store is not None:
        images = tuple(retrieve_visual_evidence(claim, image_store, cfg, backend))
    return EvidenceBundle(
        text_text=textual(StoreKind.TEXT_QUERY_TEXT),
        image_text=textual(StoreKind.IMAGE_QUERY_TEXT),
        images=images,
    )
