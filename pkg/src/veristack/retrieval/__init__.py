"""Retrieval: chunking, dense search, BM25, reranking, evidence assembly."""

from .bm25 import Bm25Index, bm25_topk, tokenize
from .chunking import TextChunk, TextEvidenceItem, augment_with_neighbors, chunk_document
from .dense import DenseIndex, dense_topk, normalize_rows
from .embed_cache import EmbedCache
from .evidence import (
    EvidenceBundle,
    ImageEvidenceItem,
    build_text_index,
    retrieve_evidence,
    retrieve_text_evidence,
    retrieve_visual_evidence,
)
from .rerank import rerank

__all__ = [
    "Bm25Index",
    "DenseIndex",
    "EmbedCache",
    "EvidenceBundle",
    "ImageEvidenceItem",
    "TextChunk",
    "TextEvidenceItem",
    "augment_with_neighbors",
    "bm25_topk",
    "build_text_index",
    "chunk_document",
    "dense_topk",
    "normalize_rows",
    "rerank",
    "retrieve_evidence",
    "retrieve_text_evidence",
    "retrieve_visual_evidence",
    "tokenize",
]
