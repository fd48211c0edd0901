"""JSON round-trips for stage artifacts.

Stage caching and the results file both need loss-free dict forms of every
intermediate artifact. Conversions here are the single source of truth for
those shapes; cache keys additionally use the canonical dump (sorted keys,
no whitespace) so logically equal payloads hash equally.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Optional

from ..agents.prompts import AgentKind
from ..agents.stages import AnalysisReport
from ..backend.wire import load_image_bytes
from ..core import Claim, ImageRef, KnowledgeStore, Label, QAPair, QASet, Verdict
from ..retrieval.chunking import TextChunk, TextEvidenceItem
from ..retrieval.evidence import EvidenceBundle, ImageEvidenceItem
from ..core import StoreKind


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=True, separators=(",", ":"))


def digest(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def image_ref_to_dict(ref: ImageRef) -> dict:
    return {"id": ref.id, "location": ref.location, "bytes_digest": ref.bytes_digest}


def image_ref_from_dict(d: dict) -> ImageRef:
    return ImageRef(id=d["id"], location=d["location"], bytes_digest=d.get("bytes_digest"))


def chunk_to_dict(c: TextChunk) -> dict:
    return {"doc_url": c.doc_url, "index": c.index, "start": c.start, "end": c.end, "text": c.text}


def chunk_from_dict(d: dict) -> TextChunk:
    return TextChunk(
        doc_url=d["doc_url"], index=d["index"], start=d["start"], end=d["end"], text=d["text"]
    )


def text_item_to_dict(item: TextEvidenceItem) -> dict:
    return {
        "center": chunk_to_dict(item.center),
        "neighbors": [chunk_to_dict(c) for c in item.neighbors],
        "combined_text": item.combined_text,
        "source_store": item.source_store.value if item.source_store else None,
        "embed_score": item.embed_score,
        "rerank_score": item.rerank_score,
    }


def text_item_from_dict(d: dict) -> TextEvidenceItem:
    return TextEvidenceItem(
        center=chunk_from_dict(d["center"]),
        neighbors=tuple(chunk_from_dict(c) for c in d["neighbors"]),
        combined_text=d["combined_text"],
        source_store=StoreKind(d["source_store"]) if d.get("source_store") else None,
        embed_score=d["embed_score"],
        rerank_score=d["rerank_score"],
    )


def image_item_to_dict(item: ImageEvidenceItem) -> dict:
    return {
        "image": image_ref_to_dict(item.image),
        "source_url": item.source_url,
        "score": item.score,
        "matched_by": item.matched_by,
    }


def image_item_from_dict(d: dict) -> ImageEvidenceItem:
    return ImageEvidenceItem(
        image=image_ref_from_dict(d["image"]),
        source_url=d["source_url"],
        score=d["score"],
        matched_by=d["matched_by"],
    )


def bundle_to_dict(bundle: EvidenceBundle) -> dict:
    def items(seq, conv):
        return None if seq is None else [conv(x) for x in seq]

    return {
        "text_text": items(bundle.text_text, text_item_to_dict),
        "image_text": items(bundle.image_text, text_item_to_dict),
        "images": items(bundle.images, image_item_to_dict),
    }


def bundle_from_dict(d: dict) -> EvidenceBundle:
    def items(seq, conv):
        return None if seq is None else tuple(conv(x) for x in seq)

    return EvidenceBundle(
        text_text=items(d["text_text"], text_item_from_dict),
        image_text=items(d["image_text"], text_item_from_dict),
        images=items(d["images"], image_item_from_dict),
    )


def report_to_dict(report: AnalysisReport) -> dict:
    return {
        "kind": report.kind.value,
        "raw": report.raw,
        "sections": [[t, b] for t, b in report.sections],
    }


def report_from_dict(d: dict) -> AnalysisReport:
    return AnalysisReport(
        kind=AgentKind(d["kind"]),
        raw=d["raw"],
        sections=tuple((t, b) for t, b in d["sections"]),
    )


def qa_pair_to_dict(pair: QAPair) -> dict:
    return {
        "question": pair.question,
        "answer": pair.answer,
        "iteration": pair.iteration,
        "position": pair.position,
    }


def qa_pair_from_dict(d: dict) -> QAPair:
    return QAPair(
        question=d["question"],
        answer=d["answer"],
        iteration=d["iteration"],
        position=d["position"],
    )


def qaset_to_dict(qaset: QASet) -> dict:
    return {
        "pairs": [qa_pair_to_dict(p) for p in qaset.pairs],
        "retries": qaset.retries,
        "deviations": list(qaset.deviations),
    }


def qaset_from_dict(d: dict) -> QASet:
    return QASet(
        pairs=tuple(qa_pair_from_dict(p) for p in d["pairs"]),
        retries=d["retries"],
        deviations=tuple(d["deviations"]),
    )


def verdict_to_dict(verdict: Verdict) -> dict:
    return {
        "label": verdict.label.canonical,
        "justification": verdict.justification,
        "selected": [qa_pair_to_dict(p) for p in verdict.selected],
    }


def verdict_from_dict(d: dict) -> Verdict:
    return Verdict(
        label=Label(d["label"]),
        justification=d["justification"],
        selected=tuple(qa_pair_from_dict(p) for p in d["selected"]),
    )


def claim_fingerprint(claim: Claim) -> dict:
    """Cache-key view of a claim: stable identity plus image content hashes."""
    images = []
    for ref in claim.images:
        data = load_image_bytes(ref)
        images.append({"id": ref.id, "sha256": hashlib.sha256(data).hexdigest()})
    return {
        "id": claim.id,
        "text": claim.text,
        "claimant": claim.claimant,
        "date": claim.date,
        "images": images,
    }


def store_digest(store: Optional[KnowledgeStore]) -> str:
    """Content hash of a store, streamed so large texts are not re-dumped."""
    h = hashlib.sha256()
    if store is None:
        return h.hexdigest()
    h.update(store.kind.value.encode("utf-8"))
    for entry in store.entries:
        h.update(b"\x00")
        h.update(entry.url.encode("utf-8"))
        h.update(b"\x01")
        if entry.text is not None:
            h.update(entry.text.encode("utf-8"))
        h.update(b"\x02")
        if entry.image is not None:
            h.update(entry.image.id.encode("utf-8"))
            h.update(b"\x03")
            h.update(load_image_bytes(entry.image))
    return h.hexdigest()
