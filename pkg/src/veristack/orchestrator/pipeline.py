"""Per-claim pipeline driver: retrieval -> analysis -> QA -> verdict.

The driver is the only place stages are sequenced, cached and timed. All
model traffic goes through a per-claim CountingBackend so each result
carries its own call telemetry. A stage failure stops that claim, keeps
every artifact produced so far, and tags the result with where and why;
one claim's failure never touches another claim.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

from ..agents.prompts import FewshotExample
from ..agents.stages import AnalysisReport, generate_qa, predict_verdict, run_analysis_agents
from ..backend import CountingBackend
from ..backend.wire import ModelBackend
from ..core import Claim, KnowledgeStore, PipelineConfig, QASet, StoreKind, Verdict
from ..errors import StageError
from ..retrieval.bm25 import Bm25Index, bm25_topk
from ..retrieval.evidence import EvidenceBundle, retrieve_evidence
from . import serialize as ser
from .stagecache import StageCache

log = logging.getLogger(__name__)

STAGES = ("retrieval", "analysis", "qa", "verdict")


@dataclass(frozen=True)
class ClaimResult:
    claim_id: str
    bundle: Optional[EvidenceBundle] = None
    reports: Optional[tuple[AnalysisReport, ...]] = None
    qaset: Optional[QASet] = None
    verdict: Optional[Verdict] = None
    error_stage: Optional[str] = None
    error: Optional[str] = None
    generate_calls: int = 0
    cache_hits: tuple[str, ...] = ()
    timings: tuple[tuple[str, float], ...] = ()

    @property
    def failed(self) -> bool:
        return self.error is not None


class FewshotSelector:
    """BM25 selection of training exemplars by claim-text similarity."""

    def __init__(self, exemplars: Sequence[FewshotExample], cfg: PipelineConfig) -> None:
        self._exemplars = list(exemplars)
        self._k = cfg.fewshot_k
        self._index = (
            Bm25Index(
                {str(i): ex.claim_text for i, ex in enumerate(self._exemplars)},
                k1=cfg.bm25_k1,
                b=cfg.bm25_b,
            )
            if self._exemplars
            else None
        )

    def select(self, claim_text: str) -> tuple[FewshotExample, ...]:
        if self._index is None:
            return ()
        ranked = bm25_topk(self._index, claim_text, self._k)
        return tuple(self._exemplars[int(doc_id)] for doc_id, _ in ranked)


def _fewshot_payload(examples: Sequence[FewshotExample]) -> list[dict]:
    return [{"claim_text": ex.claim_text, "pairs": [list(p) for p in ex.pairs]} for ex in examples]


def run_pipeline(
    claim: Claim,
    stores: Mapping[StoreKind, KnowledgeStore],
    cfg: PipelineConfig,
    backend: ModelBackend,
    *,
    cache: Optional[StageCache] = None,
    fewshot: Optional[FewshotSelector] = None,
    embed_cache_root: Optional[str] = None,
) -> ClaimResult:
    """Run every stage for one claim; never raises for per-claim failures."""
    cache = cache or StageCache(None)
    counting = CountingBackend(backend)
    claim_fp = ser.claim_fingerprint(claim)
    hits: list[str] = []
    timings: list[tuple[str, float]] = []

    bundle: Optional[EvidenceBundle] = None
    reports: Optional[tuple[AnalysisReport, ...]] = None
    qaset: Optional[QASet] = None
    verdict: Optional[Verdict] = None

    def fail(stage: str, exc: Exception) -> ClaimResult:
        if isinstance(exc, StageError):
            stage = exc.stage
        message = f"{type(exc).__name__}: {exc}"
        log.warning("claim %s failed at %s: %s", claim.id, stage, message)
        return ClaimResult(
            claim_id=claim.id,
            bundle=bundle,
            reports=reports,
            qaset=qaset,
            verdict=verdict,
            error_stage=stage,
            error=message,
            generate_calls=counting.counts["generate"],
            cache_hits=tuple(hits),
            timings=tuple(timings),
        )

    # retrieval
    t0 = time.perf_counter()
    key = StageCache.key(
        {
            "claim": claim_fp,
            "stores": {kind.value: ser.store_digest(stores.get(kind)) for kind in StoreKind},
            "cfg": {
                "dense_k": cfg.dense_k,
                "rerank_k": cfg.rerank_k,
                "chunk_chars": cfg.chunk_chars,
                "neighbor_span": cfg.neighbor_span,
                "visual_text_k": cfg.visual_text_k,
                "visual_per_image_k": cfg.visual_per_image_k,
                "embed_model": cfg.embed_model,
                "rerank_model": cfg.rerank_model,
                "mm_embed_model": cfg.mm_embed_model,
            },
        }
    )
    cached = cache.get("retrieval", key)
    try:
        if cached is not None:
            bundle = ser.bundle_from_dict(cached)
            hits.append("retrieval")
        else:
            bundle = retrieve_evidence(claim, stores, cfg, counting, embed_cache_root)
            cache.put("retrieval", key, ser.bundle_to_dict(bundle))
    except Exception as exc:
        return fail("retrieval", exc)
    timings.append(("retrieval", time.perf_counter() - t0))

    # analysis
    t0 = time.perf_counter()
    bundle_digest = ser.digest(ser.bundle_to_dict(bundle))
    gen_cfg = {
        "generate_model": cfg.generate_model,
        "temperature": cfg.temperature,
        "max_output_tokens": cfg.max_output_tokens,
        "evidence_char_cap": cfg.evidence_char_cap,
    }
    key = StageCache.key({"claim": claim_fp, "bundle": bundle_digest, "cfg": gen_cfg})
    cached = cache.get("analysis", key)
    try:
        if cached is not None:
            reports = tuple(ser.report_from_dict(d) for d in cached["reports"])
            hits.append("analysis")
        else:
            reports = run_analysis_agents(claim, bundle, cfg, counting)
            cache.put("analysis", key, {"reports": [ser.report_to_dict(r) for r in reports]})
    except Exception as exc:
        return fail("analysis", exc)
    timings.append(("analysis", time.perf_counter() - t0))

    # qa generation
    t0 = time.perf_counter()
    examples = fewshot.select(claim.text) if fewshot is not None else ()
    key = StageCache.key(
        {
            "claim": claim_fp,
            "reports": [r.raw for r in reports],
            "fewshot": _fewshot_payload(examples),
            "cfg": {
                **gen_cfg,
                "qa_iterations": cfg.qa_iterations,
                "qa_per_iteration": cfg.qa_per_iteration,
                "retry_budget": cfg.retry_budget,
            },
        }
    )
    cached = cache.get("qa", key)
    try:
        if cached is not None:
            qaset = ser.qaset_from_dict(cached)
            hits.append("qa")
        else:
            qaset = generate_qa(claim, reports, examples, cfg, counting)
            cache.put("qa", key, ser.qaset_to_dict(qaset))
    except Exception as exc:
        return fail("qa", exc)
    timings.append(("qa", time.perf_counter() - t0))

    # verdict
    t0 = time.perf_counter()
    key = StageCache.key(
        {
            "claim": claim_fp,
            "qaset": ser.digest(ser.qaset_to_dict(qaset)),
            "cfg": {
                **gen_cfg,
                "verdict_select_k": cfg.verdict_select_k,
                "retry_budget": cfg.retry_budget,
            },
        }
    )
    cached = cache.get("verdict", key)
    try:
        if cached is not None:
            verdict = ser.verdict_from_dict(cached)
            hits.append("verdict")
        else:
            verdict = predict_verdict(claim, qaset, cfg, counting)
            cache.put("verdict", key, ser.verdict_to_dict(verdict))
    except Exception as exc:
        return fail("verdict", exc)
    timings.append(("verdict", time.perf_counter() - t0))

    return ClaimResult(
        claim_id=claim.id,
        bundle=bundle,
        reports=reports,
        qaset=qaset,
        verdict=verdict,
        generate_calls=counting.counts["generate"],
        cache_hits=tuple(hits),
        timings=tuple(timings),
    )


StoreLoader = Callable[[Claim], Mapping[StoreKind, KnowledgeStore]]


def run_batch(
    claims: Sequence[Claim],
    store_loader: StoreLoader,
    cfg: PipelineConfig,
    backend: ModelBackend,
    *,
    workers: int = 1,
    cache: Optional[StageCache] = None,
    exemplars: Optional[Sequence[FewshotExample]] = None,
    embed_cache_root: Optional[str] = None,
) -> list[ClaimResult]:
    """Run the pipeline over many claims, preserving input order.

    Claims are independent, so they parallelize across threads; the model
    backend has to tolerate concurrent calls (both shipped backends do).
    A store_loader error for a claim is a retrieval-stage failure for that
    claim only.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    selector = FewshotSelector(exemplars, cfg) if exemplars else None

    def run_one(claim: Claim) -> ClaimResult:
        try:
            stores = store_loader(claim)
        except Exception as exc:
            return ClaimResult(
                claim_id=claim.id,
                error_stage="retrieval",
                error=f"{type(exc).__name__}: store loading failed: {exc}",
            )
        return run_pipeline(
            claim,
            stores,
            cfg,
            backend,
            cache=cache,
            fewshot=selector,
            embed_cache_root=embed_cache_root,
        )

    if workers == 1 or len(claims) <= 1:
        return [run_one(c) for c in claims]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_one, c) for c in claims]
        return [f.result() for f in futures]
