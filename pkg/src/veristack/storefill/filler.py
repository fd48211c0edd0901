"""Replace useless store entries with freshly fetched page content.

Filling never discards an entry and never touches one that is already
useful, so per-store evidence counts are monotonically non-decreasing and
a second pass over an already-filled store is a no-op.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

from ..core import FillStatus, KnowledgeStore, PipelineConfig, StoreEntry, Usefulness
from ..errors import ExtractEmpty, StatsEmptyInput, UrlInvalid
from .extract import extract_main_content
from .fetch import Fetcher
from .routing import classify_fetch_route
from .usefulness import assess_usefulness

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CountStats:
    avg: float
    min: int
    max: int


@dataclass(frozen=True)
class FillStats:
    original: CountStats
    filled: CountStats


def evidence_count(store: KnowledgeStore) -> int:
    """Entries carrying substantive text (images always count for the
    image store, whose entries cannot be empty by construction)."""
    if not store.kind.is_textual:
        return len(store.entries)
    return sum(1 for e in store.entries if e.text is not None and e.text.strip())


def snapshot_stats(stores: Sequence[KnowledgeStore]) -> CountStats:
    if not stores:
        raise StatsEmptyInput("no stores to summarize")
    counts = [evidence_count(s) for s in stores]
    return CountStats(avg=sum(counts) / len(counts), min=min(counts), max=max(counts))


def compute_fill_stats(
    original: Sequence[KnowledgeStore], filled: Sequence[KnowledgeStore]
) -> FillStats:
    return FillStats(original=snapshot_stats(original), filled=snapshot_stats(filled))


def _assess(entry: StoreEntry, cfg: PipelineConfig) -> Usefulness:
    return assess_usefulness(
        entry.text,
        min_useful_chars=cfg.min_useful_chars,
        generic_line_ratio=cfg.generic_line_ratio,
    )


def _fill_one(entry: StoreEntry, fetcher: Fetcher, cfg: PipelineConfig) -> StoreEntry:
    try:
        route = classify_fetch_route(entry.url)
    except UrlInvalid as exc:
        return replace(
            entry,
            fill_status=FillStatus.UNFILLABLE,
            usefulness=_assess(entry, cfg),
            note=f"invalid url: {exc}",
        )
    try:
        html = fetcher.fetch(entry.url, route)
    except Exception as exc:
        return replace(
            entry,
            fill_status=FillStatus.UNFILLABLE,
            usefulness=_assess(entry, cfg),
            note=f"fetch failed: {exc}",
        )
    try:
        text = extract_main_content(html)
    except ExtractEmpty:
        return replace(
            entry,
            fill_status=FillStatus.UNFILLABLE,
            usefulness=_assess(entry, cfg),
            note="no substantive content in fetched page",
        )
    verdict = assess_usefulness(
        text, min_useful_chars=cfg.min_useful_chars, generic_line_ratio=cfg.generic_line_ratio
    )
    if verdict is not Usefulness.USEFUL:
        return replace(
            entry,
            fill_status=FillStatus.UNFILLABLE,
            usefulness=_assess(entry, cfg),
            note=f"fetched content assessed {verdict.value}",
        )
    return replace(
        entry,
        text=text,
        fill_status=FillStatus.FILLED,
        usefulness=Usefulness.USEFUL,
        note=None,
    )


def fill_store(
    store: KnowledgeStore, fetcher: Fetcher, cfg: PipelineConfig = PipelineConfig()
) -> tuple[KnowledgeStore, FillStats]:
    """Fetch replacements for every empty/generic/restricted entry.

    Entry order is preserved; fetches for distinct entries run on up to
    ``cfg.fill_workers`` threads. Useful entries and entries already marked
    unfillable by a previous pass are left untouched (no re-fetch), which
    makes the operation idempotent.
    """
    if not store.kind.is_textual:
        raise ValueError(f"only textual stores are fillable, got {store.kind.value}")

    plan: list[StoreEntry | None] = []  # None marks a slot pending fetch
    jobs: list[int] = []
    for i, entry in enumerate(store.entries):
        verdict = _assess(entry, cfg)
        if verdict is Usefulness.USEFUL:
            plan.append(replace(entry, usefulness=Usefulness.USEFUL))
        elif entry.fill_status is FillStatus.UNFILLABLE:
            plan.append(replace(entry, usefulness=verdict))
        else:
            plan.append(None)
            jobs.append(i)

    if jobs:
        workers = min(cfg.fill_workers, len(jobs))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: _fill_one(store.entries[i], fetcher, cfg), jobs))
        for i, filled_entry in zip(jobs, results):
            plan[i] = filled_entry

    new_store = KnowledgeStore(kind=store.kind, entries=tuple(plan))  # type: ignore[arg-type]
    stats = compute_fill_stats([store], [new_store])
    log.info(
        "filled store %s: %d -> %d useful entries",
        store.kind.value,
        evidence_count(store),
        evidence_count(new_store),
    )
    return new_store, stats
