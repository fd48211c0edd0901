"""Knowledge-store filling: usefulness, routing, fetching, extraction."""

from .extract import extract_main_content
from .fetch import BrowserFetcher, FakeFetcher, Fetcher, HttpFetcher
from .filler import CountStats, FillStats, compute_fill_stats, evidence_count, fill_store, snapshot_stats
from .routing import FetchRoute, classify_fetch_route
from .usefulness import assess_usefulness, normalized_length

__all__ = [
    "BrowserFetcher",
    "CountStats",
    "FakeFetcher",
    "Fetcher",
    "FetchRoute",
    "FillStats",
    "HttpFetcher",
    "assess_usefulness",
    "classify_fetch_route",
    "compute_fill_stats",
    "evidence_count",
    "extract_main_content",
    "fill_store",
    "normalized_length",
    "snapshot_stats",
]
