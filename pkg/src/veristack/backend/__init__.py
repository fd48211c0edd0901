"""Model backend interfaces: wire contract, HTTP client, offline stub."""

from __future__ import annotations

import threading
from typing import Sequence

from .client import HttpBackend
from .stub import StubBackend, StubRule, StubState
from .wire import (
    ENDPOINTS,
    GenerateResult,
    ModelBackend,
    image_segment,
    load_image_bytes,
    load_wire_schema,
    text_segment,
    validate_message,
)


class CountingBackend:
    """Telemetry wrapper: forwards every call, tallying per-endpoint counts."""

    def __init__(self, inner: ModelBackend) -> None:
        self.inner = inner
        self._lock = threading.Lock()
        self.counts: dict[str, int] = {name: 0 for name in ENDPOINTS}

    def _bump(self, name: str) -> None:
        with self._lock:
            self.counts[name] += 1

    def embed(self, model: str, texts: Sequence[str]) -> list[list[float]]:
        self._bump("embed")
        return self.inner.embed(model, texts)

    def mm_embed(self, model: str, items: Sequence[dict]) -> list[list[float]]:
        self._bump("mm_embed")
        return self.inner.mm_embed(model, items)

    def rerank(self, model: str, query: str, documents: Sequence[str]) -> list[float]:
        self._bump("rerank")
        return self.inner.rerank(model, query, documents)

    def generate(
        self, model: str, segments: Sequence[dict], max_tokens: int, temperature: float
    ) -> GenerateResult:
        self._bump("generate")
        return self.inner.generate(model, segments, max_tokens, temperature)


__all__ = [
    "CountingBackend",
    "ENDPOINTS",
    "GenerateResult",
    "HttpBackend",
    "ModelBackend",
    "StubBackend",
    "StubRule",
    "StubState",
    "image_segment",
    "load_image_bytes",
    "load_wire_schema",
    "text_segment",
    "validate_message",
]
