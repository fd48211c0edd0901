"""HTTP client for a model backend speaking the v1 wire protocol."""

from __future__ import annotations

import logging
import time
from typing import Sequence

import requests

from ..errors import BackendMalformed, BackendUnavailable
from .wire import GenerateResult, validate_message

log = logging.getLogger(__name__)


class HttpBackend:
    """ModelBackend over HTTP.

    Connection errors, timeouts and 5xx responses are retried up to
    ``retry_budget`` times with a short linear backoff; 4xx responses are
    treated as contract violations and surface immediately.
    """

    def __init__(
        self,
        base_url: str,
        timeout: float = 60.0,
        retry_budget: int = 2,
        session: requests.Session | None = None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retry_budget = retry_budget
        # One session for connection reuse; requests.Session is thread-safe
        # for plain request sending.
        self._session = session or requests.Session()

    def _post(self, path: str, body: dict) -> dict:
        url = f"{self.base_url}{path}"
        last_exc: Exception | None = None
        for attempt in range(self.retry_budget + 1):
            if attempt:
                time.sleep(min(0.2 * attempt, 1.0))
            try:
                resp = self._session.post(url, json=body, timeout=self.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                log.debug("backend call %s failed (attempt %d): %s", path, attempt + 1, exc)
                continue
            if 200 <= resp.status_code < 300:
                try:
                    return resp.json()
                except ValueError as exc:
                    raise BackendMalformed(f"{path}: response is not JSON: {exc}") from None
            if resp.status_code >= 500:
                last_exc = BackendUnavailable(f"{path}: server error {resp.status_code}")
                log.debug("backend call %s got %d (attempt %d)", path, resp.status_code, attempt + 1)
                continue
            raise BackendMalformed(f"{path}: {resp.status_code} {_error_detail(resp)}")
        raise BackendUnavailable(f"{path}: backend unreachable after {self.retry_budget + 1} attempts: {last_exc}")

    def health(self) -> dict:
        try:
            resp = self._session.get(f"{self.base_url}/v1/health", timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendUnavailable(f"/v1/health: {exc}") from None
        if resp.status_code != 200:
            raise BackendUnavailable(f"/v1/health: status {resp.status_code}")
        payload = resp.json()
        validate_message("health_response", payload)
        return payload

    def embed(self, model: str, texts: Sequence[str]) -> list[list[float]]:
        body = {"model": model, "texts": list(texts)}
        validate_message("embed_request", body)
        payload = self._post("/v1/embed", body)
        validate_message("embed_response", payload)
        return self._check_vectors(payload, len(texts), "/v1/embed")

    def mm_embed(self, model: str, items: Sequence[dict]) -> list[list[float]]:
        body = {"model": model, "items": [dict(i) for i in items]}
        validate_message("mm_embed_request", body)
        payload = self._post("/v1/mm_embed", body)
        validate_message("mm_embed_response", payload)
        return self._check_vectors(payload, len(items), "/v1/mm_embed")

    def rerank(self, model: str, query: str, documents: Sequence[str]) -> list[float]:
        body = {"model": model, "query": query, "documents": list(documents)}
        validate_message("rerank_request", body)
        payload = self._post("/v1/rerank", body)
        validate_message("rerank_response", payload)
        scores = payload["scores"]
        if len(scores) != len(documents):
            raise BackendMalformed(
                f"/v1/rerank: {len(scores)} scores for {len(documents)} documents"
            )
        return [float(s) for s in scores]

    def generate(
        self,
        model: str,
        segments: Sequence[dict],
        max_tokens: int,
        temperature: float,
    ) -> GenerateResult:
        body = {
            "model": model,
            "segments": [dict(s) for s in segments],
            "max_tokens": max_tokens,
            "temperature": temperature,
        }
        validate_message("generate_request", body)
        payload = self._post("/v1/generate", body)
        validate_message("generate_response", payload)
        usage = payload["usage"]
        return GenerateResult(
            text=payload["text"],
            finish_reason=payload["finish_reason"],
            prompt_tokens=usage["prompt_tokens"],
            output_tokens=usage["output_tokens"],
        )

    @staticmethod
    def _check_vectors(payload: dict, expected: int, path: str) -> list[list[float]]:
        vectors = payload["vectors"]
        dim = payload["dim"]
        if len(vectors) != expected:
            raise BackendMalformed(f"{path}: {len(vectors)} vectors for {expected} inputs")
        for vec in vectors:
            if len(vec) != dim:
                raise BackendMalformed(f"{path}: vector length {len(vec)} does not match dim {dim}")
        return [[float(x) for x in vec] for vec in vectors]


def _error_detail(resp: requests.Response) -> str:
    try:
        payload = resp.json()
        err = payload.get("error", {})
        return f"{err.get('code', '?')}: {err.get('message', '')}"
    except ValueError:
        return resp.text[:200]
