"""HTTP serving layer for the model-backend wire protocol.

Stub mode wraps the pipeline package's in-process reference backend, so a
run against this server is byte-identical to a run against the local stub:
this layer only moves JSON, it adds no behavior of its own. Every request
and response is validated against the shared schema document; a response
that fails the schema is a server bug and surfaces as a 500, never as a 200.

Handlers are stateless and the stub shares only immutable rule tables, so
concurrent requests are safe by construction.
"""

from __future__ import annotations

import logging
from functools import lru_cache
from typing import Optional

import jsonschema
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException

from veristack.backend import StubBackend, StubState, load_wire_schema
from veristack.errors import BackendMalformed

from .real import RealBackend, RealModelRegistry, UnknownModel

log = logging.getLogger(__name__)

# endpoint name -> (request message, response message) in the shared schema
_MESSAGES = {
    "embed": ("embed_request", "embed_response"),
    "mm_embed": ("mm_embed_request", "mm_embed_response"),
    "rerank": ("rerank_request", "rerank_response"),
    "generate": ("generate_request", "generate_response"),
}

_STATUS_CODES = {400: "bad_request", 404: "not_found", 405: "method_not_allowed"}


@lru_cache(maxsize=None)
def _validator(name: str) -> jsonschema.Draft202012Validator:
    defs = load_wire_schema()["$defs"]
    return jsonschema.Draft202012Validator({"$ref": f"#/$defs/{name}", "$defs": defs})


def _first_violation(name: str, payload: object) -> Optional[str]:
    errors = sorted(_validator(name).iter_errors(payload), key=lambda e: list(e.absolute_path))
    if not errors:
        return None
    where = "/".join(str(p) for p in errors[0].absolute_path) or "<root>"
    return f"{where}: {errors[0].message}"


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"error": {"code": code, "message": message}}, status_code=status)


def _call(backend, endpoint: str, body: dict) -> dict:
    if endpoint == "embed":
        vectors = backend.embed(body["model"], body["texts"])
        return {"vectors": vectors, "dim": len(vectors[0])}
    if endpoint == "mm_embed":
        vectors = backend.mm_embed(body["model"], body["items"])
        return {"vectors": vectors, "dim": len(vectors[0])}
    if endpoint == "rerank":
        return {"scores": backend.rerank(body["model"], body["query"], body["documents"])}
    result = backend.generate(
        body["model"], body["segments"], body["max_tokens"], body["temperature"]
    )
    return {
        "text": result.text,
        "finish_reason": result.finish_reason,
        "usage": {
            "prompt_tokens": result.prompt_tokens,
            "output_tokens": result.output_tokens,
        },
    }


def build_app(
    mode: str = "stub",
    *,
    state: StubState | None = None,
    registry: RealModelRegistry | None = None,
) -> FastAPI:
    """Construct the service for one mode.

    Stub mode serves the deterministic reference rules (optionally with a
    custom StubState); real mode serves whatever the registry has loaded
    and rejects every other model name.
    """
    if mode == "stub":
        backend = StubBackend(state)
    elif mode == "real":
        backend = RealBackend(registry or RealModelRegistry())
    else:
        raise ValueError(f"unknown mode {mode!r}")

    app = FastAPI(title="model backend", docs_url=None, redoc_url=None, openapi_url=None)

    @app.exception_handler(HTTPException)
    async def _protocol_shaped(request: Request, exc: HTTPException) -> JSONResponse:
        # Router-level failures (unknown path, wrong method) keep the wire
        # error shape so clients never see a second error format.
        code = _STATUS_CODES.get(exc.status_code, "bad_request")
        return _error(exc.status_code, code, str(exc.detail))

    async def _dispatch(request: Request, endpoint: str) -> JSONResponse:
        req_name, resp_name = _MESSAGES[endpoint]
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_request", "request body is not valid JSON")
        violation = _first_violation(req_name, body)
        if violation is not None:
            return _error(400, "bad_request", f"{req_name} invalid at {violation}")
        try:
            payload = _call(backend, endpoint, body)
        except UnknownModel as exc:
            return _error(400, "unknown_model", str(exc))
        except BackendMalformed as exc:
            return _error(400, "bad_request", str(exc))
        violation = _first_violation(resp_name, payload)
        if violation is not None:
            log.error("%s response violates wire schema: %s", endpoint, violation)
            return _error(500, "internal", "response failed schema self-check")
        return JSONResponse(payload)

    @app.get("/v1/health")
    async def health() -> JSONResponse:
        return JSONResponse({"status": "ok", "mode": mode})

    @app.post("/v1/embed")
    async def embed(request: Request) -> JSONResponse:
        return await _dispatch(request, "embed")

    @app.post("/v1/mm_embed")
    async def mm_embed(request: Request) -> JSONResponse:
        return await _dispatch(request, "mm_embed")

    @app.post("/v1/rerank")
    async def rerank(request: Request) -> JSONResponse:
        return await _dispatch(request, "rerank")

    @app.post("/v1/generate")
    async def generate(request: Request) -> JSONResponse:
        return await _dispatch(request, "generate")

    return app
