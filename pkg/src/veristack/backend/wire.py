"""Wire contract shared by every model backend implementation.

The protocol is four POST endpoints plus a health probe:

    POST /v1/embed      text embedding, unit-length row per input
    POST /v1/mm_embed   multimodal embedding, one item is text xor image
    POST /v1/rerank     relevance scores in input order
    POST /v1/generate   multimodal generation from interleaved segments
    GET  /v1/health     {"status": "ok", "mode": <backend mode>}

Payload shapes live in ``data/backend_wire.json`` so that servers and
clients validate against the same schema document.
"""

from __future__ import annotations

import base64
import binascii
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import jsonschema

from ..core import ImageRef
from ..errors import BackendMalformed

WIRE_SCHEMA_RESOURCE = "backend_wire.json"

ENDPOINTS = ("embed", "mm_embed", "rerank", "generate")


@lru_cache(maxsize=1)
def load_wire_schema() -> dict:
    """Return the shared protocol schema as a plain dict."""
    text = resources.files("veristack.data").joinpath(WIRE_SCHEMA_RESOURCE).read_text("utf-8")
    return json.loads(text)


@lru_cache(maxsize=None)
def _validator(name: str) -> jsonschema.Draft202012Validator:
    schema = load_wire_schema()
    if name not in schema["$defs"]:
        raise KeyError(f"no wire message named {name!r}")
    wrapper = {"$ref": f"#/$defs/{name}", "$defs": schema["$defs"]}
    return jsonschema.Draft202012Validator(wrapper)


def validate_message(name: str, payload: object) -> None:
    """Check ``payload`` against the named wire message schema.

    Raises BackendMalformed with the first schema violation. ``name`` is a
    key of the schema's $defs, e.g. ``"embed_request"``.
    """
    errors = sorted(_validator(name).iter_errors(payload), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise BackendMalformed(f"{name} invalid at {where}: {first.message}")


@dataclass(frozen=True)
class GenerateResult:
    """Decoded /v1/generate response."""

    text: str
    finish_reason: str
    prompt_tokens: int
    output_tokens: int

    def __post_init__(self) -> None:
        if self.text == "" and self.finish_reason == "stop":
            raise BackendMalformed("empty generation with finish_reason 'stop'")


def text_segment(text: str) -> dict:
    return {"type": "text", "text": text}


def image_segment(image_bytes: bytes) -> dict:
    return {"type": "image", "image_b64": base64.b64encode(image_bytes).decode("ascii")}


def decode_image_b64(value: str) -> bytes:
    try:
        return base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise BackendMalformed(f"invalid base64 image payload: {exc}") from None


def load_image_bytes(ref: ImageRef) -> bytes:
    """Resolve an image reference to raw bytes.

    A reference whose location is an existing file is read from disk.
    Anything else (remote URL, placeholder id) deterministically falls back
    to the UTF-8 bytes of the location string itself, so offline corpora
    can use plain text files or bare ids as stand-in images.
    """
    path = Path(ref.location)
    try:
        if path.is_file():
            return path.read_bytes()
    except OSError:
        pass
    return ref.location.encode("utf-8")


@runtime_checkable
class ModelBackend(Protocol):
    """The in-process face of the wire protocol.

    Implementations must be safe to call from multiple threads.
    """

    def embed(self, model: str, texts: Sequence[str]) -> list[list[float]]: ...

    def mm_embed(self, model: str, items: Sequence[dict]) -> list[list[float]]: ...

    def rerank(self, model: str, query: str, documents: Sequence[str]) -> list[float]: ...

    def generate(
        self,
        model: str,
        segments: Sequence[dict],
        max_tokens: int,
        temperature: float,
    ) -> GenerateResult: ...
