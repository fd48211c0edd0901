"""Real-model serving: a registry of loaded checkpoints per endpoint.

A request naming a model that is not loaded is rejected with UnknownModel,
never remapped to whatever happens to be available. Loading heavyweight
checkpoints is outside the test surface; CI exercises only the registry
bookkeeping with toy callables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from veristack.backend import GenerateResult

_EMBED_MODEL = "mixedbread-ai/mxbai-embed-large-v1"
_RERANK_MODEL = "mixedbread-ai/mxbai-rerank-large-v1"

Embedder = Callable[[Sequence[str]], "list[list[float]]"]
MmEmbedder = Callable[[Sequence[dict]], "list[list[float]]"]
Reranker = Callable[[str, Sequence[str]], "list[float]"]
Generator = Callable[[Sequence[dict], int, float], GenerateResult]


class UnknownModel(LookupError):
    """Request named a model this server has not loaded."""


@dataclass
class RealModelRegistry:
    embedders: dict[str, Embedder] = field(default_factory=dict)
    mm_embedders: dict[str, MmEmbedder] = field(default_factory=dict)
    rerankers: dict[str, Reranker] = field(default_factory=dict)
    generators: dict[str, Generator] = field(default_factory=dict)

    @staticmethod
    def _lookup(table: Mapping, kind: str, model: str):
        try:
            return table[model]
        except KeyError:
            loaded = ", ".join(sorted(table)) or "none"
            raise UnknownModel(
                f"no {kind} model named {model!r} is loaded (loaded: {loaded})"
            ) from None

    def embedder(self, model: str) -> Embedder:
        return self._lookup(self.embedders, "embedding", model)

    def mm_embedder(self, model: str) -> MmEmbedder:
        return self._lookup(self.mm_embedders, "multimodal embedding", model)

    def reranker(self, model: str) -> Reranker:
        return self._lookup(self.rerankers, "rerank", model)

    def generator(self, model: str) -> Generator:
        return self._lookup(self.generators, "generation", model)


class RealBackend:
    """Backend face over a registry; every call resolves the model first."""

    mode = "real"

    def __init__(self, registry: RealModelRegistry) -> None:
        self.registry = registry

    def embed(self, model: str, texts: Sequence[str]) -> list[list[float]]:
        return self.registry.embedder(model)(texts)

    def mm_embed(self, model: str, items: Sequence[dict]) -> list[list[float]]:
        return self.registry.mm_embedder(model)(items)

    def rerank(self, model: str, query: str, documents: Sequence[str]) -> list[float]:
        return self.registry.reranker(model)(query, documents)

    def generate(
        self, model: str, segments: Sequence[dict], max_tokens: int, temperature: float
    ) -> GenerateResult:
        return self.registry.generator(model)(segments, max_tokens, temperature)


def load_default_registry() -> RealModelRegistry:
    """Load the embed/rerank checkpoints when their runtime is installed.

    Generation and multimodal embedding have no local serving path here
    (the reference generation model is API-hosted), so those tables stay
    empty and requests for them are rejected explicitly.
    """
    try:
        from sentence_transformers import CrossEncoder, SentenceTransformer
    except ImportError as exc:
        raise RuntimeError(
            "real mode needs the sentence-transformers package and model "
            "checkpoints; install it or run --mode stub"
        ) from exc

    embedder = SentenceTransformer(_EMBED_MODEL)
    cross = CrossEncoder(_RERANK_MODEL)

    def embed(texts: Sequence[str]) -> list[list[float]]:
        rows = embedder.encode(list(texts), normalize_embeddings=True)
        return [[float(x) for x in row] for row in rows]

    def rerank(query: str, documents: Sequence[str]) -> list[float]:
        return [float(s) for s in cross.predict([(query, d) for d in documents])]

    return RealModelRegistry(
        embedders={_EMBED_MODEL: embed},
        rerankers={_RERANK_MODEL: rerank},
    )
