"""Domain types, label taxonomy, and pipeline configuration.

Everything here is immutable after construction and safe to share across
worker threads.
"""

from __future__ import annotations

import dataclasses
import json
import os
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

from .errors import ConfigInvalid, LabelInvalid


class Label(Enum):
    SUPPORTED = "Supported"
    REFUTED = "Refuted"
    NOT_ENOUGH_EVIDENCE = "Not Enough Evidence"
    CONFLICTING_CHERRYPICKING = "Conflicting Evidence/Cherrypicking"

    @property
    def canonical(self) -> str:
        """Canonical label string used in prompts and submission files."""
        return self.value


_ALNUM = re.compile(r"[^a-z0-9]+")

_LABEL_BY_KEY = {
    "supported": Label.SUPPORTED,
    "refuted": Label.REFUTED,
    "notenoughevidence": Label.NOT_ENOUGH_EVIDENCE,
    "conflictingevidencecherrypicking": Label.CONFLICTING_CHERRYPICKING,
    # common shorthand seen in model outputs
    "conflictingevidence": Label.CONFLICTING_CHERRYPICKING,
    "cherrypicking": Label.CONFLICTING_CHERRYPICKING,
}


def parse_label(raw: str) -> Label:
    """Map a raw model string onto one of the four labels.

    Tolerant to case, whitespace, and punctuation; raises LabelInvalid when
    the string does not match any label unambiguously.
    """
    key = _ALNUM.sub("", raw.strip().lower())
    label = _LABEL_BY_KEY.get(key)
    if label is None:
        raise LabelInvalid(f"not a verdict label: {raw!r}")
    return label


class StoreKind(Enum):
    TEXT_QUERY_TEXT = "text_query_text"      # web text retrieved by text query
    IMAGE_QUERY_TEXT = "image_query_text"    # web text from reverse image search
    TEXT_QUERY_IMAGE = "text_query_image"    # web images retrieved by text query

    @property
    def is_textual(self) -> bool:
        return self is not StoreKind.TEXT_QUERY_IMAGE


class FillStatus(Enum):
    ORIGINAL = "original"
    FILLED = "filled"
    UNFILLABLE = "unfillable"


class Usefulness(Enum):
    USEFUL = "useful"
    EMPTY = "empty"
    GENERIC = "generic"
    RESTRICTED = "restricted"


@dataclass(frozen=True)
class ImageRef:
    id: str
    location: str                       # file path or URL
    bytes_digest: Optional[str] = None  # sha256 hex of content when known

    def __post_init__(self):
        if not self.location:
            raise ValueError("ImageRef.location must be non-empty")


@dataclass(frozen=True)
class Claim:
    id: str
    text: str
    claimant: Optional[str] = None
    date: Optional[str] = None          # ISO-8601, compared lexically
    images: tuple[ImageRef, ...] = ()
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise ValueError("Claim.id must be non-empty")
        if not self.text:
            raise ValueError("Claim.text must be non-empty")


@dataclass(frozen=True)
class StoreEntry:
    url: str
    text: Optional[str] = None
    image: Optional[ImageRef] = None
    fill_status: FillStatus = FillStatus.ORIGINAL
    usefulness: Optional[Usefulness] = None
    note: Optional[str] = None          # e.g. reason a fill attempt failed


@dataclass(frozen=True)
class KnowledgeStore:
    kind: StoreKind
    entries: tuple[StoreEntry, ...] = ()

    def __post_init__(self):
        for e in self.entries:
            if self.kind is StoreKind.TEXT_QUERY_IMAGE:
                if e.image is None:
                    raise ValueError(f"image store entry without image: {e.url}")
            elif e.image is not None:
                raise ValueError(f"textual store entry carries an image: {e.url}")


@dataclass(frozen=True)
class QAPair:
    question: str
    answer: str
    iteration: int = 1
    position: int = 1

    def __post_init__(self):
        if not self.question or not self.answer:
            raise ValueError("QAPair question and answer must be non-empty")
        if self.iteration < 1 or self.position < 1:
            raise ValueError("QAPair iteration and position start at 1")


@dataclass(frozen=True)
class QASet:
    pairs: tuple[QAPair, ...] = ()
    retries: int = 0                    # parse-repair retries spent
    deviations: tuple[int, ...] = ()    # iterations whose pair count was off

    def __post_init__(self):
        keys = [(p.iteration, p.position) for p in self.pairs]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (iteration, position) in QASet")

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class Verdict:
    label: Label
    justification: str
    selected: tuple[QAPair, ...] = ()


@dataclass(frozen=True)
class PipelineConfig:
    # retrieval
    dense_k: int = 100
    rerank_k: int = 10
    chunk_chars: int = 2048
    neighbor_span: int = 1
    visual_text_k: int = 5
    visual_per_image_k: int = 1
    bm25_k1: float = 1.5
    bm25_b: float = 0.75
    embed_batch_size: int = 32
    # agents
    qa_iterations: int = 4
    qa_per_iteration: int = 5
    fewshot_k: int = 3
    verdict_select_k: int = 10
    retry_budget: int = 2
    temperature: float = 0.0
    max_output_tokens: int = 4096
    evidence_char_cap: int = 6000
    # evaluation
    lambdas: tuple[float, ...] = (0.0, 0.3)
    judge_runs: Optional[int] = None    # None: 1 for deterministic judges, 5 otherwise
    # store filling
    min_useful_chars: int = 200
    generic_line_ratio: float = 0.5
    fetch_timeout: float = 30.0
    fill_workers: int = 8
    # backend
    backend_url: str = "http://127.0.0.1:8091"
    backend_timeout: float = 60.0
    embed_model: str = "mixedbread-ai/mxbai-embed-large-v1"
    rerank_model: str = "mixedbread-ai/mxbai-rerank-large-v1"
    mm_embed_model: str = "OpenSearch-AI/Ops-MM-embedding-v1-7B"
    generate_model: str = "gemini-2.5-pro"
    # orchestration
    cache_dir: Optional[str] = None
    train_file: Optional[str] = None


_COUNT_FIELDS = (
    "dense_k", "rerank_k", "chunk_chars", "neighbor_span", "visual_text_k",
    "visual_per_image_k", "qa_iterations", "qa_per_iteration", "fewshot_k",
    "verdict_select_k", "embed_batch_size", "max_output_tokens",
    "min_useful_chars", "fill_workers",
)


def validate_config(cfg: PipelineConfig) -> PipelineConfig:
    """Return cfg unchanged if all invariants hold, else raise ConfigInvalid."""
    for name in _COUNT_FIELDS:
        if getattr(cfg, name) < 1:
            raise ConfigInvalid(f"{name} must be >= 1")
    if cfg.retry_budget < 0:
        raise ConfigInvalid("retry_budget must be >= 0")
    if cfg.rerank_k > cfg.dense_k:
        raise ConfigInvalid("rerank_k must be <= dense_k")
    for lam in cfg.lambdas:
        if not 0.0 <= lam <= 1.0:
            raise ConfigInvalid("lambdas must lie in [0, 1]")
    if not 0.0 <= cfg.generic_line_ratio <= 1.0:
        raise ConfigInvalid("generic_line_ratio must lie in [0, 1]")
    if cfg.bm25_k1 <= 0:
        raise ConfigInvalid("bm25_k1 must be > 0")
    if not 0.0 <= cfg.bm25_b <= 1.0:
        raise ConfigInvalid("bm25_b must lie in [0, 1]")
    if cfg.fetch_timeout <= 0 or cfg.backend_timeout <= 0:
        raise ConfigInvalid("fetch_timeout and backend_timeout must be > 0")
    return cfg


def load_config(path: Optional[str] = None, overrides: Optional[Mapping] = None) -> PipelineConfig:
    """Build a validated config from defaults, an optional flat JSON file,
    environment variables, and explicit overrides (in that order).

    File keys are exactly the PipelineConfig field names. VERISTACK_CONFIG
    names the config file when no path is given; VERISTACK_BACKEND_URL
    overrides backend_url from the file.
    """
    values: dict = {}
    path = path or os.environ.get("VERISTACK_CONFIG")
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise ConfigInvalid("config file must hold a flat key-value object")
        known = {f.name for f in dataclasses.fields(PipelineConfig)}
        for key, val in doc.items():
            if key not in known:
                raise ConfigInvalid(f"unknown config key: {key}")
            values[key] = val
    env_url = os.environ.get("VERISTACK_BACKEND_URL")
    if env_url:
        values["backend_url"] = env_url
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    if "lambdas" in values:
        values["lambdas"] = tuple(values["lambdas"])
    return validate_config(PipelineConfig(**values))
