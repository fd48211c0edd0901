"""Multi-agent multimodal fact verification over offline knowledge stores."""

from .core import (
    Claim,
    FillStatus,
    ImageRef,
    KnowledgeStore,
    Label,
    PipelineConfig,
    QAPair,
    QASet,
    StoreEntry,
    StoreKind,
    Usefulness,
    Verdict,
    load_config,
    parse_label,
    validate_config,
)

__version__ = "0.1.0"

__all__ = [
    "Claim",
    "FillStatus",
    "ImageRef",
    "KnowledgeStore",
    "Label",
    "PipelineConfig",
    "QAPair",
    "QASet",
    "StoreEntry",
    "StoreKind",
    "Usefulness",
    "Verdict",
    "__version__",
    "load_config",
    "parse_label",
    "validate_config",
]
