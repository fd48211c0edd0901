"""Pipeline orchestration: staging, caching, batching, file formats."""

from .io import (
    load_claim_stores,
    load_claims,
    load_exemplars,
    load_gold,
    load_store_file,
    parse_submission,
    save_store_file,
    store_path,
    submission_record,
    write_results,
    write_submission,
)
from .pipeline import STAGES, ClaimResult, FewshotSelector, run_batch, run_pipeline
from .stagecache import StageCache

__all__ = [
    "STAGES",
    "ClaimResult",
    "FewshotSelector",
    "StageCache",
    "load_claim_stores",
    "load_claims",
    "load_exemplars",
    "load_gold",
    "load_store_file",
    "parse_submission",
    "run_batch",
    "run_pipeline",
    "save_store_file",
    "store_path",
    "submission_record",
    "write_results",
    "write_submission",
]
