"""Evaluation: judges and gated metrics."""

from .judge import BackendJudge, Judge, LexicalJudge, lexical_recall, token_set_f1
from .scoring import (
    GoldRecord,
    InstanceScore,
    PredRecord,
    evidence_eval,
    justification_at,
    question_eval,
    score_instances,
    score_run,
    veracity_at,
)

__all__ = [
    "BackendJudge",
    "GoldRecord",
    "InstanceScore",
    "Judge",
    "LexicalJudge",
    "PredRecord",
    "evidence_eval",
    "justification_at",
    "lexical_recall",
    "question_eval",
    "score_instances",
    "score_run",
    "token_set_f1",
    "veracity_at",
]
