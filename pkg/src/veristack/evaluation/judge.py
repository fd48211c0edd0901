"""Judges that grade system output against gold annotations.

Every judge maps onto three scores in [0, 1]: question coverage, evidence
(answer) coverage, and justification similarity. The lexical judge is the
deterministic default; the backend judge delegates grading to a model and
is therefore only as reproducible as that model.
"""

from __future__ import annotations

import re
from typing import Protocol, Sequence

from ..backend.wire import ModelBackend
from ..retrieval.bm25 import tokenize


def token_set_f1(gold: str, system: str) -> float:
    """F1 over the two texts' token sets (duplicates ignored)."""
    g, s = set(tokenize(gold)), set(tokenize(system))
    if not g and not s:
        return 1.0
    if not g or not s:
        return 0.0
    overlap = len(g & s)
    if overlap == 0:
        return 0.0
    precision = overlap / len(s)
    recall = overlap / len(g)
    return 2 * precision * recall / (precision + recall)


def lexical_recall(gold_items: Sequence[str], system_items: Sequence[str]) -> float:
    """Mean over gold items of the best token-set F1 any system item achieves.

    No gold items means there is nothing to recall (scores 1.0); gold items
    with no system output scores 0.0.
    """
    if not gold_items:
        return 1.0
    if not system_items:
        return 0.0
    total = 0.0
    for g in gold_items:
        total += max(token_set_f1(g, s) for s in system_items)
    return total / len(gold_items)


class Judge(Protocol):
    name: str

    def question_score(self, gold: Sequence[str], system: Sequence[str]) -> float: ...

    def evidence_score(self, gold: Sequence[str], system: Sequence[str]) -> float: ...

    def justification_score(self, gold: str, system: str) -> float: ...


class LexicalJudge:
    """Deterministic fallback judge built on token-set overlap."""

    name = "lexical"

    def question_score(self, gold: Sequence[str], system: Sequence[str]) -> float:
        return lexical_recall(gold, system)

    def evidence_score(self, gold: Sequence[str], system: Sequence[str]) -> float:
        return lexical_recall(gold, system)

    def justification_score(self, gold: str, system: str) -> float:
        return token_set_f1(gold, system)


_NUMBER_RE = re.compile(r"(?<![\w.])(?:0(?:\.\d+)?|1(?:\.0+)?)(?![\w.])")

_JUDGE_PROMPT = """# Role
You are a strict grader comparing system output against a reference.

# Reference
{gold}

# Candidate
{system}

# Instructions
Rate how completely the candidate covers the substance of the reference,
ignoring wording differences. Reply with a single number between 0 and 1
and nothing else."""


class BackendJudge:
    """Model-graded judge over /v1/generate; scores are clamped to [0, 1].

    A reply with no parseable number counts as 0 rather than failing the
    evaluation run.
    """

    name = "backend"

    def __init__(self, backend: ModelBackend, model: str, max_tokens: int = 64) -> None:
        self.backend = backend
        self.model = model
        self.max_tokens = max_tokens

    def _grade(self, gold: str, system: str) -> float:
        prompt = _JUDGE_PROMPT.format(gold=gold, system=system)
        result = self.backend.generate(
            self.model, [{"type": "text", "text": prompt}], self.max_tokens, 0.0
        )
        m = _NUMBER_RE.search(result.text)
        if not m:
            return 0.0
        return min(1.0, max(0.0, float(m.group(0))))

    def question_score(self, gold: Sequence[str], system: Sequence[str]) -> float:
        if not gold:
            return 1.0
        if not system:
            return 0.0
        return self._grade("\n".join(gold), "\n".join(system))

    def evidence_score(self, gold: Sequence[str], system: Sequence[str]) -> float:
        if not gold:
            return 1.0
        if not system:
            return 0.0
        return self._grade("\n".join(gold), "\n".join(system))

    def justification_score(self, gold: str, system: str) -> float:
        if not gold.strip():
            return 1.0
        if not system.strip():
            return 0.0
        return self._grade(gold, system)
