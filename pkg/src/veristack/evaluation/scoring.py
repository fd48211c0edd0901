"""Gated metrics over a scored run.

The core idea: a verdict only counts when the evidence behind it holds up.
Veracity at threshold L marks an instance correct iff its label matches
gold AND its evidence score is at least L; justification at L zeroes out
instances whose evidence fails the gate. L = 0 reduces to the ungated
metric and higher thresholds are monotonically harder.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Optional, Sequence

from ..core import Label, PipelineConfig
from ..errors import EmptyInstances, MissingGold
from .judge import Judge


@dataclass(frozen=True)
class GoldRecord:
    claim_id: str
    label: Label
    pairs: tuple[tuple[str, str], ...]  # (question, answer)
    justification: str


@dataclass(frozen=True)
class PredRecord:
    claim_id: str
    label: Optional[Label]  # None when the submission label was unusable
    pairs: tuple[tuple[str, str], ...]
    justification: str


@dataclass(frozen=True)
class InstanceScore:
    claim_id: str
    question_score: float
    evidence_score: float
    label_correct: bool
    justification_score: float

    def __post_init__(self) -> None:
        for field_name in ("question_score", "evidence_score", "justification_score"):
            value = getattr(self, field_name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{field_name} must be in [0, 1], got {value}")


def score_instances(
    preds: Sequence[PredRecord], golds: Sequence[GoldRecord], judge: Judge
) -> list[InstanceScore]:
    """One InstanceScore per prediction, in prediction order.

    Every prediction must have a gold record; a missing one is an error,
    not a zero, because silently dropping instances would inflate means.
    """
    gold_by_id = {g.claim_id: g for g in golds}
    out: list[InstanceScore] = []
    for pred in preds:
        gold = gold_by_id.get(pred.claim_id)
        if gold is None:
            raise MissingGold(f"no gold record for claim {pred.claim_id!r}")
        gold_questions = [q for q, _ in gold.pairs]
        gold_answers = [a for _, a in gold.pairs]
        sys_questions = [q for q, _ in pred.pairs]
        sys_answers = [a for _, a in pred.pairs]
        out.append(
            InstanceScore(
                claim_id=pred.claim_id,
                question_score=judge.question_score(gold_questions, sys_questions),
                evidence_score=judge.evidence_score(gold_answers, sys_answers),
                label_correct=pred.label is not None and pred.label is gold.label,
                justification_score=judge.justification_score(
                    gold.justification, pred.justification
                ),
            )
        )
    return out


def _require(instances: Sequence[InstanceScore]) -> None:
    if not instances:
        raise EmptyInstances("cannot aggregate zero instances")


def question_eval(instances: Sequence[InstanceScore]) -> float:
    _require(instances)
    return sum(i.question_score for i in instances) / len(instances)


def evidence_eval(instances: Sequence[InstanceScore]) -> float:
    _require(instances)
    return sum(i.evidence_score for i in instances) / len(instances)


def veracity_at(instances: Sequence[InstanceScore], lam: float) -> float:
    """Share of instances with a correct label AND evidence >= lam."""
    _require(instances)
    hits = sum(1 for i in instances if i.label_correct and i.evidence_score >= lam)
    return hits / len(instances)


def justification_at(instances: Sequence[InstanceScore], lam: float) -> float:
    """Mean justification score with evidence-failing instances zeroed."""
    _require(instances)
    total = sum(i.justification_score for i in instances if i.evidence_score >= lam)
    return total / len(instances)


def _aggregate(values: list[float]) -> float | dict:
    if len(values) == 1:
        return values[0]
    return {"mean": statistics.fmean(values), "std": statistics.pstdev(values)}


def score_run(
    preds: Sequence[PredRecord],
    golds: Sequence[GoldRecord],
    judge: Judge,
    cfg: PipelineConfig = PipelineConfig(),
    runs: Optional[int] = None,
) -> dict:
    """Full evaluation report for one submission.

    ``runs`` repeats the judging pass (meaningful for non-deterministic
    judges) and reports mean/std per metric instead of a bare float.
    Image-grounded checks need raw gold media this harness does not carry,
    so that column is reported as skipped rather than silently scored 0.
    """
    if not preds:
        raise EmptyInstances("no predictions to score")
    n_runs = runs if runs is not None else (cfg.judge_runs or 1)
    if n_runs < 1:
        raise ValueError("runs must be >= 1")
    per_metric: dict[str, list[float]] = {"q_eval": [], "evid_eval": []}
    ver: dict[str, list[float]] = {str(lam): [] for lam in cfg.lambdas}
    jus: dict[str, list[float]] = {str(lam): [] for lam in cfg.lambdas}
    for _ in range(n_runs):
        instances = score_instances(preds, golds, judge)
        per_metric["q_eval"].append(question_eval(instances))
        per_metric["evid_eval"].append(evidence_eval(instances))
        for lam in cfg.lambdas:
            ver[str(lam)].append(veracity_at(instances, lam))
            jus[str(lam)].append(justification_at(instances, lam))
    return {
        "q_eval": _aggregate(per_metric["q_eval"]),
        "evid_eval": _aggregate(per_metric["evid_eval"]),
        "veracity": {key: _aggregate(vals) for key, vals in ver.items()},
        "justification": {key: _aggregate(vals) for key, vals in jus.items()},
        "judge": judge.name,
        "runs": n_runs,
        "instances": len(preds),
        "image_matching": "skipped",
    }
