"""The three model-facing pipeline stages built on prompts and parsing.

Budgeting rule used throughout: a stage makes one model call per unit of
work on the happy path; parse failures consume the shared retry budget and
append a correction section to the reprompt rather than replaying the same
request verbatim.
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from ..backend.wire import ModelBackend
from ..core import Claim, PipelineConfig, QAPair, QASet, Verdict, parse_label
from ..errors import (
    LabelInvalid,
    ParseFailure,
    QaGenerationFailed,
    SelectedNotInSet,
    StageError,
    VerdictFailed,
)
from ..retrieval.evidence import EvidenceBundle
from .parsing import parse_qa_output, parse_verdict_output
from .prompts import (
    AgentKind,
    FewshotExample,
    PromptTemplate,
    build_analysis_prompt,
    build_qa_prompt,
    build_verdict_prompt,
)

log = logging.getLogger(__name__)

ANALYSIS_AGENTS = (AgentKind.TEXT_TEXT, AgentKind.IMAGE_TEXT, AgentKind.CROSS_MODAL)

_SECTION_RE = re.compile(r"(?m)^## \d+\. (.+)\s*$")


@dataclass(frozen=True)
class AnalysisReport:
    kind: AgentKind
    raw: str
    sections: tuple[tuple[str, str], ...]  # (title, body), best effort


def split_sections(raw: str) -> tuple[tuple[str, str], ...]:
    """Best-effort split of an analysis reply on its numbered headers."""
    matches = list(_SECTION_RE.finditer(raw))
    out = []
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(raw)
        out.append((m.group(1).strip(), raw[m.end() : end].strip()))
    return tuple(out)


def _call(backend: ModelBackend, prompt: PromptTemplate, cfg: PipelineConfig) -> str:
    result = backend.generate(
        cfg.generate_model,
        prompt.wire_segments(),
        cfg.max_output_tokens,
        cfg.temperature,
    )
    return result.text


def run_analysis_agents(
    claim: Claim, bundle: EvidenceBundle, cfg: PipelineConfig, backend: ModelBackend
) -> tuple[AnalysisReport, AnalysisReport, AnalysisReport]:
    """Run the three analysis agents concurrently; one call each.

    Analysis replies are free-form text and are taken as-is. A failure in
    any agent aborts the stage with a StageError naming that agent.
    """
    prompts = [build_analysis_prompt(kind, claim, bundle, cfg) for kind in ANALYSIS_AGENTS]
    with ThreadPoolExecutor(max_workers=len(prompts)) as pool:
        futures = [pool.submit(_call, backend, p, cfg) for p in prompts]
        reports = []
        for kind, future in zip(ANALYSIS_AGENTS, futures):
            try:
                raw = future.result()
            except Exception as exc:
                raise StageError(f"analysis:{kind.value}", exc) from exc
            reports.append(AnalysisReport(kind=kind, raw=raw, sections=split_sections(raw)))
    return reports[0], reports[1], reports[2]


def generate_qa(
    claim: Claim,
    reports: Sequence[AnalysisReport],
    fewshot: Sequence[FewshotExample],
    cfg: PipelineConfig,
    backend: ModelBackend,
) -> QASet:
    """Iterative QA generation: ``qa_iterations`` calls, each seeing all
    previously accepted pairs and asked for ``qa_per_iteration`` new ones.

    Off-count batches are accepted and recorded as deviations; unparseable
    batches are retried with a correction note until the per-iteration
    retry budget runs out, which fails the stage.
    """
    raws = [r.raw for r in reports]
    pairs: list[QAPair] = []
    deviations: list[str] = []
    retries = 0
    for iteration in range(1, cfg.qa_iterations + 1):
        repair: Optional[str] = None
        parsed = None
        for _attempt in range(cfg.retry_budget + 1):
            prompt = build_qa_prompt(claim, raws, fewshot, pairs, cfg, repair)
            reply = _call(backend, prompt, cfg)
            try:
                parsed = parse_qa_output(reply, cfg.qa_per_iteration)
                break
            except ParseFailure as exc:
                retries += 1
                repair = str(exc)
                log.debug("qa iteration %d parse failure: %s", iteration, exc)
        if parsed is None:
            raise QaGenerationFailed(
                iteration,
                f"iteration {iteration} unparseable after {cfg.retry_budget + 1} attempts: {repair}",
            )
        if parsed.count_deviation:
            deviations.append(
                f"iteration {iteration} returned {len(parsed.items)} pairs, "
                f"expected {cfg.qa_per_iteration}"
            )
        for position, (q, a) in enumerate(parsed.items, start=1):
            pairs.append(QAPair(question=q, answer=a, iteration=iteration, position=position))
    return QASet(pairs=tuple(pairs), retries=retries, deviations=tuple(deviations))


def _normalized(question: str) -> str:
    return " ".join(question.split()).casefold()


def predict_verdict(
    claim: Claim, qaset: QASet, cfg: PipelineConfig, backend: ModelBackend
) -> Verdict:
    """Final adjudication: select up to ``verdict_select_k`` pairs, pick a
    label, write a justification.

    Selections are resolved against the generated set, exact question text
    first, whitespace/case-normalized second; the canonical pair (not the
    model's echo of it) lands in the result. A selection that matches
    nothing earns one repair reprompt, then SelectedNotInSet. Unparseable
    replies and unknown labels burn the retry budget, then VerdictFailed.
    """
    by_exact: dict[str, QAPair] = {}
    by_norm: dict[str, QAPair] = {}
    for pair in qaset.pairs:
        by_exact.setdefault(pair.question, pair)
        by_norm.setdefault(_normalized(pair.question), pair)

    repair: Optional[str] = None
    select_retried = False
    last_error: Optional[Exception] = None
    for _attempt in range(cfg.retry_budget + 1):
        prompt = build_verdict_prompt(claim, qaset.pairs, cfg, repair)
        reply = _call(backend, prompt, cfg)
        try:
            parsed = parse_verdict_output(reply)
            label = parse_label(parsed.label_raw)
        except (ParseFailure, LabelInvalid) as exc:
            last_error = exc
            repair = str(exc)
            continue
        matched: list[QAPair] = []
        unknown: Optional[str] = None
        seen: set[str] = set()
        for q, _a in parsed.selected:
            pair = by_exact.get(q) or by_norm.get(_normalized(q))
            if pair is None:
                unknown = q
                break
            if pair.question in seen:  # a repeated selection adds nothing
                continue
            seen.add(pair.question)
            matched.append(pair)
        if unknown is not None:
            message = f"selected question is not among the generated pairs: {unknown[:120]!r}"
            if select_retried:
                raise SelectedNotInSet(message)
            select_retried = True
            last_error = SelectedNotInSet(message)
            repair = message
            continue
        return Verdict(
            label=label,
            justification=parsed.justification,
            selected=tuple(matched[: cfg.verdict_select_k]),
        )
    if isinstance(last_error, SelectedNotInSet):
        raise last_error
    raise VerdictFailed(
        f"no usable verdict after {cfg.retry_budget + 1} attempts: {last_error}"
    )
