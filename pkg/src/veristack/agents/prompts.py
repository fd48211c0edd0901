"""Prompt construction for the five model-facing stages.

Prompts are built as segment lists so images ride along as real inputs
rather than as file names: a text segment carries literal prompt text, an
image segment carries the image plus the inline tag ([CLAIM_IMG_n] or
[RETRIEVED_IMG_n]) that names it in the surrounding text. ``text()``
renders the tag view (used for hashing, logging and the offline stub);
``wire_segments()`` renders the backend request.

Header strings are load-bearing: downstream parsing and the offline stub
key off them, so they are defined once here and exported via
REQUIRED_HEADERS for conformance checks.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union
from urllib.parse import urlsplit

from ..backend.wire import load_image_bytes
from ..core import Claim, ImageRef, PipelineConfig, QAPair
from ..errors import MissingEvidenceSet
from ..retrieval.chunking import TextEvidenceItem
from ..retrieval.evidence import EvidenceBundle, ImageEvidenceItem


class AgentKind(Enum):
    TEXT_TEXT = "text_text"
    IMAGE_TEXT = "image_text"
    CROSS_MODAL = "cross_modal"
    QA_GENERATION = "qa_generation"
    VERDICT = "verdict"


@dataclass(frozen=True)
class TextSegment:
    text: str


@dataclass(frozen=True)
class ClaimImageSegment:
    number: int  # 1-based position among the claim's images
    ref: ImageRef

    @property
    def tag(self) -> str:
        return f"[CLAIM_IMG_{self.number}]"


@dataclass(frozen=True)
class RetrievedImageSegment:
    number: int  # 1-based position among retrieved images
    ref: ImageRef

    @property
    def tag(self) -> str:
        return f"[RETRIEVED_IMG_{self.number}]"


Segment = Union[TextSegment, ClaimImageSegment, RetrievedImageSegment]


@dataclass(frozen=True)
class PromptTemplate:
    agent_kind: AgentKind
    segments: tuple[Segment, ...]

    def text(self) -> str:
        """Flat rendering with image tags inline."""
        parts = []
        for seg in self.segments:
            parts.append(seg.text if isinstance(seg, TextSegment) else seg.tag)
        return "".join(parts)

    def wire_segments(self) -> list[dict]:
        """Request segments for /v1/generate; adjacent text is merged."""
        out: list[dict] = []

        def push_text(text: str) -> None:
            if out and out[-1]["type"] == "text":
                out[-1]["text"] += text
            elif text:
                out.append({"type": "text", "text": text})

        for seg in self.segments:
            if isinstance(seg, TextSegment):
                push_text(seg.text)
            else:
                # The tag stays in the text stream right before the image so
                # the model can refer back to it by name.
                push_text(seg.tag + " ")
                data = load_image_bytes(seg.ref)
                out.append({"type": "image", "image_b64": base64.b64encode(data).decode("ascii")})
        if not out:
            out.append({"type": "text", "text": ""})
        return out


@dataclass(frozen=True)
class FewshotExample:
    claim_text: str
    pairs: tuple[tuple[str, str], ...]  # (question, answer)


H_ROLE = "# Role"
H_INPUT = "# Input Data"
H_CLAIM = "## 1. The Claim (Target for Verification)"
H_EVIDENCE = "## 2. Retrieved Evidence"
H_EVIDENCE_ALL = "## 2. All Retrieved Evidence"
H_ANALYSES = "## 2. Preliminary Analyses"
H_FEWSHOT = "## 3. Few-shot Learning Examples"
H_HISTORY = "## 4. Previously Generated QA Pairs"
H_QA_LIST = "## 2. Generated Question-Answer Pairs"
H_INSTRUCTIONS = "# Instructions"
H_OUTPUT = "# Output Format"
H_OUTPUT_JSON = "# Output Format (JSON Only)"

TT_SECTIONS = ("## 1. Key Verification Facts", "## 2. Missing Information", "## 3. Analysis")
IT_SECTIONS = ("## 1. Visual-Text Corroboration", "## 2. Missing Context", "## 3. Analysis")
CM_SECTIONS = ("## 1. Evidence Consistency Check", "## 2. Global Context Summary", "## 3. Conflict Alert")

NO_TEXT_SOURCES = "(no sources retrieved)"
NO_IMAGES = "(no images retrieved)"
NO_EXAMPLES = "(no examples available)"
NO_HISTORY = "(none yet)"

# Everything a given prompt kind must contain, used by conformance tests.
REQUIRED_HEADERS: dict[AgentKind, tuple[str, ...]] = {
    AgentKind.TEXT_TEXT: (
        H_ROLE, H_INPUT, H_CLAIM, H_EVIDENCE, H_INSTRUCTIONS, H_OUTPUT, *TT_SECTIONS,
    ),
    AgentKind.IMAGE_TEXT: (
        H_ROLE, H_INPUT, H_CLAIM, H_EVIDENCE, H_INSTRUCTIONS, H_OUTPUT, *IT_SECTIONS,
    ),
    AgentKind.CROSS_MODAL: (
        H_ROLE, H_INPUT, H_CLAIM, H_EVIDENCE_ALL, H_INSTRUCTIONS, H_OUTPUT, *CM_SECTIONS,
    ),
    AgentKind.QA_GENERATION: (
        H_ROLE, H_INPUT, H_CLAIM, H_ANALYSES, H_FEWSHOT, H_HISTORY, H_INSTRUCTIONS, H_OUTPUT_JSON,
    ),
    AgentKind.VERDICT: (
        H_ROLE, H_INPUT, H_CLAIM, H_QA_LIST, H_INSTRUCTIONS, H_OUTPUT_JSON,
    ),
}


def _one_line(text: str) -> str:
    return " ".join(text.split())


def _domain(url: str) -> str:
    try:
        host = urlsplit(url).hostname
    except ValueError:
        host = None
    if not host:
        return "unknown"
    host = host.lower()
    return host[4:] if host.startswith("www.") else host


def _claim_segments(claim: Claim) -> list[Segment]:
    head = (
        f"{H_INPUT}\n"
        f"{H_CLAIM}\n"
        f"- **Claimant (Speaker):** {claim.claimant or 'Unknown'}\n"
        f"- **Claim Date:** {claim.date or 'Unknown'}\n"
        f"- **Claim Text:** {_one_line(claim.text)}\n"
        "- **Claim Images:** "
    )
    segs: list[Segment] = [TextSegment(head)]
    if claim.images:
        for n, ref in enumerate(claim.images, start=1):
            if n > 1:
                segs.append(TextSegment(" "))
            segs.append(ClaimImageSegment(n, ref))
    else:
        segs.append(TextSegment("(none)"))
    segs.append(TextSegment("\n"))
    return segs


def _evidence_block(items: Sequence[TextEvidenceItem], cap: int) -> str:
    if not items:
        return NO_TEXT_SOURCES
    lines = []
    for n, item in enumerate(items, start=1):
        text = _one_line(item.combined_text)
        if len(text) > cap:
            text = text[:cap] + "..."
        lines.append(f"[{n}] ({_domain(item.center.doc_url)}) {text}")
    return "\n".join(lines)


def _fewshot_block(examples: Sequence[FewshotExample]) -> str:
    if not examples:
        return NO_EXAMPLES
    parts = []
    for n, ex in enumerate(examples, start=1):
        payload = json.dumps(
            {"qa_pairs": [{"question": q, "answer": a} for q, a in ex.pairs]},
            ensure_ascii=False,
        )
        parts.append(f"### Example {n}\nClaim: {_one_line(ex.claim_text)}\n{payload}")
    return "\n\n".join(parts)


def _history_block(history: Sequence[QAPair]) -> str:
    if not history:
        return NO_HISTORY
    lines = []
    for n, pair in enumerate(history, start=1):
        lines.append(f"{n}. Q: {_one_line(pair.question)}\n   A: {_one_line(pair.answer)}")
    return "\n".join(lines)


def _qa_listing(pairs: Sequence[QAPair]) -> str:
    if not pairs:
        return "(no question-answer pairs were generated)"
    lines = []
    for n, pair in enumerate(pairs, start=1):
        lines.append(f"{n}. **Q:** {_one_line(pair.question)}\n   **A:** {_one_line(pair.answer)}")
    return "\n".join(lines)


def _repair_block(note: Optional[str]) -> str:
    if not note:
        return ""
    return (
        "\n\n# Correction Required\n"
        f"Your previous reply could not be used: {_one_line(note)}\n"
        "Reply again and follow the Output Format exactly."
    )


def build_analysis_prompt(
    kind: AgentKind, claim: Claim, bundle: EvidenceBundle, cfg: PipelineConfig
) -> PromptTemplate:
    """Prompt for one of the three evidence-analysis agents."""
    if kind is AgentKind.TEXT_TEXT:
        return _text_text_prompt(claim, bundle, cfg)
    if kind is AgentKind.IMAGE_TEXT:
        return _image_text_prompt(claim, bundle, cfg)
    if kind is AgentKind.CROSS_MODAL:
        return _cross_modal_prompt(claim, bundle, cfg)
    raise ValueError(f"{kind} is not an analysis agent")


def _text_text_prompt(claim: Claim, bundle: EvidenceBundle, cfg: PipelineConfig) -> PromptTemplate:
    if bundle.text_text is None:
        raise MissingEvidenceSet("text-query evidence set is absent from the bundle")
    segs: list[Segment] = [
        TextSegment(
            f"{H_ROLE}\n"
            "You are an expert AI Fact-Checker. Your specific task is to verify the "
            "**textual assertions** of a claim using the provided text-based evidence "
            "sources, retrieved by searching with the claim text.\n\n"
        )
    ]
    segs.extend(_claim_segments(claim))
    segs.append(
        TextSegment(
            "\n*(Note: Use the claim images for context, but focus your verification "
            "on the text.)*\n\n"
            f"{H_EVIDENCE}\n"
            "- **Retrieved Text Sources:**\n"
            f"{_evidence_block(bundle.text_text, cfg.evidence_char_cap)}\n\n"
            f"{H_INSTRUCTIONS}\n"
            "1. **Contextual Understanding:** Analyze the Claim Text together with the "
            "Claim Images to fully understand what is being asserted.\n"
            "2. **Textual Verification:** Compare the factual assertions of the Claim "
            "Text against the Retrieved Text Sources. Look for factual support "
            "(dates, names, numbers, events) and for contradictions or logical "
            "inconsistencies.\n"
            "3. **Identify Information Gaps:** State explicitly what information the "
            "sources do not provide that would be needed to verify the claim fully.\n\n"
            f"{H_OUTPUT}\n"
            f"{TT_SECTIONS[0]}\n"
            "* [Fact]: (Evidence from the sources supporting or refuting the claim text)\n\n"
            f"{TT_SECTIONS[1]}\n"
            "* [Gap]: (Crucial information missing from the sources)\n\n"
            f"{TT_SECTIONS[2]}\n"
            "(A concise summary of how the text sources align with the claim text)"
        )
    )
    return PromptTemplate(AgentKind.TEXT_TEXT, tuple(segs))


def _image_text_prompt(claim: Claim, bundle: EvidenceBundle, cfg: PipelineConfig) -> PromptTemplate:
    if bundle.image_text is None:
        raise MissingEvidenceSet("image-query evidence set is absent from the bundle")
    segs: list[Segment] = [
        TextSegment(
            f"{H_ROLE}\n"
            "You are an expert AI Fact-Checker. Your specific task is to verify the "
            "claim using text sources that were retrieved by reverse-searching the "
            "claim's images, checking whether what the images show is being described "
            "truthfully.\n\n"
        )
    ]
    segs.extend(_claim_segments(claim))
    segs.append(
        TextSegment(
            "\n"
            f"{H_EVIDENCE}\n"
            "- **Text Sources Found via the Claim Images:**\n"
            f"{_evidence_block(bundle.image_text, cfg.evidence_char_cap)}\n\n"
            f"{H_INSTRUCTIONS}\n"
            "1. **Visual Grounding:** Determine what the claim images actually depict, "
            "using the retrieved sources that discuss these images.\n"
            "2. **Corroboration Check:** Compare how the claim uses the images against "
            "how the sources describe them. Watch for miscaptioning, staging, or "
            "images reused from unrelated events.\n"
            "3. **Identify Missing Context:** State what context about the images the "
            "sources leave unresolved (original date, place, or circumstances).\n\n"
            f"{H_OUTPUT}\n"
            f"{IT_SECTIONS[0]}\n"
            "* [Point]: (How the sources corroborate or contradict the image-text pairing)\n\n"
            f"{IT_SECTIONS[1]}\n"
            "* [Gap]: (Context about the images the sources do not settle)\n\n"
            f"{IT_SECTIONS[2]}\n"
            "(A concise summary of whether the images support the claim as stated)"
        )
    )
    return PromptTemplate(AgentKind.IMAGE_TEXT, tuple(segs))


def _cross_modal_prompt(claim: Claim, bundle: EvidenceBundle, cfg: PipelineConfig) -> PromptTemplate:
    if bundle.text_text is None or bundle.image_text is None or bundle.images is None:
        raise MissingEvidenceSet("cross-modal analysis needs all three evidence sets")
    segs: list[Segment] = [
        TextSegment(
            f"{H_ROLE}\n"
            "You are an expert AI Fact-Checker specializing in cross-modal consistency. "
            "Your task is to judge whether the textual and visual evidence tell one "
            "coherent story about the claim, or contradict each other.\n\n"
        )
    ]
    segs.extend(_claim_segments(claim))
    segs.append(
        TextSegment(
            "\n"
            f"{H_EVIDENCE_ALL}\n"
            "- **Text Sources (found via claim text):**\n"
            f"{_evidence_block(bundle.text_text, cfg.evidence_char_cap)}\n"
            "- **Text Sources (found via claim images):**\n"
            f"{_evidence_block(bundle.image_text, cfg.evidence_char_cap)}\n"
            "- **Retrieved Images:**\n"
        )
    )
    if bundle.images:
        for n, item in enumerate(bundle.images, start=1):
            segs.append(RetrievedImageSegment(n, item.image))
            segs.append(TextSegment(f" (from {_domain(item.source_url)})\n"))
    else:
        segs.append(TextSegment(NO_IMAGES + "\n"))
    segs.append(
        TextSegment(
            "\n"
            f"{H_INSTRUCTIONS}\n"
            "1. **Pairwise Consistency:** Check text sources against each other, the "
            "retrieved images against the text sources, and the retrieved images "
            "against the claim images.\n"
            "2. **Global Reading:** Summarize the overall picture the combined "
            "evidence paints around the claim.\n"
            "3. **Flag Conflicts:** Call out any pair of evidence items that cannot "
            "both be true, or any sign the visual material is unrelated to the "
            "events the text describes.\n\n"
            f"{H_OUTPUT}\n"
            f"{CM_SECTIONS[0]}\n"
            "* [Text-Text]: (Agreement or disagreement among the text sources)\n"
            "* [Image-Text]: (Whether the images match what the text describes)\n"
            "* [Image-Image]: (Whether retrieved images and claim images show the same thing)\n\n"
            f"{CM_SECTIONS[1]}\n"
            "(The coherent story the evidence tells, if any)\n\n"
            f"{CM_SECTIONS[2]}\n"
            "* [Conflict]: (Specific contradictions, or none detected)"
        )
    )
    return PromptTemplate(AgentKind.CROSS_MODAL, tuple(segs))


def build_qa_prompt(
    claim: Claim,
    reports: Sequence[str],
    fewshot: Sequence[FewshotExample],
    history: Sequence[QAPair],
    cfg: PipelineConfig,
    repair_note: Optional[str] = None,
) -> PromptTemplate:
    """Prompt for one QA-generation iteration.

    ``reports`` are the three analysis outputs in agent order; ``history``
    holds every pair produced by earlier iterations, which the model is
    told not to repeat.
    """
    if len(reports) != 3:
        raise ValueError(f"expected 3 analysis reports, got {len(reports)}")
    segs: list[Segment] = [
        TextSegment(
            f"{H_ROLE}\n"
            "You are an expert fact-checking analyst. Your task is to distill the "
            "forensic reports below into decisive question-answer pairs that will "
            "serve as the reasoning basis for a final verdict.\n\n"
        )
    ]
    segs.extend(_claim_segments(claim))
    reports_block = "\n\n".join(
        f"[Agent {n} Output]:\n{raw}" for n, raw in enumerate(reports, start=1)
    )
    segs.append(
        TextSegment(
            "\n"
            f"{H_ANALYSES}\n"
            f"{reports_block}\n\n"
            f"{H_FEWSHOT}\n"
            f"{_fewshot_block(fewshot)}\n\n"
            f"{H_HISTORY}\n"
            "*(Do NOT repeat these or ask near-duplicate questions.)*\n"
            f"{_history_block(history)}\n\n"
            f"{H_INSTRUCTIONS}\n"
            "## Synthesize Diagnostic QAs (The Reasoning Basis)\n"
            "Analyze the provided reports to extract the core information needed to "
            f"predict the verdict. Formulate **{cfg.qa_per_iteration} high-impact QA pairs** that:\n"
            "- **Isolate Key Evidence:** Focus on the dates, locations, inconsistencies "
            "or manipulation traces that act as smoking guns.\n"
            "- **Resolve Ambiguity:** Ask and answer the questions that decide whether "
            "the evidence is sufficient or conflicting.\n"
            "- **Serve as Proof:** Each answer must work as a logical premise for the "
            "final decision.\n\n"
            f"{H_OUTPUT_JSON}\n"
            '{"qa_pairs": [{"question": "<Question 1>", "answer": "<Full statement answer 1>"}, '
            '{"question": "<Question 2>", "answer": "<Full statement answer 2>"}]}'
            f"{_repair_block(repair_note)}"
        )
    )
    return PromptTemplate(AgentKind.QA_GENERATION, tuple(segs))


def build_verdict_prompt(
    claim: Claim,
    pairs: Sequence[QAPair],
    cfg: PipelineConfig,
    repair_note: Optional[str] = None,
) -> PromptTemplate:
    """Prompt for the final selection-and-verdict stage."""
    segs: list[Segment] = [
        TextSegment(
            f"{H_ROLE}\n"
            "You are the Lead Fact-Checking Adjudicator. Your task is to select the "
            "most relevant question-answer pairs, assess the claim's veracity, and "
            "deliver a final verdict with a justification.\n\n"
        )
    ]
    segs.extend(_claim_segments(claim))
    segs.append(
        TextSegment(
            "\n"
            f"{H_QA_LIST}\n"
            f"{_qa_listing(pairs)}\n\n"
            f"{H_INSTRUCTIONS}\n"
            f"1. **Select Best QA Pairs:** From the pairs above, select the "
            f"**{cfg.verdict_select_k} most relevant and informative** pairs for "
            "verification. Copy each selected question verbatim.\n"
            "2. **Determine the Verdict:** Choose exactly one label:\n"
            "   - **Supported**\n"
            "   - **Refuted**\n"
            "   - **Not Enough Evidence**\n"
            "   - **Conflicting Evidence/Cherrypicking**\n"
            "3. **Write the Justification:** A cohesive explanation of the verdict "
            "grounded in the selected pairs.\n"
            "4. **JSON Output:** Reply with ONLY a valid JSON object in the format below.\n\n"
            f"{H_OUTPUT_JSON}\n"
            '{"questions": [{"question": "<Selected question 1>", "answer": "<Answer 1>"}], '
            '"veracity_verdict": "<Supported | Refuted | Not Enough Evidence | '
            'Conflicting Evidence/Cherrypicking>", "justification": "<Explanation>"}'
            f"{_repair_block(repair_note)}"
        )
    )
    return PromptTemplate(AgentKind.VERDICT, tuple(segs))
