"""Model-facing stages: analysis agents, QA generation, verdict."""

from .parsing import ParsedQa, ParsedVerdict, extract_json_object, parse_qa_output, parse_verdict_output
from .prompts import (
    REQUIRED_HEADERS,
    AgentKind,
    ClaimImageSegment,
    FewshotExample,
    PromptTemplate,
    RetrievedImageSegment,
    TextSegment,
    build_analysis_prompt,
    build_qa_prompt,
    build_verdict_prompt,
)
from .stages import (
    ANALYSIS_AGENTS,
    AnalysisReport,
    generate_qa,
    predict_verdict,
    run_analysis_agents,
    split_sections,
)

__all__ = [
    "ANALYSIS_AGENTS",
    "AgentKind",
    "AnalysisReport",
    "ClaimImageSegment",
    "FewshotExample",
    "ParsedQa",
    "ParsedVerdict",
    "PromptTemplate",
    "REQUIRED_HEADERS",
    "RetrievedImageSegment",
    "TextSegment",
    "build_analysis_prompt",
    "build_qa_prompt",
    "build_verdict_prompt",
    "extract_json_object",
    "generate_qa",
    "parse_qa_output",
    "parse_verdict_output",
    "predict_verdict",
    "run_analysis_agents",
    "split_sections",
]
