"""Tolerant decoding of model replies into structured stage outputs.

Models wrap JSON in prose and code fences; the scanner here pulls out the
first parseable JSON object rather than demanding a pristine reply. Shape
errors surface as ParseFailure with a message specific enough to feed back
into a repair prompt.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from ..errors import ParseFailure

_FENCE_RE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


def _balanced_objects(text: str):
    """Yield every top-level {...} span, honoring strings and escapes."""
    depth = 0
    start = -1
    in_str = False
    escaped = False
    for i, ch in enumerate(text):
        if in_str:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_str = False
            continue
        if ch == '"':
            if depth:
                in_str = True
            continue
        if ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth:
            depth -= 1
            if depth == 0:
                yield text[start : i + 1]


def extract_json_object(raw: str) -> dict:
    """First JSON object found in ``raw``, fenced or bare."""
    candidates = _FENCE_RE.findall(raw)
    candidates.append(raw)
    for blob in candidates:
        for span in _balanced_objects(blob):
            try:
                obj = json.loads(span)
            except ValueError:
                continue
            if isinstance(obj, dict):
                return obj
    raise ParseFailure("no JSON object found in the reply")


@dataclass(frozen=True)
class ParsedQa:
    items: tuple[tuple[str, str], ...]  # (question, answer)
    count_deviation: bool


def parse_qa_output(raw: str, expected: int) -> ParsedQa:
    """Decode a QA-generation reply.

    The object must carry a non-empty ``qa_pairs`` list of objects with
    non-empty string ``question`` and ``answer``. A pair count other than
    ``expected`` is flagged, not rejected.
    """
    obj = extract_json_object(raw)
    pairs = obj.get("qa_pairs")
    if not isinstance(pairs, list) or not pairs:
        raise ParseFailure('reply lacks a non-empty "qa_pairs" list')
    items: list[tuple[str, str]] = []
    for i, row in enumerate(pairs):
        if not isinstance(row, dict):
            raise ParseFailure(f"qa_pairs[{i}] is not an object")
        q, a = row.get("question"), row.get("answer")
        if not isinstance(q, str) or not q.strip():
            raise ParseFailure(f"qa_pairs[{i}] has no usable question")
        if not isinstance(a, str) or not a.strip():
            raise ParseFailure(f"qa_pairs[{i}] has no usable answer")
        items.append((q.strip(), a.strip()))
    return ParsedQa(items=tuple(items), count_deviation=len(items) != expected)


@dataclass(frozen=True)
class ParsedVerdict:
    label_raw: str
    justification: str
    selected: tuple[tuple[str, str], ...]  # (question, answer) as echoed


def parse_verdict_output(raw: str) -> ParsedVerdict:
    """Decode a verdict reply: selected pairs, label string, justification.

    Label validity is the caller's concern; this only checks shape.
    """
    obj = extract_json_object(raw)
    rows = obj.get("questions")
    if not isinstance(rows, list):
        raise ParseFailure('reply lacks a "questions" list')
    selected: list[tuple[str, str]] = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            raise ParseFailure(f"questions[{i}] is not an object")
        q, a = row.get("question"), row.get("answer")
        if not isinstance(q, str) or not q.strip():
            raise ParseFailure(f"questions[{i}] has no usable question")
        if not isinstance(a, str):
            a = ""
        selected.append((q.strip(), a.strip()))
    label = obj.get("veracity_verdict")
    if not isinstance(label, str) or not label.strip():
        raise ParseFailure('reply lacks a "veracity_verdict" string')
    justification = obj.get("justification")
    if not isinstance(justification, str):
        raise ParseFailure('reply lacks a "justification" string')
    return ParsedVerdict(
        label_raw=label.strip(),
        justification=justification.strip(),
        selected=tuple(selected),
    )
