"""Classify scraped store text so filling knows what to replace.

Decision order matters and is fixed: Empty beats Restricted beats Generic
beats Useful. Restriction is judged per line because login walls render as
stacks of short prompts; mere shortness without wall markers falls through
to Generic.
"""

from __future__ import annotations

import re
from typing import Optional

from ..core import Usefulness
from .patterns import generic_patterns, restricted_patterns

# Lines longer than this are treated as prose and never pattern-flagged;
# navigation and footer junk is short.
_MAX_BOILERPLATE_LINE = 60

_WS_RE = re.compile(r"\s+")


def normalized_length(text: str) -> int:
    """Length after collapsing all whitespace runs to single spaces."""
    return len(_WS_RE.sub(" ", text).strip())


def is_generic_line(line: str) -> bool:
    line = line.strip().lower()
    if not line or len(line) > _MAX_BOILERPLATE_LINE:
        return False
    return any(pat in line for pat in generic_patterns())


def is_restricted_line(line: str) -> bool:
    line = line.strip().lower()
    if not line:
        return False
    return any(pat in line for pat in restricted_patterns())


def assess_usefulness(
    text: Optional[str],
    *,
    min_useful_chars: int = 200,
    generic_line_ratio: float = 0.5,
) -> Usefulness:
    """Judge whether stored text can actually support verification.

    Empty: absent or whitespace-only. Restricted: at least half of the
    non-blank lines carry access-barrier markers. Generic: boilerplate
    lines exceed ``generic_line_ratio``, or the normalized text is shorter
    than ``min_useful_chars``. Everything else is Useful.
    """
    if text is None or not text.strip():
        return Usefulness.EMPTY
    lines = [ln for ln in text.splitlines() if ln.strip()]
    restricted = sum(1 for ln in lines if is_restricted_line(ln))
    if lines and restricted * 2 >= len(lines):
        return Usefulness.RESTRICTED
    generic = sum(1 for ln in lines if is_generic_line(ln))
    if lines and generic > generic_line_ratio * len(lines):
        return Usefulness.GENERIC
    if normalized_length(text) < min_useful_chars:
        return Usefulness.GENERIC
    return Usefulness.USEFUL
