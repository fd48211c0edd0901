"""Main-content extraction from raw HTML, stdlib parser only.

The goal is not pixel-perfect readability extraction but a deterministic,
dependency-free reduction: structural chrome (scripts, nav, footers, forms,
elements whose class/id scream boilerplate) is dropped wholesale, remaining
text is flattened to whitespace-normalized paragraphs, and leftover short
boilerplate lines are filtered by pattern. Access-barrier lines ("log in to
continue") are deliberately kept: for a walled page they ARE the content,
and downstream usefulness assessment keys off them.
"""

from __future__ import annotations

import re
from html.parser import HTMLParser

from ..errors import ExtractEmpty
from .usefulness import is_generic_line, is_restricted_line

_SKIP_TAGS = frozenset(
    "script style noscript template svg head title nav header footer aside "
    "form button select option label iframe menu dialog datalist".split()
)

_BLOCK_TAGS = frozenset(
    "p div section article main li ul ol dl dt dd h1 h2 h3 h4 h5 h6 table "
    "thead tbody tfoot tr td th blockquote pre figure figcaption details "
    "summary address center".split()
)

_VOID_TAGS = frozenset(
    "area base br col embed hr img input link meta param source track wbr".split()
)

_BOILERPLATE_ATTR = re.compile(
    r"(?:^|[-_ ])(nav|navigation|navbar|menu|header|footer|sidebar|cookie|consent|banner|"
    r"social|share|subscribe|newsletter|login|signin|sign-in|paywall|breadcrumb|"
    r"related|promo|advert|ad|ads|comment|comments|widget|masthead|toolbar)(?:$|[-_ ])",
    re.IGNORECASE,
)

_WS_RE = re.compile(r"\s+")
_PARA_BREAK_RE = re.compile(r"\n\s*\n")


def _is_boilerplate_element(tag: str, attrs: list[tuple[str, str | None]]) -> bool:
    if tag in _SKIP_TAGS:
        return True
    for name, value in attrs:
        if value is None:
            continue
        if name in ("class", "id", "role") and _BOILERPLATE_ATTR.search(value):
            return True
    return False


class _MainTextParser(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self._stack: list[tuple[str, bool]] = []  # (tag, element is skipped)
        self._skip_depth = 0
        self._buf: list[str] = []
        self.paragraphs: list[str] = []

    def _flush(self) -> None:
        text = _WS_RE.sub(" ", "".join(self._buf)).strip()
        self._buf.clear()
        if text:
            self.paragraphs.append(text)

    def handle_starttag(self, tag: str, attrs: list[tuple[str, str | None]]) -> None:
        if tag in _BLOCK_TAGS or tag in ("br", "hr"):
            self._flush()
        if tag in _VOID_TAGS:
            return
        skipped = _is_boilerplate_element(tag, attrs)
        self._stack.append((tag, skipped))
        if skipped:
            self._skip_depth += 1

    def handle_endtag(self, tag: str) -> None:
        if tag in _BLOCK_TAGS:
            self._flush()
        if tag in _VOID_TAGS:
            return
        # Tolerate malformed nesting: close everything down to the matching
        # open tag, or ignore a stray close entirely.
        for i in range(len(self._stack) - 1, -1, -1):
            if self._stack[i][0] == tag:
                for _, skipped in self._stack[i:]:
                    if skipped:
                        self._skip_depth -= 1
                del self._stack[i:]
                break

    def handle_data(self, data: str) -> None:
        if self._skip_depth:
            return
        parts = _PARA_BREAK_RE.split(data)
        for j, part in enumerate(parts):
            if j:
                self._flush()
            if part:
                self._buf.append(part)

    def close(self) -> None:
        super().close()
        self._flush()


def extract_main_content(html: str) -> str:
    """Reduce an HTML document to its substantive text.

    Returns newline-joined paragraphs. Raises ExtractEmpty when nothing
    substantive survives (empty page, pure chrome, body swallowed by a
    skipped container such as a login form).
    """
    parser = _MainTextParser()
    parser.feed(html)
    parser.close()
    kept = [
        p
        for p in parser.paragraphs
        if is_restricted_line(p) or not is_generic_line(p)
    ]
    text = "\n".join(kept)
    if not text.strip():
        raise ExtractEmpty("no substantive content found")
    return text
