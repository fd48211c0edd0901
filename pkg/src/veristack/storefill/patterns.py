"""Pattern lists backing usefulness assessment and fetch routing."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=None)
def _load_lines(resource: str) -> tuple[str, ...]:
    text = resources.files("veristack.data").joinpath(resource).read_text("utf-8")
    out = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line.lower())
    return tuple(out)


def generic_patterns() -> tuple[str, ...]:
    return _load_lines("generic_patterns.txt")


def restricted_patterns() -> tuple[str, ...]:
    return _load_lines("restricted_patterns.txt")


def scripted_domains() -> tuple[str, ...]:
    return _load_lines("scripted_domains.txt")
