"""Decide how a URL must be fetched: static GET or a scripted browser."""

from __future__ import annotations

from enum import Enum
from urllib.parse import urlsplit

from ..errors import UrlInvalid
from .patterns import scripted_domains


class FetchRoute(Enum):
    STATIC = "static"
    SCRIPTED_BROWSER = "scripted_browser"


def _host_of(url: str) -> str:
    try:
        parts = urlsplit(url)
    except ValueError as exc:
        raise UrlInvalid(f"unparseable url {url!r}: {exc}") from None
    if parts.scheme not in ("http", "https"):
        raise UrlInvalid(f"unsupported scheme in {url!r}")
    host = parts.hostname
    if not host:
        raise UrlInvalid(f"no host in {url!r}")
    return host.lower().rstrip(".")


def classify_fetch_route(url: str) -> FetchRoute:
    """Scripted-browser for social/archive domains (and their subdomains),
    plain static fetching for everything else. Raises UrlInvalid for
    non-http(s) or hostless urls."""
    host = _host_of(url)
    for domain in scripted_domains():
        if host == domain or host.endswith("." + domain):
            return FetchRoute.SCRIPTED_BROWSER
    return FetchRoute.STATIC
