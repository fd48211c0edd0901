"""Fetcher implementations for the two retrieval routes.

A Fetcher turns (url, route) into raw HTML. FakeFetcher serves canned pages
for tests and offline demos; HttpFetcher does plain GETs for both routes
(the scripted route degrades to a GET, which is the best a headless-less
host can do); BrowserFetcher drives a real browser for scripted domains
when playwright is importable.
"""

from __future__ import annotations

import logging
import threading
import time
from typing import Mapping, Protocol

import requests

from ..errors import FetchFailed
from .routing import FetchRoute

log = logging.getLogger(__name__)

_UA = (
    "Mozilla/5.0 (X11; Linux x86_64; rv:122.0) Gecko/20100101 Firefox/122.0"
)


class Fetcher(Protocol):
    def fetch(self, url: str, route: FetchRoute) -> str: ...


class FakeFetcher:
    """Serves from an in-memory url -> html mapping; thread-safe.

    A mapping value may also be an Exception instance, which is raised on
    fetch. Every call is recorded for assertions.
    """

    def __init__(self, pages: Mapping[str, str | Exception]) -> None:
        self._pages = dict(pages)
        self._lock = threading.Lock()
        self.calls: list[tuple[str, FetchRoute]] = []

    def fetch(self, url: str, route: FetchRoute) -> str:
        with self._lock:
            self.calls.append((url, route))
        page = self._pages.get(url)
        if page is None:
            raise FetchFailed(f"no fixture page for {url}")
        if isinstance(page, Exception):
            raise page
        return page


class HttpFetcher:
    """requests-based fetcher. Static fetches get one retry; scripted-route
    urls are attempted once only, since a plain GET against a script-walled
    site rarely improves on retry."""

    def __init__(self, timeout: float = 30.0, session: requests.Session | None = None) -> None:
        self.timeout = timeout
        self._session = session or requests.Session()
        self._session.headers.setdefault("User-Agent", _UA)

    def fetch(self, url: str, route: FetchRoute) -> str:
        attempts = 2 if route is FetchRoute.STATIC else 1
        last: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                time.sleep(0.5)
            try:
                resp = self._session.get(url, timeout=self.timeout)
            except requests.RequestException as exc:
                last = exc
                continue
            if resp.status_code >= 400:
                last = FetchFailed(f"{url}: status {resp.status_code}")
                if 400 <= resp.status_code < 500:
                    break
                continue
            return resp.text
        raise FetchFailed(f"{url}: {last}")


class BrowserFetcher:
    """Scripted-route pages through a headless browser, static through HTTP.

    Requires the optional playwright package with installed browsers; the
    constructor fails loudly when it is missing so callers can fall back to
    HttpFetcher explicitly rather than silently degrade.
    """

    def __init__(self, timeout: float = 30.0) -> None:
        try:
            from playwright.sync_api import sync_playwright
        except ImportError as exc:
            raise FetchFailed(
                "browser fetching requires the playwright package; "
                "install it or choose the http fetcher"
            ) from exc
        self.timeout = timeout
        self._http = HttpFetcher(timeout=timeout)
        self._lock = threading.Lock()  # sync playwright is single-threaded
        self._pw = sync_playwright().start()
        self._browser = self._pw.chromium.launch(headless=True)

    def fetch(self, url: str, route: FetchRoute) -> str:
        if route is FetchRoute.STATIC:
            return self._http.fetch(url, route)
        with self._lock:
            page = self._browser.new_page(user_agent=_UA)
            try:
                page.goto(url, timeout=self.timeout * 1000, wait_until="networkidle")
                return page.content()
            except Exception as exc:
                raise FetchFailed(f"{url}: {exc}") from None
            finally:
                page.close()

    def close(self) -> None:
        with self._lock:
            self._browser.close()
            self._pw.stop()
