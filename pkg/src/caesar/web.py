"""Perception: fetching, main-text extraction, link extraction and filtering.

Two fetch backends share one contract. The live backend sends a realistic
desktop browser header set, follows redirects, honors robots.txt and
dispatches on the response content type. The offline backend replays a
corpus directory declared by a manifest file (a JSON map from URL to file
path) byte-exactly and never touches the network or robots.txt.

URL canonical form: lowercase scheme and host, fragment stripped, query
kept. Failure is sticky: a URL that errors once joins the failed set and is
filtered from every later candidate list.
"""

from __future__ import annotations

import json
import os
import time
import urllib.robotparser
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urljoin, urlsplit, urlunsplit

import requests

from .htmltext import extract_hrefs, extract_main_text
from .pdftext import PdfError, extract_pdf_text

KIND_HTML = "html"
KIND_PDF = "pdf"
KIND_OTHER = "other"

MAX_REDIRECTS = 10

# a realistic desktop Chrome fingerprint
BROWSER_HEADERS = {
    "User-Agent": ("Mozilla/5.0 (Windows NT 10.0; Win64; x64) "
                   "AppleWebKit/537.36 (KHTML, like Gecko) "
                   "Chrome/126.0.0.0 Safari/537.36"),
    "Accept": ("text/html,application/xhtml+xml,application/xml;q=0.9,"
               "image/avif,image/webp,*/*;q=0.8"),
    "Accept-Language": "en-US,en;q=0.9",
    "Accept-Encoding": "gzip, deflate",
}


class FetchError(RuntimeError):
    """Network failures, bad statuses and robots denials."""


class InvalidContentError(ValueError):
    """The body could not be turned into text."""


def canonicalize_url(url: str) -> str:
    parts = urlsplit(url.strip())
    return urlunsplit((parts.scheme.lower(), parts.netloc.lower(),
                       parts.path, parts.query, ""))


@dataclass
class FetchedPage:
    url: str
    content_kind: str = KIND_HTML
    text: str = ""
    links: list[str] = field(default_factory=list)
    fetched_at: float = 0.0
    byte_size: int = 0
    truncated: bool = False
    valid: bool = True
    error: str = ""

    @classmethod
    def invalid(cls, url: str, error: str) -> "FetchedPage":
        return cls(url=url, content_kind=KIND_OTHER, valid=False, error=error)


@dataclass
class FetchPolicy:
    allowed_domains: tuple[str, ...] = ()
    max_revisits: int = 20
    timeout: float = 20.0
    failed: set[str] = field(default_factory=set)
    visit_counts: dict[str, int] = field(default_factory=dict)

    def record_failure(self, url: str) -> None:
        self.failed.add(url)

    def record_visit(self, url: str) -> int:
        self.visit_counts[url] = self.visit_counts.get(url, 0) + 1
        return self.visit_counts[url]

    def over_visited(self, url: str) -> bool:
        return self.visit_counts.get(url, 0) >= self.max_revisits

    def in_allowed_domains(self, url: str) -> bool:
        if not self.allowed_domains:
            return True
        host = urlsplit(url).hostname or ""
        return any(host == d or host.endswith("." + d)
                   for d in self.allowed_domains)


def extract_text(raw: bytes, content_kind: str) -> str:
    """Body bytes to cleaned text; raises on anything unusable."""
    if not raw:
        raise InvalidContentError("empty body")
    if content_kind == KIND_HTML:
        return extract_main_text(raw.decode("utf-8", errors="replace"))
    if content_kind == KIND_PDF:
        try:
            return extract_pdf_text(raw)
        except PdfError as exc:
            raise InvalidContentError(str(exc)) from exc
    raise InvalidContentError(f"unsupported content kind {content_kind!r}")


def extract_links(html: str, base_url: str, max_links: int = 2000) -> list[str]:
    """Absolute, canonical, first-appearance deduplicated, capped."""
    out: list[str] = []
    seen: set[str] = set()
    for href in extract_hrefs(html):
        absolute = urljoin(base_url, href)
        scheme = urlsplit(absolute).scheme
        if scheme not in ("http", "https", "caesar"):
            continue
        canonical = canonicalize_url(absolute)
        if canonical in seen:
            continue
        seen.add(canonical)
        out.append(canonical)
        if len(out) >= max_links:
            break
    return out


def filter_links(links: list[str], policy: FetchPolicy) -> list[str]:
    """Drop failed, over-visited and out-of-domain URLs; keep order."""
    return [u for u in links
            if u not in policy.failed
            and not policy.over_visited(u)
            and policy.in_allowed_domains(u)]


def _kind_from_content_type(content_type: str) -> str:
    ct = content_type.split(";")[0].strip().lower()
    if ct in ("text/html", "application/xhtml+xml") or ct.startswith("text/"):
        return KIND_HTML
    if ct == "application/pdf":
        return KIND_PDF
    return KIND_OTHER


def _kind_from_path(path: str) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".html", ".htm"):
        return KIND_HTML
    if suffix == ".pdf":
        return KIND_PDF
    return KIND_OTHER


class OfflineFetcher:
    """Byte-exact corpus replay from a manifest: {url: relative file path}."""

    name = "offline"

    def __init__(self, manifest_path: str | Path):
        manifest_path = Path(manifest_path)
        if not manifest_path.is_file():
            raise FetchError(f"corpus manifest not found: {manifest_path}")
        mapping = json.loads(manifest_path.read_text())
        if not isinstance(mapping, dict):
            raise FetchError(f"{manifest_path}: manifest must map url to file")
        self.base_dir = manifest_path.parent
        self._files = {canonicalize_url(u): p for u, p in mapping.items()}

    def get(self, url: str, timeout: float) -> tuple[str, str, bytes]:
        rel = self._files.get(url)
        if rel is None:
            raise FetchError(f"url not in corpus: {url}")
        path = self.base_dir / rel
        try:
            body = path.read_bytes()
        except OSError as exc:
            raise FetchError(f"{url}: {exc}") from exc
        return url, _kind_from_path(rel), body


class LiveFetcher:
    """requests-backed fetcher with browser headers and robots.txt checks."""

    name = "live"

    def __init__(self, session: requests.Session | None = None,
                 honor_robots: bool = True):
        self._session = session or requests.Session()
        self._session.max_redirects = MAX_REDIRECTS
        self.honor_robots = honor_robots
        self._robots: dict[str, urllib.robotparser.RobotFileParser] = {}

    def _robots_allows(self, url: str, timeout: float) -> bool:
        parts = urlsplit(url)
        origin = f"{parts.scheme}://{parts.netloc}"
        parser = self._robots.get(origin)
        if parser is None:
            parser = urllib.robotparser.RobotFileParser()
            try:
                resp = self._session.get(origin + "/robots.txt",
                                         headers=BROWSER_HEADERS, timeout=timeout)
                if resp.status_code == 200:
                    parser.parse(resp.text.splitlines())
                else:
                    parser.allow_all = True
            except requests.RequestException:
                parser.allow_all = True
            self._robots[origin] = parser
        return parser.can_fetch(BROWSER_HEADERS["User-Agent"], url)

    def get(self, url: str, timeout: float) -> tuple[str, str, bytes]:
        if urlsplit(url).scheme not in ("http", "https"):
            raise FetchError(f"unsupported scheme: {url}")
        if self.honor_robots and not self._robots_allows(url, timeout):
            raise FetchError(f"blocked by robots.txt: {url}")
        try:
            resp = self._session.get(url, headers=BROWSER_HEADERS,
                                     timeout=timeout, allow_redirects=True)
        except requests.RequestException as exc:
            raise FetchError(f"{url}: {exc}") from exc
        if not 200 <= resp.status_code < 300:
            raise FetchError(f"{url}: status {resp.status_code}")
        kind = _kind_from_content_type(resp.headers.get("Content-Type", ""))
        return canonicalize_url(resp.url), kind, resp.content


def fetch(url: str, fetcher, policy: FetchPolicy,
          max_page_chars: int = 100_000,
          max_links_per_page: int = 2000) -> FetchedPage:
    """One perceive: fetch, extract, truncate, cap; failures are recorded
    in the policy and come back as an invalid page, never an exception."""
    canonical = canonicalize_url(url)
    try:
        final_url, kind, body = fetcher.get(canonical, policy.timeout)
    except FetchError as exc:
        policy.record_failure(canonical)
        return FetchedPage.invalid(canonical, str(exc))
    try:
        text = extract_text(body, kind)
    except InvalidContentError as exc:
        policy.record_failure(canonical)
        if final_url != canonical:
            policy.record_failure(final_url)
        return FetchedPage.invalid(final_url, str(exc))
    if not text:
        policy.record_failure(canonical)
        return FetchedPage.invalid(final_url, "no extractable text")
    truncated = len(text) > max_page_chars
    if truncated:
        text = text[:max_page_chars]
    links = extract_links(body.decode("utf-8", errors="replace"), final_url,
                          max_links_per_page) if kind == KIND_HTML else []
    return FetchedPage(url=final_url, content_kind=kind, text=text,
                       links=links, fetched_at=time.time(),
                       byte_size=len(body), truncated=truncated)


class Perceiver:
    """Caches pages for the run and counts visits per perceive.

    Synthetic documents (the root and web-search result pages) are
    registered directly and never go through the fetcher.
    """

    def __init__(self, fetcher, policy: FetchPolicy,
                 max_page_chars: int = 100_000,
                 max_links_per_page: int = 2000):
        self.fetcher = fetcher
        self.policy = policy
        self.max_page_chars = max_page_chars
        self.max_links_per_page = max_links_per_page
        self._cache: dict[str, FetchedPage] = {}

    def register_synthetic(self, page: FetchedPage) -> None:
        self._cache[page.url] = page

    def perceive(self, url: str) -> FetchedPage:
        canonical = canonicalize_url(url)
        page = self._cache.get(canonical)
        if page is None:
            page = fetch(canonical, self.fetcher, self.policy,
                         self.max_page_chars, self.max_links_per_page)
            self._cache[canonical] = page
            if page.valid and page.url != canonical:
                self._cache[page.url] = page
        self.policy.record_visit(page.url if page.valid else canonical)
        return page


class SearchError(RuntimeError):
    """Search provider failure; fatal during bootstrap."""


class FixtureSearchProvider:
    """Replays search results from a map: query -> [{url, title, snippet}].

    A "*" entry, when present, answers queries the map does not list.
    """

    name = "fixture-search"

    def __init__(self, mapping: dict):
        self._mapping = dict(mapping)

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureSearchProvider":
        return cls(json.loads(Path(path).read_text()))

    def search(self, query: str) -> list[dict]:
        results = self._mapping.get(query, self._mapping.get("*"))
        if results is None:
            raise SearchError(f"no fixture results for query: {query!r}")
        return [dict(r) for r in results]


class LiveSearchProvider:
    """Minimal JSON search client: GET {endpoint}?q=..., expects a JSON body
    with a top-level "results" list of {url, title, snippet} objects."""

    name = "live-search"

    def __init__(self, endpoint: str | None = None, api_key: str | None = None,
                 session: requests.Session | None = None, timeout: float = 30.0):
        self.endpoint = endpoint or os.environ.get("CAESAR_SEARCH_URL", "")
        self.api_key = api_key if api_key is not None else os.environ.get(
            "CAESAR_SEARCH_API_KEY", "")
        self._session = session or requests.Session()
        self.timeout = timeout

    def search(self, query: str) -> list[dict]:
        if not self.endpoint:
            raise SearchError("CAESAR_SEARCH_URL is not set")
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._session.get(self.endpoint, params={"q": query},
                                     headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise SearchError(f"search transport failure: {exc}") from exc
        if resp.status_code != 200:
            raise SearchError(f"search status {resp.status_code}")
        body = resp.json()
        results = body.get("results")
        if not isinstance(results, list):
            raise SearchError("search payload lacks a results list")
        out = []
        for r in results:
            if isinstance(r, dict) and r.get("url"):
                out.append({"url": str(r["url"]),
                            "title": str(r.get("title", "")),
                            "snippet": str(r.get("snippet", ""))})
        return out
