"""Shared fixtures: deterministic corpora, scripted providers, engines."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest
from reportlab.lib.pagesizes import letter
from reportlab.pdfgen import canvas as pdf_canvas

from caesar.config import CaesarConfig
from caesar.explore import ExplorationEngine
from caesar.llm import ChatClient, RuleProvider, ScriptedProvider, TokenLedger
from caesar.web import FixtureSearchProvider, OfflineFetcher

SITE = "http://site.test"

_WORD_BANK = (
    "harbor lantern granite meadow copper orchard thicket quarry bellows "
    "cinder anvil rampart estuary bramble furrow gable hearth inlet "
    "juniper keystone ledger mortar nectar oakum pewter quill russet "
    "saffron tallow umber vellum wicket yarrow zephyr basalt crofter "
    "dapple ember fescue garnet"
).split()


def page_paragraphs(name: str, count: int = 3, words: int = 36) -> list[str]:
    """Stable prose for a page; seeded by its name only."""
    rng = random.Random(f"prose:{name}")
    paragraphs = []
    for p in range(count):
        tokens = [rng.choice(_WORD_BANK) for _ in range(words)]
        tokens[0] = tokens[0].capitalize()
        paragraphs.append(
            f"{name} section {p + 1}: " + " ".join(tokens) + ".")
    return paragraphs


def html_page(title: str, paragraphs: list[str], links: list[str],
              chrome: bool = True) -> str:
    parts = [f"<html><head><title>{title}</title>"
             "<script>var tracker = 1;</script>"
             "<style>body { color: black; }</style></head><body>"]
    if chrome:
        parts.append("<nav><a href='/home'>home</a> "
                     "<a href='/about'>about</a></nav>")
        parts.append("<header>site navigation banner for every page</header>")
    parts.append(f"<h1>{title}</h1>")
    for para in paragraphs:
        parts.append(f"<p>{para}</p>")
    if links:
        items = "".join(f"<li><a href='{href}'>visit {i}</a></li>"
                        for i, href in enumerate(links))
        parts.append(f"<ul>{items}</ul>")
    if chrome:
        parts.append("<footer>copyright boilerplate footer text here</footer>")
    parts.append("</body></html>")
    return "".join(parts)


def write_pdf(path: Path, lines: list[str]) -> None:
    c = pdf_canvas.Canvas(str(path), pagesize=letter, invariant=1)
    y = 720
    for line in lines:
        c.drawString(72, y, line)
        y -= 18
    c.showPage()
    c.save()


def build_site(root: Path, pages: dict[str, list[str]],
               pdf_pages: dict[str, list[str]] | None = None,
               extra_corpus_text: dict[str, str] | None = None,
               chrome: bool = False) -> Path:
    """Write an offline corpus; pages maps name -> linked page names.

    Returns the manifest path. Names ending in .pdf come from pdf_pages.
    extra_corpus_text overrides the generated HTML body for a name.
    """
    corpus = root / "corpus"
    corpus.mkdir(parents=True, exist_ok=True)
    manifest: dict[str, str] = {}
    for name, link_names in pages.items():
        links = [f"{SITE}/{ln}" for ln in link_names]
        if extra_corpus_text and name in extra_corpus_text:
            body = extra_corpus_text[name]
        else:
            body = html_page(name, page_paragraphs(name), links,
                             chrome=chrome)
        (corpus / name).write_text(body)
        manifest[f"{SITE}/{name}"] = f"corpus/{name}"
    for name, lines in (pdf_pages or {}).items():
        write_pdf(corpus / name, lines)
        manifest[f"{SITE}/{name}"] = f"corpus/{name}"
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest_path


def main_site_pages() -> dict[str, list[str]]:
    """A 30-document tree: index -> a* -> b* -> c* -> d*, plus one PDF."""
    pages: dict[str, list[str]] = {}
    pages["index.html"] = [f"a{i}.html" for i in range(1, 5)]
    pages["a1.html"] = [f"b{i}.html" for i in range(1, 5)] + ["doc1.pdf"]
    pages["a2.html"] = [f"b{i}.html" for i in range(5, 9)]
    pages["a3.html"] = [f"b{i}.html" for i in range(9, 13)]
    pages["a4.html"] = [f"b{i}.html" for i in range(13, 17)]
    for i in range(1, 17):
        pages[f"b{i}.html"] = []
    pages["b1.html"] = [f"c{i}.html" for i in range(1, 5)]
    for i in range(1, 5):
        pages[f"c{i}.html"] = []
    pages["c1.html"] = [f"d{i}.html" for i in range(1, 5)]
    for i in range(1, 5):
        pages[f"d{i}.html"] = []
    return pages


DEFAULT_QUERY = "what is the structure of the topic corpus"

DETERMINISM_SCRIPT = {
    "search_expansion:*": "corpus topology",
    "role_generation:*": ("You are a meticulous corpus librarian mapping "
                          "page relationships."),
    "think_insights:*": ("The page presents stable reference prose about "
                         "corpus topics with consistent internal linking."),
    "act_meta_strategy:*": "EXPLORE",
    "act_link_select:*": "LINK: 0",
    "qa_answer:*": ("The corpus pages interlink in a fixed hierarchy and "
                    "repeat stable factual prose."),
    "qa_followup:*": "STOP",
    "draft_generation:*": ("The corpus consists of deterministic interlinked "
                           "topic pages. [1]\n\nEach page repeats stable "
                           "factual sentences about its topic. [2]"),
    "refine_query:*": "which structural weaknesses does the hierarchy show",
    "merge_drafts:*": ("The corpus is a deterministic web of topic pages "
                       "with stable facts. [1] [2]"),
    "eli5_constrained:*": ("It is a tiny pretend internet that always looks "
                           "the same every time you open it. The end."),
    "eli5_unconstrained:*": ("A tiny pretend internet that never changes "
                             "between visits."),
}

SEARCH_FIXTURES = {
    DEFAULT_QUERY: [
        {"url": f"{SITE}/index.html", "title": "Corpus index",
         "snippet": "Entry point of the topic corpus."},
    ],
    "*": [
        {"url": f"{SITE}/index.html", "title": "Corpus index",
         "snippet": "Entry point of the topic corpus."},
        {"url": f"{SITE}/a2.html", "title": "Topic a2",
         "snippet": "Second branch of the corpus."},
    ],
}


@pytest.fixture(scope="session")
def main_corpus(tmp_path_factory) -> dict:
    root = tmp_path_factory.mktemp("main_corpus")
    manifest = build_site(root, main_site_pages(),
                          pdf_pages={"doc1.pdf": [
                              "Archived corpus appendix.",
                              "It lists the stable topic vocabulary.",
                          ]})
    fixtures = root / "search.json"
    fixtures.write_text(json.dumps(SEARCH_FIXTURES, indent=2))
    script = root / "llm.json"
    script.write_text(json.dumps(DETERMINISM_SCRIPT, indent=2))
    return {"root": root, "manifest": manifest, "search": fixtures,
            "llm": script}


@pytest.fixture(scope="session")
def trace_site(tmp_path_factory) -> Path:
    """Five reachable pages plus one dangling link (e.html is not served)."""
    root = tmp_path_factory.mktemp("trace_site")
    return build_site(root, {
        "a.html": ["c.html", "d.html"],
        "b.html": ["d.html", "e.html"],
        "c.html": [],
        "d.html": [],
    })


@pytest.fixture(scope="session")
def chain_corpus(tmp_path_factory) -> Path:
    """A 48-page linear chain for cost scaling runs."""
    root = tmp_path_factory.mktemp("chain_corpus")
    pages = {f"ch{i:02d}.html": [f"ch{i + 1:02d}.html"] for i in range(47)}
    pages["ch47.html"] = []
    return build_site(root, pages)


@pytest.fixture(scope="session")
def cap_corpus(tmp_path_factory) -> Path:
    """Interlinked ring plus one oversized page (2500 links, >250k chars)."""
    root = tmp_path_factory.mktemp("cap_corpus")
    mega_links = "".join(
        f"<li><a href='{SITE}/mt{i:04d}.html'>target {i}</a></li>"
        for i in range(2500))
    filler = " ".join(page_paragraphs("mega", count=90, words=450))
    assert len(filler) > 250_000
    mega = ("<html><head><title>mega</title></head><body><h1>mega</h1>"
            f"<p>{filler}</p><ul>{mega_links}</ul></body></html>")
    pages: dict[str, list[str]] = {
        "index.html": ["mega.html"] + [f"m{i}.html" for i in range(1, 9)],
    }
    for i in range(1, 9):
        nxt = i % 8 + 1
        other = (i + 3) % 8 + 1
        pages[f"m{i}.html"] = [f"m{nxt}.html", f"m{other}.html", "mega.html",
                               f"gone{i}.html"]
    pages["mega.html"] = []
    return build_site(root, pages, extra_corpus_text={"mega.html": mega})


def seq_provider(script: dict[str, object]) -> RuleProvider:
    """RuleProvider replaying per-template response sequences.

    A str value answers every call; a list is consumed one item per call
    and raises when exhausted, so scripts fail loudly instead of looping.
    """
    queues = {k: list(v) for k, v in script.items() if isinstance(v, list)}

    def fn(request):
        spec = script.get(request.template_id)
        if spec is None:
            raise AssertionError(
                f"unscripted template in test: {request.template_id}")
        if isinstance(spec, str):
            return spec
        queue = queues[request.template_id]
        if not queue:
            raise AssertionError(
                f"script exhausted for template: {request.template_id}")
        return queue.pop(0)

    return RuleProvider(fn)


def make_engine(manifest: Path, provider, search_map: dict,
                **config_overrides) -> ExplorationEngine:
    config = CaesarConfig(user_query=DEFAULT_QUERY, **config_overrides)
    client = ChatClient(provider, ledger=TokenLedger())
    search = FixtureSearchProvider(search_map)
    fetcher = OfflineFetcher(manifest)
    return ExplorationEngine(config, client, search, fetcher)


BASE_EXPLORE_SCRIPT: dict[str, object] = {
    "search_expansion": "",
    "role_generation": "corpus trace tester",
    "think_insights": "Stable page insight for trace checks.",
}


def trace_search_map(*urls: str) -> dict:
    return {DEFAULT_QUERY: [
        {"url": url, "title": f"result {i}", "snippet": "fixture result"}
        for i, url in enumerate(urls)]}
