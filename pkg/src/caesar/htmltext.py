"""Main-text and anchor extraction on top of html.parser.

No external HTML dependency: the tolerant stdlib parser is enough for the
cleaning pass we need. The main-text heuristic keeps block-level runs whose
link density stays under 0.5 and whose normalized text is at least 20
characters, and drops script/style plus nav/header/footer/aside subtrees.
Documents where nothing survives the heuristic fall back to the whole
visible text, so tiny pages still extract.
"""

from __future__ import annotations

from dataclasses import dataclass
from html.parser import HTMLParser

# subtrees that never contribute visible text
_SKIP_TAGS = frozenset({"script", "style", "noscript", "template", "svg", "head"})
# subtrees treated as boilerplate by the main-text heuristic
_CHROME_TAGS = frozenset({"nav", "header", "footer", "aside"})
# tags that delimit text blocks
_BLOCK_TAGS = frozenset({
    "p", "div", "section", "article", "main", "li", "ul", "ol", "td", "th",
    "tr", "table", "blockquote", "pre", "h1", "h2", "h3", "h4", "h5", "h6",
    "figcaption", "summary", "dd", "dt", "br", "hr", "form", "fieldset",
})

MIN_BLOCK_CHARS = 20
MAX_LINK_DENSITY = 0.5


@dataclass
class TextBlock:
    text: str
    link_chars: int
    total_chars: int
    in_chrome: bool

    @property
    def link_density(self) -> float:
        if self.total_chars == 0:
            return 0.0
        return self.link_chars / self.total_chars


def _normalize(text: str) -> str:
    return " ".join(text.split())


class _BlockParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.blocks: list[TextBlock] = []
        self._parts: list[str] = []
        self._link_chars = 0
        self._total_chars = 0
        self._skip_depth = 0
        self._chrome_depth = 0
        self._anchor_depth = 0

    def _flush(self) -> None:
        raw = "".join(self._parts)
        text = _normalize(raw)
        if text:
            self.blocks.append(TextBlock(
                text=text, link_chars=self._link_chars,
                total_chars=self._total_chars,
                in_chrome=self._chrome_depth > 0))
        self._parts = []
        self._link_chars = 0
        self._total_chars = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
            return
        if tag in _CHROME_TAGS:
            self._flush()
            self._chrome_depth += 1
            return
        if tag == "a":
            self._anchor_depth += 1
        if tag in _BLOCK_TAGS:
            self._flush()

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if tag in _CHROME_TAGS:
            self._flush()
            self._chrome_depth = max(0, self._chrome_depth - 1)
            return
        if tag == "a":
            self._anchor_depth = max(0, self._anchor_depth - 1)
        if tag in _BLOCK_TAGS:
            self._flush()

    def handle_startendtag(self, tag, attrs):
        if tag in _BLOCK_TAGS:
            self._flush()

    def handle_data(self, data):
        if self._skip_depth or not data:
            return
        stripped_len = len(data.strip())
        self._parts.append(data)
        self._total_chars += stripped_len
        if self._anchor_depth:
            self._link_chars += stripped_len

    def close(self):
        super().close()
        self._flush()


def extract_blocks(html: str) -> list[TextBlock]:
    parser = _BlockParser()
    parser.feed(html)
    parser.close()
    return parser.blocks


def extract_main_text(html: str) -> str:
    """The cleaning pass: block heuristic first, whole-text fallback second."""
    blocks = extract_blocks(html)
    kept = [b.text for b in blocks
            if not b.in_chrome
            and b.link_density < MAX_LINK_DENSITY
            and len(b.text) >= MIN_BLOCK_CHARS]
    if kept:
        return "\n".join(kept)
    visible = [b.text for b in blocks if not b.in_chrome]
    return _normalize(" ".join(visible))


class _AnchorParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.hrefs: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag != "a":
            return
        for name, value in attrs:
            if name == "href" and value:
                self.hrefs.append(value)
                break


def extract_hrefs(html: str) -> list[str]:
    """Raw href values of every anchor, in document order."""
    parser = _AnchorParser()
    parser.feed(html)
    parser.close()
    return parser.hrefs
