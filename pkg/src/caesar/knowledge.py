"""Vector knowledge base and episodic navigation memory.

Chunk sizes are stated in tokens. Without a provider tokenizer the engine
uses the documented approximation of 4/3 tokens per whitespace word, so a
400-token window is a 300-word window. All chunk arithmetic happens on
words with that fixed conversion, which keeps the round-trip invariants
exact and tokenizer-free.

The test embedder is a feature-hashing bag of words: md5 buckets over
lowercased unigrams, L2-normalized, dimension 256. Retrieval is an exact
cosine scan, reranking is a lexical overlap score. Both are deliberately
oracle-checkable.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from hashlib import md5
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

EMBED_DIM = 256

ACTIONS = ("explore", "backtrack", "web_search")

# minimal English stopword list for keyword extraction
_STOPWORDS = frozenset("""
a an and are as at be been but by for from has have how in is it its more no
not of on or that the their then there these this to was were what when which
who will with
""".split())

_WORD = re.compile(r"\w+")


def words_for_tokens(tokens: int) -> int:
    # inverse of the 4/3 tokens-per-word approximation
    return tokens * 3 // 4


def chunk(text: str, chunk_size: int = 400, chunk_overlap: int = 80) -> list[str]:
    """Sliding-window chunker over whitespace words.

    Consecutive chunks share exactly chunk_overlap tokens of text; every
    input word lands in at least one chunk; stripping the overlap from each
    chunk after the first reassembles the input word sequence.
    """
    if chunk_overlap >= chunk_size:
        raise ValueError("chunk_overlap must be strictly less than chunk_size")
    words = text.split()
    if not words:
        return []
    size = max(1, words_for_tokens(chunk_size))
    overlap = words_for_tokens(chunk_overlap)
    step = max(1, size - overlap)
    chunks = []
    start = 0
    while True:
        end = start + size
        chunks.append(" ".join(words[start:end]))
        if end >= len(words):
            break
        start += step
    return chunks


def overlap_words(chunk_overlap: int = 80) -> int:
    """Word width of the shared region between consecutive chunks."""
    return words_for_tokens(chunk_overlap)


class HashingEmbedder:
    """Deterministic bag-of-words feature hashing into d buckets."""

    name = "hashing"

    def __init__(self, dim: int = EMBED_DIM):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim

    def _bucket(self, term: str) -> int:
        return int.from_bytes(md5(term.encode("utf-8")).digest()[:8], "big") % self.dim

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("cannot embed empty text")
        vec = np.zeros(self.dim, dtype=np.float64)
        terms = _WORD.findall(text.lower())
        if terms:
            for term in terms:
                vec[self._bucket(term)] += 1.0
        else:
            # punctuation-only input, hash the raw text as one feature
            vec[self._bucket(text)] = 1.0
        return vec / np.linalg.norm(vec)


@dataclass
class KnowledgeEntry:
    entry_id: str
    text: str
    embedding: np.ndarray
    metadata: dict

    def validate(self) -> None:
        if not self.text:
            raise ValueError(f"{self.entry_id}: empty text")
        if "source_url" not in self.metadata:
            raise ValueError(f"{self.entry_id}: metadata lacks source_url")
        norm = float(np.linalg.norm(self.embedding))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"{self.entry_id}: embedding norm {norm} is not 1")


def _terms(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def lexical_overlap_score(query: str, text: str) -> int:
    """Weighted term intersection: sum of query-term counts over the
    distinct terms that also occur in the text."""
    q_counts = Counter(_terms(query))
    shared = set(q_counts) & set(_terms(text))
    return sum(q_counts[t] for t in shared)


class KnowledgeBase:
    """Exact-scan vector store with insertion-ordered tie breaking."""

    def __init__(self, embedder=None, chunk_size: int = 400, chunk_overlap: int = 80):
        self.embedder = embedder if embedder is not None else HashingEmbedder()
        self.chunk_size = chunk_size
        self.chunk_overlap = chunk_overlap
        self._entries: list[KnowledgeEntry] = []

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> list[KnowledgeEntry]:
        return list(self._entries)

    def _next_id(self) -> str:
        return f"e{len(self._entries) + 1:06d}"

    def add_entry(self, entry: KnowledgeEntry) -> KnowledgeEntry:
        entry.validate()
        self._entries.append(entry)
        return entry

    def add_text(self, text: str, metadata: Mapping) -> list[KnowledgeEntry]:
        """Chunk, embed and index one insight block. Returns the new entries."""
        added = []
        for piece in chunk(text, self.chunk_size, self.chunk_overlap):
            entry = KnowledgeEntry(
                entry_id=self._next_id(),
                text=piece,
                embedding=self.embedder.embed(piece),
                metadata=dict(metadata),
            )
            self.add_entry(entry)
            added.append(entry)
        return added

    def retrieve(self, query: str, k: int = 50,
                 metadata_filter: Mapping | Callable[[dict], bool] | None = None,
                 ) -> list[KnowledgeEntry]:
        """Top-k by cosine similarity; filter applies before ranking; ties
        keep insertion order."""
        if k <= 0 or not self._entries:
            return []
        if metadata_filter is None:
            pool = list(enumerate(self._entries))
        elif callable(metadata_filter):
            pool = [(i, e) for i, e in enumerate(self._entries)
                    if metadata_filter(e.metadata)]
        else:
            wanted = dict(metadata_filter)
            pool = [(i, e) for i, e in enumerate(self._entries)
                    if all(e.metadata.get(key) == val for key, val in wanted.items())]
        if not pool:
            return []
        q = self.embedder.embed(query)
        # entries are unit vectors, dot product is cosine similarity
        scored = [(float(q @ e.embedding), i, e) for i, e in pool]
        scored.sort(key=lambda t: (-t[0], t[1]))
        return [e for _, _, e in scored[:k]]

    def rerank(self, query: str, entries: Iterable[KnowledgeEntry],
               n: int = 10) -> list[KnowledgeEntry]:
        """Reorder by lexical overlap with the query, stable ties, keep n."""
        pool = list(entries)
        scored = [(lexical_overlap_score(query, e.text), i, e)
                  for i, e in enumerate(pool)]
        scored.sort(key=lambda t: (-t[0], t[1]))
        return [e for _, _, e in scored[:max(0, n)]]

    def source_urls(self) -> list[str]:
        seen: dict[str, None] = {}
        for e in self._entries:
            seen.setdefault(e.metadata["source_url"])
        return list(seen)

    def to_jsonl(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for e in self._entries:
                fh.write(json.dumps({
                    "entry_id": e.entry_id,
                    "text": e.text,
                    "metadata": e.metadata,
                    "embedding": [float(x) for x in e.embedding],
                }, sort_keys=True) + "\n")

    @classmethod
    def from_jsonl(cls, path: str | Path, embedder=None,
                   chunk_size: int = 400, chunk_overlap: int = 80) -> "KnowledgeBase":
        kb = cls(embedder=embedder, chunk_size=chunk_size, chunk_overlap=chunk_overlap)
        text = Path(path).read_text()
        for line in text.splitlines():
            if not line.strip():
                continue
            raw = json.loads(line)
            kb.add_entry(KnowledgeEntry(
                entry_id=raw["entry_id"],
                text=raw["text"],
                embedding=np.asarray(raw["embedding"], dtype=np.float64),
                metadata=raw["metadata"],
            ))
        return kb


def extract_keywords(text: str, top: int = 10) -> list[str]:
    """Top non-stopword terms by frequency, first-appearance tie order,
    lowercased and deduplicated."""
    counts: Counter[str] = Counter()
    first_seen: dict[str, int] = {}
    for pos, term in enumerate(_terms(text)):
        if term in _STOPWORDS or term.isdigit():
            continue
        counts[term] += 1
        first_seen.setdefault(term, pos)
    ranked = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
    return ranked[:top]


@dataclass
class EpisodicRecord:
    step: int
    from_url: str
    action: str
    to_url: str | None = None
    reasoning: str = ""
    keywords: list[str] = field(default_factory=list)

    def normalized(self) -> "EpisodicRecord":
        if self.action not in ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")
        seen: dict[str, None] = {}
        for kw in self.keywords:
            seen.setdefault(kw.lower())
        return EpisodicRecord(step=self.step, from_url=self.from_url,
                              action=self.action, to_url=self.to_url,
                              reasoning=self.reasoning, keywords=list(seen))


class EpisodicMemory:
    """Append-only log of navigation moves, recalled by keyword."""

    RECALL_WINDOW = 10

    def __init__(self):
        self._records: list[EpisodicRecord] = []

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> list[EpisodicRecord]:
        return list(self._records)

    def record_move(self, record: EpisodicRecord, parent: str | None = None) -> EpisodicRecord:
        rec = record.normalized()
        # a backtrack must land on the recorded parent node
        if rec.action == "backtrack" and rec.to_url != parent:
            raise ValueError(
                f"backtrack to {rec.to_url!r} does not match parent {parent!r}")
        self._records.append(rec)
        return rec

    def recall(self, keywords: Iterable[str],
               window: int | None = None) -> list[EpisodicRecord]:
        """Records sharing at least one keyword, most recent first."""
        wanted = {k.lower() for k in keywords}
        if not wanted:
            return []
        cap = self.RECALL_WINDOW if window is None else window
        hits = [r for r in reversed(self._records) if wanted & set(r.keywords)]
        return hits[:cap]

    def to_jsonl(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for r in self._records:
                fh.write(json.dumps({
                    "step": r.step, "from_url": r.from_url, "action": r.action,
                    "to_url": r.to_url, "reasoning": r.reasoning,
                    "keywords": r.keywords,
                }, sort_keys=True) + "\n")

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "EpisodicMemory":
        mem = cls()
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            raw = json.loads(line)
            mem._records.append(EpisodicRecord(**raw))
        return mem
