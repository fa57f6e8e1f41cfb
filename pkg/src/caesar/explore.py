"""Phase 1: budgeted Perceive-Think-Act exploration.

The loop keeps four pieces of state in lockstep: the navigation stack, the
exploration graph, the vector knowledge base, and the episodic move memory.
Each iteration consumes exactly one budget unit, whatever happens inside
it. The run terminates when the budget hits zero or the stack empties
(backtracking off the root counts as termination).

Meta-action edge handling, all deliberate:
- an unparseable meta decision gets exactly one re-prompt, then Backtrack;
- Explore with no fresh candidates is coerced to Backtrack;
- WebSearch beyond the search budget is coerced to Backtrack;
- any action that would create a node deeper than the depth cap is coerced
  to Backtrack;
- a mid-run search provider failure is coerced to Backtrack (bootstrap
  search failure, by contrast, aborts the run).

Explore candidates exclude URLs already present in the graph, so a link is
explored at most once per run.
"""

from __future__ import annotations

import html as html_escape
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .config import CaesarConfig
from .knowledge import (EpisodicMemory, EpisodicRecord, KnowledgeBase,
                        extract_keywords)
from .llm import ChatClient, ChatRequest, ProviderError
from .prompts import render
from .web import (FetchedPage, FetchPolicy, Perceiver, SearchError,
                  canonicalize_url, filter_links)

ROOT_URL = "caesar://root"
EDGE_LINK = "link"
EDGE_SEARCH = "search"

ACT_EXPLORE = "explore"
ACT_BACKTRACK = "backtrack"
ACT_WEB_SEARCH = "web_search"
ACT_POP_INVALID = "pop_invalid"
ACT_THINK_FAILED = "think_failed"

_MAX_AUX_TERMS = 3
_PROMPT_SNIPPET_CHARS = 400


class BootstrapError(RuntimeError):
    """Raised when the run cannot even start (search or role failure)."""


class GraphIntegrityError(RuntimeError):
    pass


@dataclass
class GraphNode:
    url: str
    depth: int
    insights: str = ""
    visit_count: int = 0
    created_step: int = 0
    failed: bool = False


class ExplorationGraph:
    """Directed graph of visited URLs; node identity is the canonical URL."""

    def __init__(self):
        self.nodes: dict[str, GraphNode] = {}
        self.edges: list[tuple[str, str, str]] = []
        self.root: str | None = None

    def __contains__(self, url: str) -> bool:
        return url in self.nodes

    def add_root(self, url: str, step: int = 0) -> GraphNode:
        if self.root is not None:
            raise GraphIntegrityError("root already set")
        node = GraphNode(url=url, depth=0, created_step=step)
        self.nodes[url] = node
        self.root = url
        return node

    def add_child(self, parent_url: str, url: str, kind: str,
                  step: int) -> GraphNode:
        if parent_url not in self.nodes:
            raise GraphIntegrityError(f"unknown parent {parent_url}")
        if url in self.nodes:
            raise GraphIntegrityError(f"node exists: {url}")
        if kind not in (EDGE_LINK, EDGE_SEARCH):
            raise GraphIntegrityError(f"unknown edge kind {kind}")
        node = GraphNode(url=url, depth=self.nodes[parent_url].depth + 1,
                         created_step=step)
        self.nodes[url] = node
        self.edges.append((parent_url, url, kind))
        return node

    def rename_node(self, old: str, new: str) -> None:
        """Redirects make the final URL the visited node."""
        if old == new:
            return
        if new in self.nodes:
            raise GraphIntegrityError(f"rename collides with {new}")
        node = self.nodes.pop(old)
        node.url = new
        # rebuild preserving insertion order
        rebuilt: dict[str, GraphNode] = {}
        for url, n in self.nodes.items():
            rebuilt[url] = n
        items = list(rebuilt.items())
        self.nodes = {}
        placed = False
        for url, n in items:
            if not placed and n.created_step > node.created_step:
                self.nodes[new] = node
                placed = True
            self.nodes[url] = n
        if not placed:
            self.nodes[new] = node
        self.edges = [(new if a == old else a, new if b == old else b, k)
                      for a, b, k in self.edges]
        if self.root == old:
            self.root = new

    def parent_of(self, url: str) -> str | None:
        for a, b, _ in self.edges:
            if b == url:
                return a
        return None

    def children_of(self, url: str) -> list[str]:
        return [b for a, b, _ in self.edges if a == url]

    def update_insights(self, url: str, insights: str) -> None:
        node = self.nodes[url]
        node.insights = insights if not node.insights \
            else node.insights + "\n\n" + insights

    def neighbor_insights(self, url: str, limit: int) -> list[GraphNode]:
        """Context window for Think: ancestors along the incoming path
        nearest first, then siblings newest first, insight-bearing only."""
        if limit <= 0:
            return []
        picked: list[GraphNode] = []
        seen = {url}
        cursor = self.parent_of(url)
        while cursor is not None and len(picked) < limit:
            node = self.nodes[cursor]
            if node.insights and cursor not in seen:
                picked.append(node)
            seen.add(cursor)
            cursor = self.parent_of(cursor)
        parent = self.parent_of(url)
        if parent is not None:
            siblings = [self.nodes[c] for c in self.children_of(parent)
                        if c not in seen]
            siblings.sort(key=lambda n: -n.created_step)
            for node in siblings:
                if len(picked) >= limit:
                    break
                if node.insights:
                    picked.append(node)
                seen.add(node.url)
        return picked

    def out_degree(self, url: str) -> int:
        return sum(1 for a, _, _ in self.edges if a == url)

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "nodes": [{
                "url": n.url, "depth": n.depth, "insights": n.insights,
                "visit_count": n.visit_count, "created_step": n.created_step,
                "failed": n.failed,
            } for n in self.nodes.values()],
            "edges": [{"from": a, "to": b, "kind": k} for a, b, k in self.edges],
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2,
                                         sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, data: dict) -> "ExplorationGraph":
        g = cls()
        g.root = data.get("root")
        for raw in data.get("nodes", []):
            g.nodes[raw["url"]] = GraphNode(
                url=raw["url"], depth=raw["depth"],
                insights=raw.get("insights", ""),
                visit_count=raw.get("visit_count", 0),
                created_step=raw.get("created_step", 0),
                failed=raw.get("failed", False))
        g.edges = [(e["from"], e["to"], e["kind"])
                   for e in data.get("edges", [])]
        return g

    @classmethod
    def read_json(cls, path: str | Path) -> "ExplorationGraph":
        return cls.from_dict(json.loads(Path(path).read_text()))


class NavStack:
    def __init__(self):
        self._items: list[str] = []

    def __len__(self) -> int:
        return len(self._items)

    @property
    def items(self) -> list[str]:
        return list(self._items)

    def push(self, url: str) -> None:
        self._items.append(url)

    def pop(self) -> str:
        return self._items.pop()

    def peek(self) -> str | None:
        return self._items[-1] if self._items else None

    def replace_top(self, url: str) -> None:
        self._items[-1] = url


@dataclass(frozen=True)
class AgentRole:
    persona: str


@dataclass
class StepTrace:
    step: int
    url: str
    action: str
    target: str | None = None
    search_query: str | None = None
    coerced: bool = False
    reprompted: bool = False
    insight_chars: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    duration_ms: float = 0.0
    stack_after: list[str] = field(default_factory=list)
    node_count: int = 0
    edge_count: int = 0
    budget_remaining: int = 0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def synthetic_result_page(url: str, query: str, results: list[dict],
                          max_links: int) -> FetchedPage:
    """Minimal HTML document standing in for a search results page: one
    anchor plus one snippet paragraph per result."""
    seen: set[str] = set()
    links: list[str] = []
    rows: list[str] = []
    for r in results:
        target = canonicalize_url(str(r.get("url", "")))
        if not target or target in seen:
            continue
        seen.add(target)
        title = str(r.get("title", "")) or target
        snippet = str(r.get("snippet", ""))
        rows.append(
            f'<p><a href="{html_escape.escape(target, quote=True)}">'
            f"{html_escape.escape(title)}</a> {html_escape.escape(snippet)}</p>")
        if len(links) < max_links:
            links.append(target)
    body = "\n".join(rows) if rows else "<p>No results returned.</p>"
    doc = (f"<html><body><h1>Search results</h1>"
           f"<p>Query: {html_escape.escape(query)}</p>\n{body}</body></html>")
    result_lines = [
        " ".join(filter(None, [str(r.get("title", "")),
                               str(r.get("snippet", "")),
                               str(r.get("url", ""))]))
        for r in results]
    result_lines = [line for line in result_lines if line.strip()]
    if not result_lines:
        result_lines = ["No results returned."]
    text = "\n".join([f"Query: {query}"] + result_lines)
    return FetchedPage(url=url, content_kind="html", text=text, links=links,
                       byte_size=len(doc.encode("utf-8")))


def _first_keyword_line(text: str) -> str:
    for line in text.splitlines():
        stripped = line.strip()
        if stripped:
            return stripped
    return ""


def parse_meta_action(text: str) -> str | None:
    """First non-blank line must carry exactly one action keyword."""
    line = _first_keyword_line(text).upper()
    token = line.strip("*# `:.!-")
    hits = [a for a, kw in (("explore", "EXPLORE"),
                            ("backtrack", "BACKTRACK"),
                            ("web_search", "WEB_SEARCH")) if kw in token]
    if token in ("EXPLORE", "BACKTRACK", "WEB_SEARCH", "WEBSEARCH"):
        return "web_search" if token.startswith("WEB") else token.lower()
    if len(hits) == 1:
        return hits[0]
    return None


def parse_refined_query(text: str) -> str | None:
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.upper().startswith("QUERY:"):
            value = stripped[len("QUERY:"):].strip()
            return value or None
    return None


def parse_link_choice(text: str, n_candidates: int) -> int | None:
    line = _first_keyword_line(text)
    value = line
    if line.upper().startswith("LINK:"):
        value = line[len("LINK:"):].strip()
    try:
        index = int(value.strip("*# `"))
    except ValueError:
        return None
    if 0 <= index < n_candidates:
        return index
    return None


class ExplorationEngine:
    """Drives Algorithm-style exploration; step() is one budget unit."""

    def __init__(self, config: CaesarConfig, client: ChatClient,
                 search_provider, fetcher, embedder=None):
        self.config = config
        self.client = client
        self.search_provider = search_provider
        self.policy = FetchPolicy(allowed_domains=config.allowed_domains,
                                  max_revisits=config.max_revisits)
        self.perceiver = Perceiver(fetcher, self.policy,
                                   max_page_chars=config.max_page_chars,
                                   max_links_per_page=config.max_links_per_page)
        self.graph = ExplorationGraph()
        self.kb = KnowledgeBase(embedder=embedder,
                                chunk_size=config.chunk_size,
                                chunk_overlap=config.chunk_overlap)
        self.memory = EpisodicMemory()
        self.stack = NavStack()
        self.role: AgentRole | None = None
        self.traces: list[StepTrace] = []
        self.searches_used = 0
        self.steps_used = 0
        self.budget_remaining = config.exploration_budget
        self._search_seq = 0

    # -- llm plumbing -----------------------------------------------------

    def _complete(self, template_id: str, prompt: str) -> str:
        request = ChatRequest(
            template_id=template_id, prompt=prompt,
            system=self.role.persona if self.role else "",
            temperature=self.config.explore_temperature,
            reasoning_effort=self.config.explore_reasoning,
            max_output_tokens=self.config.max_output_tokens)
        return self.client.complete(request).text

    # -- bootstrap ---------------------------------------------------------

    def bootstrap(self) -> AgentRole:
        """Search expansion, synthetic root document, persona generation."""
        query = self.config.user_query
        try:
            expansion = self._complete("search_expansion", render(
                "search_expansion",
                {"initial_query": query, "max_terms": _MAX_AUX_TERMS}))
        except ProviderError as exc:
            raise BootstrapError(f"search expansion failed: {exc}") from exc
        terms: list[str] = [query]
        for line in expansion.splitlines():
            term = line.strip(" -*\t")
            if term and term not in terms:
                terms.append(term)
            if len(terms) > _MAX_AUX_TERMS:
                break
        results: list[dict] = []
        try:
            for term in terms:
                results.extend(self.search_provider.search(term))
        except SearchError as exc:
            raise BootstrapError(f"bootstrap search failed: {exc}") from exc
        root_page = synthetic_result_page(ROOT_URL, query, results,
                                          self.config.max_links_per_page)
        self.perceiver.register_synthetic(root_page)
        self.graph.add_root(ROOT_URL, step=0)
        self.stack.push(ROOT_URL)
        try:
            persona = self._complete("role_generation", render(
                "role_generation",
                {"initial_query": query, "root_content": root_page.text}))
        except ProviderError as exc:
            raise BootstrapError(f"role generation failed: {exc}") from exc
        self.role = AgentRole(persona=persona.strip())
        return self.role

    # -- think -------------------------------------------------------------

    def _think(self, page: FetchedPage) -> str:
        node = self.graph.nodes[page.url]
        neighbors = self.graph.neighbor_insights(page.url,
                                                 self.config.neighbor_context)
        blocks = [f"- URL: {n.url}\n  DEPTH: {n.depth}\n  INSIGHTS: {n.insights}"
                  for n in neighbors]
        prompt = render("think_insights", {
            "page_content": page.text,
            "initial_query": self.config.user_query,
            "past_insights": node.insights,
            "neighbor_insights": "\n".join(blocks) if blocks
            else "No neighbor insights available.",
        })
        return self._complete("think_insights", prompt).strip()

    # -- act ---------------------------------------------------------------

    def _kb_context(self) -> str:
        hits = self.kb.retrieve(self.config.user_query, self.config.retrieve_k)
        top = self.kb.rerank(self.config.user_query, hits, self.config.rerank_n)
        lines = [f"- [{e.metadata.get('source_url', '?')}] "
                 f"{e.text[:_PROMPT_SNIPPET_CHARS]}" for e in top]
        return "\n".join(lines)

    def _memory_context(self, keywords: list[str]) -> str:
        hits = self.memory.recall(keywords)
        lines = [f"- step {r.step}: {r.action} {r.from_url} -> "
                 f"{r.to_url or '(stack)'} | {r.reasoning[:160]}"
                 for r in hits]
        return "\n".join(lines)

    def _choose_meta(self, node: GraphNode, keywords: list[str]
                     ) -> tuple[str, str | None, str, bool, bool]:
        """Returns (action, refined_query, reasoning, coerced, reprompted)."""
        prompt = render("act_meta_strategy", {
            "current_step": self.steps_used,
            "max_steps": self.config.exploration_budget,
            "current_depth": node.depth,
            "max_depth": self.config.max_depth,
            "visited_count": len(self.policy.visit_counts),
            "current_url": node.url,
            "kb_context": self._kb_context(),
            "memory_context": self._memory_context(keywords),
        })
        reprompted = False
        text = self._complete("act_meta_strategy", prompt)
        action = parse_meta_action(text)
        if action is None:
            reprompted = True
            text = self._complete("act_meta_strategy", prompt)
            action = parse_meta_action(text)
        if action is None:
            return ACT_BACKTRACK, None, "unparseable meta decision", True, True
        refined = parse_refined_query(text) if action == ACT_WEB_SEARCH else None
        reasoning = text.strip()
        return action, refined, reasoning, False, reprompted

    def _choose_link(self, node: GraphNode, candidates: list[str]) -> tuple[int, bool]:
        listing = "\n".join(f"{i}. {url}" for i, url in enumerate(candidates))
        prompt = render("act_link_select", {
            "current_url": node.url,
            "initial_query": self.config.user_query,
            "kb_context": self._kb_context(),
            "candidate_links": listing,
        })
        text = self._complete("act_link_select", prompt)
        index = parse_link_choice(text, len(candidates))
        reprompted = False
        if index is None:
            reprompted = True
            text = self._complete("act_link_select", prompt)
            index = parse_link_choice(text, len(candidates))
        if index is None:
            index = 0  # deterministic fallback keeps the run moving
        return index, reprompted

    # -- the loop ----------------------------------------------------------

    def done(self) -> bool:
        return self.budget_remaining <= 0 or len(self.stack) == 0

    def step(self) -> StepTrace | None:
        """One Perceive-Think-Act iteration; None when the loop is over."""
        if self.role is None:
            raise RuntimeError("bootstrap() must run before step()")
        if self.done():
            return None
        started = time.perf_counter()
        rows_before = self.client.ledger.total_calls()

        self.budget_remaining -= 1
        self.steps_used += 1
        step_no = self.steps_used
        v_c = self.stack.peek()

        trace = StepTrace(step=step_no, url=v_c, action="",
                          budget_remaining=self.budget_remaining)

        page = self.perceiver.perceive(v_c)
        if page.valid and page.url != v_c:
            if page.url in self.graph.nodes:
                # redirect folded into an existing node, treat as invalid
                page = FetchedPage.invalid(v_c, "redirect into visited node")
            else:
                self.graph.rename_node(v_c, page.url)
                self.stack.replace_top(page.url)
                v_c = page.url
                trace.url = v_c
        node = self.graph.nodes[v_c]
        node.visit_count = self.policy.visit_counts.get(v_c, node.visit_count)

        if not page.valid:
            node.failed = True
            self.stack.pop()
            trace.action = ACT_POP_INVALID
            trace.target = self.stack.peek()
            return self._finish_trace(trace, started, rows_before)

        filtered = filter_links(page.links, self.policy)
        explore_candidates = [u for u in filtered if u not in self.graph.nodes]

        # think
        try:
            insights = self._think(page)
        except ProviderError:
            node.failed = True
            self.stack.pop()
            trace.action = ACT_THINK_FAILED
            trace.target = self.stack.peek()
            return self._finish_trace(trace, started, rows_before)
        if insights:
            self.graph.update_insights(v_c, insights)
            self.kb.add_text(insights, {
                "source_url": v_c, "step": step_no, "depth": node.depth,
                "phase": "explore"})
        trace.insight_chars = len(insights)
        keywords = extract_keywords(insights)

        # act
        try:
            action, refined, reasoning, coerced, reprompted = \
                self._choose_meta(node, keywords)
        except ProviderError:
            action, refined, reasoning, coerced, reprompted = (
                ACT_BACKTRACK, None, "meta decision provider failure", True, False)
        if action == ACT_WEB_SEARCH and self.searches_used >= self.config.max_web_searches:
            action, coerced = ACT_BACKTRACK, True
            reasoning = "web search budget exhausted; " + reasoning
        if action in (ACT_EXPLORE, ACT_WEB_SEARCH) \
                and node.depth + 1 > self.config.max_depth:
            action, coerced = ACT_BACKTRACK, True
            reasoning = "depth cap reached; " + reasoning
        if action == ACT_EXPLORE and not explore_candidates:
            action, coerced = ACT_BACKTRACK, True
            reasoning = "no unvisited candidates; " + reasoning

        if action == ACT_WEB_SEARCH:
            query = refined or self.config.user_query
            try:
                results = self.search_provider.search(query)
            except SearchError:
                action, coerced = ACT_BACKTRACK, True
                reasoning = "search provider failure; " + reasoning
            else:
                self.searches_used += 1
                self._search_seq += 1
                v_s = f"caesar://search/{self._search_seq}"
                search_page = synthetic_result_page(
                    v_s, query, results, self.config.max_links_per_page)
                self.perceiver.register_synthetic(search_page)
                self.graph.add_child(v_c, v_s, EDGE_SEARCH, step_no)
                self.stack.push(v_s)
                self.memory.record_move(EpisodicRecord(
                    step=step_no, from_url=v_c, action=ACT_WEB_SEARCH,
                    to_url=v_s, reasoning=reasoning, keywords=keywords))
                trace.action = ACT_WEB_SEARCH
                trace.target = v_s
                trace.search_query = query

        if action == ACT_EXPLORE:
            index, link_reprompted = self._choose_link(node, explore_candidates)
            reprompted = reprompted or link_reprompted
            v_n = explore_candidates[index]
            self.graph.add_child(v_c, v_n, EDGE_LINK, step_no)
            self.stack.push(v_n)
            self.memory.record_move(EpisodicRecord(
                step=step_no, from_url=v_c, action=ACT_EXPLORE,
                to_url=v_n, reasoning=reasoning, keywords=keywords))
            trace.action = ACT_EXPLORE
            trace.target = v_n

        if action == ACT_BACKTRACK:
            self.stack.pop()
            parent = self.stack.peek()
            self.memory.record_move(EpisodicRecord(
                step=step_no, from_url=v_c, action=ACT_BACKTRACK,
                to_url=parent, reasoning=reasoning, keywords=keywords),
                parent=parent)
            trace.action = ACT_BACKTRACK
            trace.target = parent

        trace.coerced = coerced
        trace.reprompted = reprompted
        return self._finish_trace(trace, started, rows_before)

    def _finish_trace(self, trace: StepTrace, started: float,
                      rows_before: int) -> StepTrace:
        trace.duration_ms = (time.perf_counter() - started) * 1000.0
        step_rows = self.client.ledger.rows[rows_before:]
        trace.input_tokens = sum(r.input_tokens for r in step_rows)
        trace.output_tokens = sum(r.output_tokens for r in step_rows)
        trace.stack_after = self.stack.items
        trace.node_count = len(self.graph.nodes)
        trace.edge_count = len(self.graph.edges)
        trace.budget_remaining = self.budget_remaining
        self.traces.append(trace)
        return trace

    def run(self) -> tuple[ExplorationGraph, KnowledgeBase]:
        if self.role is None:
            self.bootstrap()
        while True:
            if self.step() is None:
                break
        return self.graph, self.kb

    # -- outputs -----------------------------------------------------------

    def write_outputs(self, out_dir: str | Path) -> list[str]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.graph.write_json(out / "graph.json")
        self.kb.to_jsonl(out / "kb.jsonl")
        self.memory.to_jsonl(out / "memory.jsonl")
        with open(out / "trace.jsonl", "w") as fh:
            for t in self.traces:
                fh.write(t.to_json() + "\n")
        (out / "role.txt").write_text((self.role.persona if self.role else "") + "\n")
        return ["graph.json", "kb.jsonl", "memory.jsonl", "trace.jsonl", "role.txt"]
