"""Phase 2: adversarial artifact synthesis over a frozen knowledge base.

Per round: a recursive QA chain seeds a cited draft, then an adversarial
refinement turns the draft's weaknesses into the next round's query. After
N rounds the drafts merge into one artifact, optionally distilled into an
ELI5 rendering under a word limit.

Citations are inline [n] markers over a run-global source table (1-based,
first-retrieval-appearance order). Markers that do not resolve through the
table are stripped from the text, so every surviving marker is sound by
construction. Citation maps key claims by paragraph index.

The refinement after the final round is skipped and logged: its output
could never be consumed.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .config import CaesarConfig
from .knowledge import KnowledgeBase
from .llm import ChatClient, ChatRequest, ProviderError
from .prompts import render

_MARKER = re.compile(r"\[(\d+)\]")
_SENTENCE_END = re.compile(r"[.!?][\"')\]]*")


class EmptyKnowledgeBaseError(RuntimeError):
    """Synthesis needs at least one KB entry."""


@dataclass
class QAInsight:
    question: str
    answer: str
    sources: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"question": self.question, "answer": self.answer,
                "sources": list(self.sources)}


@dataclass
class InsightChain:
    insights: list[QAInsight] = field(default_factory=list)
    warning: str = ""

    def __len__(self) -> int:
        return len(self.insights)


@dataclass
class Draft:
    round: int
    text: str
    citation_map: dict[int, list[int]] = field(default_factory=dict)
    query: str = ""
    degraded: bool = False


@dataclass
class SynthesisResult:
    history: list[Draft]
    final_text: str
    final_citation_map: dict[int, list[int]]
    source_table: dict[int, str]
    eli5: str | None = None
    degraded: bool = False
    chains: list[InsightChain] = field(default_factory=list)
    refined_queries: list[str] = field(default_factory=list)


class SourceTable:
    """1-based URL indices in first-appearance order, stable for the run."""

    def __init__(self):
        self._by_url: dict[str, int] = {}
        self._by_index: dict[int, str] = {}

    def register(self, url: str) -> int:
        index = self._by_url.get(url)
        if index is None:
            index = len(self._by_url) + 1
            self._by_url[url] = index
            self._by_index[index] = url
        return index

    def url_for(self, index: int) -> str | None:
        return self._by_index.get(index)

    def as_dict(self) -> dict[int, str]:
        return dict(self._by_index)

    def __len__(self) -> int:
        return len(self._by_url)


def word_count(text: str) -> int:
    return len(text.split())


def truncate_at_sentence(text: str, word_limit: int) -> str:
    """At most word_limit whitespace words, cut at the last sentence end."""
    words = text.split()
    if len(words) <= word_limit:
        return text.strip()
    candidate = " ".join(words[:word_limit])
    last = None
    for match in _SENTENCE_END.finditer(candidate):
        last = match
    if last is not None:
        return candidate[:last.end()].strip()
    return candidate.strip() + "."


class Synthesizer:
    def __init__(self, kb: KnowledgeBase, config: CaesarConfig,
                 client: ChatClient):
        self.kb = kb
        self.config = config
        self.client = client
        self.sources = SourceTable()
        self.trace: list[dict] = []
        self.degraded = False

    # -- plumbing ----------------------------------------------------------

    def _complete(self, template_id: str, prompt: str) -> str:
        request = ChatRequest(
            template_id=template_id, prompt=prompt,
            temperature=self.config.synth_temperature,
            reasoning_effort=self.config.synth_reasoning,
            max_output_tokens=self.config.max_output_tokens)
        return self.client.complete(request).text

    def _log(self, event: str, **fields) -> None:
        self.trace.append({"event": event, **fields})

    # -- recursive insight QA ------------------------------------------------

    def _render_qa_pairs(self, insights: list[QAInsight]) -> str:
        window = insights[-self.config.max_qa_history:]
        blocks = []
        for i, ins in enumerate(window, start=1):
            src = ", ".join(str(s) for s in ins.sources) or "none"
            blocks.append(f"[{i}] Q: {ins.question}\n"
                          f"    A: {ins.answer}\n"
                          f"    SOURCES: {src}")
        return "\n".join(blocks) if blocks else "No insights gathered yet."

    def generate_insight_qa(self, seed_query: str) -> InsightChain:
        """Retrieve, answer, follow up; at most insight_budget iterations."""
        if len(self.kb) == 0:
            raise EmptyKnowledgeBaseError(
                "knowledge base empty, cannot build an insight chain")
        chain = InsightChain()
        query = seed_query
        for t in range(1, self.config.insight_budget + 1):
            hits = self.kb.retrieve(query, self.config.retrieve_k)
            top = self.kb.rerank(query, hits, self.config.rerank_n)
            context_lines = []
            source_ids: list[int] = []
            for entry in top:
                url = entry.metadata["source_url"]
                idx = self.sources.register(url)
                context_lines.append(f"[{idx}] ({url}) {entry.text}")
                if idx not in source_ids \
                        and len(source_ids) < self.config.max_citations_per_claim:
                    source_ids.append(idx)
            try:
                answer = self._complete("qa_answer", render("qa_answer", {
                    "question": query,
                    "retrieved_context": "\n".join(context_lines)
                    or "No relevant insights retrieved.",
                })).strip()
            except ProviderError as exc:
                chain.warning = f"answer generation failed at t={t}: {exc}"
                break
            chain.insights.append(QAInsight(question=query, answer=answer,
                                            sources=source_ids))
            self._log("qa", t=t, question=query, sources=source_ids)
            if t == self.config.insight_budget:
                break
            try:
                followup = self._complete("qa_followup", render("qa_followup", {
                    "list_of_qa_insights": self._render_qa_pairs(chain.insights),
                })).strip()
            except ProviderError as exc:
                chain.warning = f"follow-up generation failed at t={t}: {exc}"
                break
            if not followup or followup.upper().startswith("STOP"):
                break
            query = followup
        return chain

    # -- drafting ------------------------------------------------------------

    def _sanitize_citations(self, text: str) -> tuple[str, dict[int, list[int]]]:
        """Strip unresolvable [n] markers; map resolvable ones per paragraph."""
        citation_map: dict[int, list[int]] = {}
        paragraphs = [p for p in re.split(r"\n\s*\n", text) if p.strip()]
        cleaned: list[str] = []
        cap = self.config.max_citations_per_claim
        for claim_index, para in enumerate(paragraphs, start=1):
            kept: list[int] = []

            def repl(match: re.Match) -> str:
                idx = int(match.group(1))
                if self.sources.url_for(idx) is None:
                    return ""
                if idx not in kept and len(kept) < cap:
                    kept.append(idx)
                return match.group(0)

            new_para = _MARKER.sub(repl, para)
            new_para = re.sub(r"[ \t]{2,}", " ", new_para)
            cleaned.append(new_para.strip())
            if kept:
                citation_map[claim_index] = kept
        return "\n\n".join(cleaned), citation_map

    def generate_draft(self, chain: InsightChain, previous_text: str,
                       round_k: int, starting_query: str) -> Draft:
        if not chain.insights:
            raise ValueError("cannot draft from an empty insight chain")
        prompt = render("draft_generation", {
            "list_of_qa_insights": self._render_qa_pairs(chain.insights),
            "artifact_text": previous_text,
            "starting_query": starting_query,
        })
        try:
            response = self._complete("draft_generation", prompt)
        except ProviderError as exc:
            self.degraded = True
            self._log("draft_degraded", round=round_k, error=str(exc))
            text, cmap = self._sanitize_citations(previous_text)
            return Draft(round=round_k, text=text, citation_map=cmap,
                         query=starting_query, degraded=True)
        text, cmap = self._sanitize_citations(response.strip())
        self._log("draft", round=round_k, chars=len(text),
                  claims=len(cmap))
        return Draft(round=round_k, text=text, citation_map=cmap,
                     query=starting_query)

    def refine_query(self, draft_text: str, previous_query: str) -> str:
        prompt = render("refine_query", {
            "previous_query": previous_query,
            "artifact_text": draft_text,
        })
        try:
            response = self._complete("refine_query", prompt).strip()
        except ProviderError as exc:
            self._log("refine_degraded", error=str(exc))
            return previous_query
        if not response:
            self._log("refine_empty", fallback=previous_query)
            return previous_query
        self._log("refine", query=response)
        return response

    # -- merge and post-process ----------------------------------------------

    def merge_drafts(self, history: list[Draft]) -> tuple[str, dict[int, list[int]]]:
        if not history:
            raise ValueError("no drafts to merge")
        blocks = [f"DRAFT {d.round}:\n{d.text}" for d in history]
        prompt = render("merge_drafts", {
            "list_of_artifact_drafts": "\n\n".join(blocks),
        })
        merged_map: dict[int, list[int]] = {}
        cap = self.config.max_citations_per_claim
        for draft in history:
            for claim, srcs in draft.citation_map.items():
                bucket = merged_map.setdefault(claim, [])
                for s in srcs:
                    if s not in bucket and len(bucket) < cap:
                        bucket.append(s)
        try:
            response = self._complete("merge_drafts", prompt)
        except ProviderError as exc:
            self.degraded = True
            self._log("merge_degraded", error=str(exc))
            last = history[-1]
            return last.text, dict(last.citation_map)
        text, _ = self._sanitize_citations(response.strip())
        self._log("merge", chars=len(text), drafts=len(history))
        return text, merged_map

    def postprocess_eli5(self, final_text: str,
                         word_limit: int | None = None) -> str:
        template = "eli5_unconstrained" if word_limit is None else "eli5_constrained"
        bindings: dict[str, object] = {"artifact_text": final_text}
        if word_limit is not None:
            bindings["word_limit"] = word_limit
        prompt = render(template, bindings)
        attempts = 1
        text = self._complete(template, prompt).strip()
        if word_limit is None:
            self._log("eli5", attempts=attempts, truncated=False)
            return text
        # 2 re-prompts, then a hard cut at the last sentence boundary
        while word_count(text) > word_limit and attempts < 3:
            attempts += 1
            text = self._complete(template, prompt).strip()
        truncated = word_count(text) > word_limit
        if truncated:
            text = truncate_at_sentence(text, word_limit)
        self._log("eli5", attempts=attempts, truncated=truncated)
        return text

    # -- pipeline --------------------------------------------------------------

    def synthesize(self, initial_query: str | None = None,
                   eli5: bool = True,
                   eli5_word_limit: int | None = 450) -> SynthesisResult:
        if len(self.kb) == 0:
            raise EmptyKnowledgeBaseError("knowledge base empty")
        query = self.config.user_query if initial_query is None else initial_query
        history: list[Draft] = []
        chains: list[InsightChain] = []
        refined: list[str] = []
        previous_text = ""
        rounds = self.config.refinement_rounds
        for k in range(1, rounds + 1):
            chain = self.generate_insight_qa(query)
            chains.append(chain)
            draft = self.generate_draft(chain, previous_text, k, query)
            history.append(draft)
            previous_text = draft.text
            if k < rounds:
                query = self.refine_query(draft.text, query)
                refined.append(query)
            else:
                self._log("refine_skipped", round=k,
                          reason="final round output would be unused")
        final_text, final_map = self.merge_drafts(history)
        eli5_text = self.postprocess_eli5(final_text, eli5_word_limit) \
            if eli5 else None
        return SynthesisResult(
            history=history, final_text=final_text,
            final_citation_map=final_map, source_table=self.sources.as_dict(),
            eli5=eli5_text, degraded=self.degraded, chains=chains,
            refined_queries=refined)

    # -- outputs ----------------------------------------------------------------

    def write_outputs(self, result: SynthesisResult,
                      out_dir: str | Path) -> list[str]:
        out = Path(out_dir)
        (out / "drafts").mkdir(parents=True, exist_ok=True)
        written: list[str] = []
        for draft, chain in zip(result.history, result.chains):
            draft_name = f"drafts/draft_{draft.round}.md"
            (out / draft_name).write_text(draft.text + "\n")
            chain_name = f"qa_chain_{draft.round}.jsonl"
            with open(out / chain_name, "w") as fh:
                for ins in chain.insights:
                    fh.write(json.dumps(ins.to_dict(), sort_keys=True) + "\n")
            written += [draft_name, chain_name]
        (out / "final.md").write_text(render_final_markdown(result))
        written.append("final.md")
        if result.eli5 is not None:
            (out / "eli5.txt").write_text(result.eli5 + "\n")
            written.append("eli5.txt")
        with open(out / "synthesis_trace.jsonl", "w") as fh:
            for row in self.trace:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
        written.append("synthesis_trace.jsonl")
        return written


def render_final_markdown(result: SynthesisResult) -> str:
    lines = [result.final_text.rstrip(), "", "## Sources", ""]
    lines.append("| # | URL |")
    lines.append("|---|-----|")
    for index in sorted(result.source_table):
        lines.append(f"| {index} | {result.source_table[index]} |")
    return "\n".join(lines) + "\n"
