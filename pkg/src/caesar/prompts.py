"""Prompt templates for both phases plus judging.

The exploration and synthesis bodies are the published abridged prompt
listings, kept verbatim and treated as canonical. Two kinds of additions are
ours and are marked in the body comments below:

- RESPONSE FORMAT blocks, because the engine parses decisions, link choices,
  citations and scores mechanically and the abridged listings carry no output
  schema.
- Templates with no published listing at all (role generation, link
  selection, search expansion, QA answering), written in the same register.

Placeholders are ``{name}``. Some placeholders substitute a fixed fallback
string when bound to the empty string; those fallbacks are part of the
published prompt text, not an invention.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field as dc_field
from typing import Mapping


class TemplateId(str, enum.Enum):
    think_insights = "think_insights"
    act_meta_strategy = "act_meta_strategy"
    act_link_select = "act_link_select"
    role_generation = "role_generation"
    qa_followup = "qa_followup"
    draft_generation = "draft_generation"
    refine_query = "refine_query"
    merge_drafts = "merge_drafts"
    eli5_constrained = "eli5_constrained"
    eli5_unconstrained = "eli5_unconstrained"
    judge_rubric = "judge_rubric"
    # ids below have no published listing; see module docstring
    search_expansion = "search_expansion"
    qa_answer = "qa_answer"


PHASE_EXPLORE = "explore"
PHASE_SYNTH = "synth"


class PromptError(KeyError):
    """Unknown template id or a binding missing for a placeholder."""


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str
    phase: str
    empty_fallbacks: Mapping[str, str] = dc_field(default_factory=dict)

    def placeholders(self) -> list[str]:
        return sorted(set(_PLACEHOLDER.findall(self.body)))


_PLACEHOLDER = re.compile(r"\{([a-z][a-z0-9_]*)\}")


_THINK_INSIGHTS = """\
PAGE CONTENT: {page_content}

INITIAL QUERY: {initial_query}

PAST INSIGHTS: {past_insights}

NEIGHBOR INSIGHTS: {neighbor_insights}

YOUR TASK:
Analyze this content and extract key insights focusing on:
- Novel patterns or unexpected connections
- Assumptions being made and alternative perspectives
- Interesting questions raised by the content
- How to answer the query
- How this builds upon or challenges past/neighbor insights

Depending on the complexity of the content, provide anywhere from 1 to 6 concise but substantive insights, but do not exceed ~600 words in total length:
"""

_ACT_META_STRATEGY = """\
CURRENT EXPLORATION CONTEXT:
- Current step: {current_step}/{max_steps}
- Current depth: {current_depth}/{max_depth}
- Web pages visited: {visited_count}
- Current URL: {current_url}

CURRENT EXPLORATION INSIGHTS:
{kb_context}

HISTORICAL NAVIGATION PATTERNS:
{memory_context}

Analyze whether the agent should:
1. **EXPLORE** new un-visited pages to discover novel information or knowledge
2. **BACKTRACK** to the immediate previously visited page to try alternative paths
3. **WEB_SEARCH** relevant topics to address current exploration insights

Consider:
- Knowledge gaps vs areas of saturation
- Depth of current exploration branch
- Success patterns from previous decisions
- Risk/reward of new exploration vs consolidation

RESPONSE FORMAT:
First line: exactly one of EXPLORE, BACKTRACK, WEB_SEARCH.
If WEB_SEARCH, second line: QUERY: <the refined search query>.
Any further lines: brief reasoning for the decision.
"""

_ACT_LINK_SELECT = """\
CURRENT URL: {current_url}

INITIAL QUERY: {initial_query}

EXPLORATION CONTEXT:
{kb_context}

CANDIDATE LINKS (0-indexed):
{candidate_links}

YOUR TASK:
Act as a discriminator over the candidate links. Rank them by expected
information gain toward the query given the exploration context, and commit
to the single most promising unvisited link.

RESPONSE FORMAT:
First line: LINK: <index of the chosen candidate>.
Any further lines: brief reasoning for the choice.
"""

_ROLE_GENERATION = """\
USER QUERY: {initial_query}

INITIAL SEARCH RESULTS:
{root_content}

YOUR TASK:
Synthesize a specialized research persona for an autonomous web exploration
agent assigned to this query. The persona must state an explicit goal and an
exploration philosophy suited to the domain of the query and the character
of the initial results. Respond with the persona text only.
"""

_QA_FOLLOWUP = """\
PREVIOUS INSIGHTS: {list_of_qa_insights}

YOUR TASK:
Based on the insights gathered so far, what is the next most important question to ask
to deepen understanding and reveal emergent patterns? The question should:
- Build on previous insights rather than repeat them
- Seek connections between different themes
- Identify gaps or contradictions to explore
- Move toward synthesis and creation rather than enumeration
"""

_DRAFT_GENERATION = """\
KEY INSIGHTS: {list_of_qa_insights}

PREVIOUS ARTIFACT: {artifact_text}

YOUR TASK:
Drawing heavily upon the patterns that emerged from the key insights, and building upon the previous artifact, create a novel, exciting, and thought provoking artifact that creatively answers this query: {starting_query}
- Emergent patterns not visible in individual sources
- Novel discoveries, connections, or applications
- Surprising new directions or perspectives
- Interesting tensions, contradictions, or open questions

IMPORTANT: do NOT mention or reference the previous artifact, the new artifact should make sense by itself as a standalone text.
IMPORTANT: Avoid excessive jargon, ensure artifact text is well-organized (logical, clear, focused), and convincing to a skeptical reader
IMPORTANT: Support claims with inline bracketed citation markers such as [3], using only the source numbers attached to the key insights above.
"""

_REFINE_QUERY = """\
PREVIOUS QUERY: {previous_query}

PREVIOUS ARTIFACT: {artifact_text}

YOUR TASK:
Based on the previous query and artifact above, identify the most promising direction for deeper exploration. What NEW question or angle would:
- Build on the insights already discovered
- Explore gaps, contradictions, or unexplored connections
- Lead to novel perspectives or applications
- Go deeper rather than broader

The refined query should be concise (1-2 sentences), straightforward, clear, and understandable.
"""

_MERGE_DRAFTS = """\
ARTIFACT DRAFTS: {list_of_artifact_drafts}

YOUR TASK:
Create a comprehensive merged artifact that:
- Combines the draft artifacts into a single cohesive and complete artifact
- Selectively integrates the most interesting, relevant insights across all draft artifacts
- Discovers emergent patterns not visible in individual artifacts
- Further develops the core strengths while addressing the weaknesses of the draft artifacts

IMPORTANT: Keep the inline bracketed citation markers such as [3] from the drafts attached to the claims they support.
"""

_ELI5_COMMON = """\
For the query answer above, write an "Explain Like I'm 5" (ELI5) explanation:
 - Do NOT mention or reference the original answer, your explanation should be a standalone text
 - Your target audience is a non-expert but college educated reader
 - Capture the main ideas without oversimplifying
 - Clarify any confusing or convoluted parts of the answer
"""

_ELI5_CONSTRAINED = "{artifact_text}\n\n" + _ELI5_COMMON + """
IMPORTANT: Your explanation for each answer MUST be within {word_limit} words, double check to make sure
"""

# the unconstrained variant omits the final IMPORTANT line
_ELI5_UNCONSTRAINED = "{artifact_text}\n\n" + _ELI5_COMMON

_JUDGE_RUBRIC = """\
### Your Task

**Role:** You are an expert evaluator that is trying to mimic the behavior and thought process of a human judge. Your task is to score a set of answers from LLM agents using the "New, Useful, and Surprising" (NUS) metrics on a 1-10 scale.

### Scoring Guide Rubric

## 1. New (Global Novelty & Rarity)

**Overview:** Rarity of content. Is this a genuinely new invention or a familiar trope?

* **9-10 (Exceptional):** **Genuine invention.** No reliance on established tropes or archetypes; feels like a "first of its kind" concept.
* **7-8 (High):** **Fresh synthesis.** Combines known ideas in a novel way; avoids common "low-hanging fruit" concepts.
* **5-6 (Moderate):** **Clever remix.** Deviation from cliches is evident, but the idea is clearly built on familiar foundations.
* **3-4 (Low):** **Standard execution.** A competent but uninspired version of a well-known trope or common idea.
* **1-2 (Very Low):** **Generic cliche.** A simple restatement of the prompt or high-frequency training data response.

## 2. Useful (Viability & Alignment)

**Overview:** Logic and value. Is the idea actionable and aligned with the prompt's constraints?

* **9-10 (Exceptional):** **Optimal & Transformative.** Bulletproof logic that provides more insight or efficiency than the user anticipated.
* **7-8 (High):** **High-Value & Complete.** Robust, professional-grade output that addresses all nuances with no logical gaps.
* **5-6 (Moderate):** **Functional but Basic.** Addresses core requests but offers no additional depth; the bare minimum to be "correct."
* **3-4 (Low):** **Flawed or Superficial.** Fails to account for obvious constraints; technically on-topic but difficult to implement.
* **1-2 (Very Low):** **Counter-productive.** Irrelevant, logically broken, or rendered useless by the "New/Surprising" elements.

## 3. Surprising (Local Subversion & Trajectory)

**Overview:** Unpredictability of the path. Did the model take a "lateral leap" or the path of least resistance?

* **9-10 (Exceptional):** **Lateral leap.** Logic is sound but impossible to guess from the prompt; creates a genuine "wow" moment.
* **7-8 (High):** **Clever subversion.** Not the first or second thing a human would brainstorm; chooses a creative "side-path."
* **5-6 (Moderate):** **Minor pivot.** Follows a straightforward trajectory but adds a slight twist that prevents total predictability.
* **3-4 (Low):** **Linear extension.** A simple, logical "next step." If the prompt is A, the response is B.
* **1-2 (Very Low):** **Highly predictable.** The most obvious "default" answer; exactly what was expected with no deviation.

### Query

{query}

### Answers to Evaluate

{answers_block}

### Response Format

Score every answer against the rubric. Emit exactly one line per answer and
nothing else, in the form:
LABEL: new=<integer 1-10> useful=<integer 1-10> surprising=<integer 1-10>
where LABEL is the label the answer carries above.
"""

_SEARCH_EXPANSION = """\
USER QUERY: {initial_query}

YOUR TASK:
Expand the query into auxiliary web search terms that together cover its
distinct facets. Respond with one search term or phrase per line, at most
{max_terms} lines, most important first.
"""

_QA_ANSWER = """\
QUESTION: {question}

RETRIEVED INSIGHTS:
{retrieved_context}

YOUR TASK:
Answer the question using only the retrieved insights above. Be concise and
substantive, and flag genuine uncertainty instead of papering over it.
"""


TEMPLATES: dict[str, PromptTemplate] = {
    t.template_id: t for t in (
        PromptTemplate("think_insights", _THINK_INSIGHTS, PHASE_EXPLORE),
        PromptTemplate(
            "act_meta_strategy", _ACT_META_STRATEGY, PHASE_EXPLORE,
            empty_fallbacks={
                "kb_context": "No exploration insights available.",
                "memory_context": "No exploration history available.",
            },
        ),
        PromptTemplate("act_link_select", _ACT_LINK_SELECT, PHASE_EXPLORE,
                       empty_fallbacks={
                           "kb_context": "No exploration insights available.",
                       }),
        PromptTemplate("role_generation", _ROLE_GENERATION, PHASE_EXPLORE),
        PromptTemplate("qa_followup", _QA_FOLLOWUP, PHASE_SYNTH),
        PromptTemplate(
            "draft_generation", _DRAFT_GENERATION, PHASE_SYNTH,
            empty_fallbacks={
                "artifact_text": "No previous artifact available.",
            },
        ),
        PromptTemplate("refine_query", _REFINE_QUERY, PHASE_SYNTH),
        PromptTemplate("merge_drafts", _MERGE_DRAFTS, PHASE_SYNTH),
        PromptTemplate("eli5_constrained", _ELI5_CONSTRAINED, PHASE_SYNTH),
        PromptTemplate("eli5_unconstrained", _ELI5_UNCONSTRAINED, PHASE_SYNTH),
        PromptTemplate("judge_rubric", _JUDGE_RUBRIC, PHASE_SYNTH),
        PromptTemplate("search_expansion", _SEARCH_EXPANSION, PHASE_EXPLORE),
        PromptTemplate("qa_answer", _QA_ANSWER, PHASE_SYNTH),
    )
}


def get_template(template_id: str | TemplateId) -> PromptTemplate:
    key = template_id.value if isinstance(template_id, TemplateId) else str(template_id)
    try:
        return TEMPLATES[key]
    except KeyError:
        raise PromptError(f"unknown template id: {key!r}") from None


def render(template_id: str | TemplateId, bindings: Mapping[str, object]) -> str:
    """Substitute bindings into the template body.

    Every placeholder must be bound (empty string is a valid binding and may
    trigger the template's documented fallback text). Extra bindings are
    ignored. The result never contains an unfilled placeholder.
    """
    template = get_template(template_id)

    def substitute(match: re.Match) -> str:
        name = match.group(1)
        if name not in bindings:
            raise PromptError(
                f"template {template.template_id!r}: missing binding {name!r}")
        value = str(bindings[name])
        if value == "" and name in template.empty_fallbacks:
            return template.empty_fallbacks[name]
        return value

    return _PLACEHOLDER.sub(substitute, template.body)
