"""Blinded multi-judge scoring of competing answers.

Every trial shuffles the answer order under a fresh label mapping, so a
judge never sees which agent produced what. All answers for a query go to
the judge in a single prompt; the reply must carry one score line per
label. A trial that stays unparseable after one re-prompt is discarded
with a warning rather than poisoning the aggregate.

Self-preference bias compares a judge's scores on answers from its own
model family against what the other judges gave those same answers.
"""

from __future__ import annotations

import csv
import json
import random
import re
from dataclasses import dataclass
from pathlib import Path

from .llm import ChatClient, ChatRequest, ProviderError
from .mwu import mann_whitney_u
from .prompts import render

DIMENSIONS = ("new", "useful", "surprising")

_SCORE_LINE = re.compile(
    r"^\s*\**\s*([A-Za-z0-9_]+)\s*\**\s*:\s*"
    r"new\s*=\s*(\d+)\s*,?\s*useful\s*=\s*(\d+)\s*,?\s*surprising\s*=\s*(\d+)",
    re.MULTILINE)


class JudgeError(RuntimeError):
    pass


@dataclass(frozen=True)
class JudgeScore:
    query: str
    judge: str
    trial: int
    agent: str
    new: int
    useful: int
    surprising: int

    @property
    def total(self) -> int:
        return self.new + self.useful + self.surprising


def _labels(count: int) -> list[str]:
    return [f"ANSWER_{i}" for i in range(1, count + 1)]


def _parse_scores(text: str, labels: list[str]) -> dict[str, tuple[int, int, int]] | None:
    """One valid line per expected label, scores in 1..10; else None."""
    found: dict[str, tuple[int, int, int]] = {}
    for match in _SCORE_LINE.finditer(text):
        label = match.group(1)
        if not label.startswith("ANSWER_"):
            continue
        # a label outside the presented set means the judge lost the plot
        if label not in labels or label in found:
            return None
        scores = tuple(int(g) for g in match.group(2, 3, 4))
        if any(s < 1 or s > 10 for s in scores):
            return None
        found[label] = scores  # type: ignore[assignment]
    if set(found) != set(labels):
        return None
    return found


def judge_batch(query: str, answers: dict[str, str],
                judges: dict[str, ChatClient], trials: int = 3,
                seed: int = 0) -> tuple[list[JudgeScore], list[str]]:
    """Score all answers with every judge over the given number of trials."""
    if not answers:
        raise JudgeError("no answers to judge")
    if not judges:
        raise JudgeError("no judges configured")
    agents = sorted(answers)
    scores: list[JudgeScore] = []
    warnings: list[str] = []
    for judge_name in sorted(judges):
        client = judges[judge_name]
        for trial in range(1, trials + 1):
            rng = random.Random(f"{seed}:{judge_name}:{trial}")
            order = list(agents)
            rng.shuffle(order)
            labels = _labels(len(order))
            label_to_agent = dict(zip(labels, order))
            block = "\n\n".join(
                f"{label}:\n{answers[agent]}"
                for label, agent in label_to_agent.items())
            prompt = render("judge_rubric",
                            {"query": query, "answers_block": block})
            parsed = None
            for attempt in range(2):
                try:
                    response = client.complete(ChatRequest(
                        template_id="judge_rubric", prompt=prompt)).text
                except ProviderError as exc:
                    warnings.append(
                        f"judge {judge_name} trial {trial}: provider error: {exc}")
                    break
                parsed = _parse_scores(response, labels)
                if parsed is not None:
                    break
                if attempt == 0:
                    warnings.append(
                        f"judge {judge_name} trial {trial}: unparseable "
                        "response, re-prompting once")
            if parsed is None:
                warnings.append(
                    f"judge {judge_name} trial {trial}: discarded")
                continue
            for label, agent in label_to_agent.items():
                new, useful, surprising = parsed[label]
                scores.append(JudgeScore(
                    query=query, judge=judge_name, trial=trial, agent=agent,
                    new=new, useful=useful, surprising=surprising))
    return scores, warnings


def aggregate(scores: list[JudgeScore]) -> dict[str, dict[str, float]]:
    """Per-agent dimension means over all (judge, trial) rows, plus total."""
    by_agent: dict[str, list[JudgeScore]] = {}
    for row in scores:
        by_agent.setdefault(row.agent, []).append(row)
    result: dict[str, dict[str, float]] = {}
    for agent in sorted(by_agent):
        rows = by_agent[agent]
        means = {dim: sum(getattr(r, dim) for r in rows) / len(rows)
                 for dim in DIMENSIONS}
        means["total"] = sum(means[dim] for dim in DIMENSIONS)
        result[agent] = means
    return result


def self_preference_bias(scores: list[JudgeScore],
                         agent_families: dict[str, str],
                         judge_families: dict[str, str],
                         per_dimension: bool = False):
    """Judge's mean on same-family agents minus the other judges' mean there.

    Returns judge -> float, or judge -> {dimension: float} when
    per_dimension is set.
    """
    judges = sorted({row.judge for row in scores})
    result: dict[str, object] = {}
    for judge in judges:
        family = judge_families.get(judge)
        if family is None:
            raise JudgeError(f"no family recorded for judge {judge!r}")
        kin = sorted(a for a, fam in agent_families.items() if fam == family)
        if not kin:
            raise JudgeError(
                f"bias undefined for judge {judge!r}: no agent shares "
                f"family {family!r}")
        own = [r for r in scores if r.judge == judge and r.agent in kin]
        others = [r for r in scores if r.judge != judge and r.agent in kin]
        if not own or not others:
            raise JudgeError(
                f"bias undefined for judge {judge!r}: missing score rows "
                "for same-family agents")

        def mean_of(rows, dim):
            if dim == "total":
                return sum(r.total for r in rows) / len(rows)
            return sum(getattr(r, dim) for r in rows) / len(rows)

        if per_dimension:
            result[judge] = {dim: mean_of(own, dim) - mean_of(others, dim)
                             for dim in DIMENSIONS}
        else:
            result[judge] = mean_of(own, "total") - mean_of(others, "total")
    return result


def pairwise_mwu(scores: list[JudgeScore]) -> dict[str, dict[str, float | str]]:
    """Two-sided U test on total scores for each agent pair."""
    by_agent: dict[str, list[float]] = {}
    for row in scores:
        by_agent.setdefault(row.agent, []).append(float(row.total))
    agents = sorted(by_agent)
    out: dict[str, dict[str, float | str]] = {}
    for i, a in enumerate(agents):
        for b in agents[i + 1:]:
            res = mann_whitney_u(by_agent[a], by_agent[b])
            out[f"{a}_vs_{b}"] = {
                "u_statistic": res.u_statistic, "p_value": res.p_value,
                "method": res.method, "n_a": res.n_a, "n_b": res.n_b}
    return out


def write_scores_csv(path: str | Path, scores: list[JudgeScore]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query", "judge", "trial", "agent",
                         "new", "useful", "surprising", "total"])
        for row in scores:
            writer.writerow([row.query, row.judge, row.trial, row.agent,
                             row.new, row.useful, row.surprising, row.total])


def write_summary_json(path: str | Path, scores: list[JudgeScore],
                       agent_families: dict[str, str] | None = None,
                       judge_families: dict[str, str] | None = None,
                       warnings: list[str] | None = None) -> dict:
    summary: dict = {"means": aggregate(scores)}
    if agent_families and judge_families:
        try:
            summary["bias"] = self_preference_bias(
                scores, agent_families, judge_families)
        except JudgeError as exc:
            summary["bias_error"] = str(exc)
    summary["mwu"] = pairwise_mwu(scores)
    if warnings:
        summary["warnings"] = list(warnings)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
