"""Command line interface.

Subcommands: run (explore then synthesize), explore, synthesize, judge,
graph (stats / export / embeddings), init-config.

Exit codes: 0 success, 1 completed degraded (warnings, fallbacks, empty
knowledge base after a zero-budget run), 2 aborted before producing a
usable result. --help always exits 0 without touching the filesystem.

A run directory is written manifest-first: manifest.json lands before any
fetch or model call, then graph.json, kb.jsonl, memory.jsonl, trace.jsonl,
drafts/, final.md, eli5.txt, stats.json as the phases complete.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .config import CaesarConfig, ConfigError, RunManifest, default_config_dict, load_config
from .explore import BootstrapError, ExplorationEngine, ExplorationGraph, GraphIntegrityError
from .graphtools import compute_stats, export, export_embeddings
from .judge import JudgeError, judge_batch, write_scores_csv, write_summary_json
from .knowledge import EpisodicMemory, KnowledgeBase
from .llm import ChatClient, CredentialError, OpenAICompatProvider, ProviderError, ScriptedProvider, TokenLedger
from .synthesis import EmptyKnowledgeBaseError, Synthesizer
from .web import FetchError, FixtureSearchProvider, LiveFetcher, LiveSearchProvider, OfflineFetcher, SearchError

DEFAULT_SEED = 1337

EXIT_OK = 0
EXIT_DEGRADED = 1
EXIT_ABORT = 2

_SOURCE_ROW = re.compile(r"^\|\s*(\d+)\s*\|\s*(\S+)\s*\|\s*$", re.MULTILINE)
_BODY_MARKER = re.compile(r"\[(\d+)\]")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_ABORT


def _build_config(args) -> CaesarConfig:
    config = load_config(getattr(args, "config", None))
    overrides = {}
    if getattr(args, "query", None) is not None:
        overrides["user_query"] = args.query
    if getattr(args, "budget", None) is not None:
        overrides["exploration_budget"] = args.budget
    if getattr(args, "rounds", None) is not None:
        overrides["refinement_rounds"] = args.rounds
    return config.replace(**overrides) if overrides else config


def _build_providers(args):
    """(fetcher, search, llm provider, provider names) for the chosen mode."""
    if args.mode == "offline":
        if not args.corpus:
            raise FetchError("offline mode requires --corpus <manifest.json>")
        fetcher = OfflineFetcher(args.corpus)
        if not args.search_fixtures:
            raise SearchError(
                "offline mode requires --search-fixtures <fixtures.json>")
        search = FixtureSearchProvider.from_file(args.search_fixtures)
        if not args.llm_script:
            raise ProviderError(
                "offline mode requires --llm-script <script.json>")
        provider = ScriptedProvider.from_file(args.llm_script)
        names = {"fetcher": "offline", "search": "fixture", "llm": "scripted"}
    else:
        fetcher = LiveFetcher()
        search = LiveSearchProvider()
        provider = OpenAICompatProvider()
        names = {"fetcher": "live", "search": "live", "llm": "openai_compat"}
    return fetcher, search, provider, names


def _write_stats(out: Path, engine: ExplorationEngine,
                 cited_urls: list[str]) -> None:
    stats = compute_stats(engine.graph, engine.memory, cited_urls)
    (out / "stats.json").write_text(
        json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n")


def _cited_urls(result) -> list[str]:
    urls: list[str] = []
    for indices in result.final_citation_map.values():
        for idx in indices:
            url = result.source_table.get(idx)
            if url and url not in urls:
                urls.append(url)
    return sorted(urls)


def cmd_run(args) -> int:
    config = _build_config(args)
    if not config.user_query:
        return _fail("a query is required (--query or config user_query)")
    try:
        fetcher, search, provider, names = _build_providers(args)
    except (FetchError, SearchError, ProviderError) as exc:
        return _fail(str(exc))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.create(config, names, out)
    manifest_path = out / "manifest.json"
    manifest.write(manifest_path)

    ledger = TokenLedger()
    client = ChatClient(provider, ledger=ledger)
    engine = ExplorationEngine(config, client, search, fetcher)
    try:
        engine.run()
    except (BootstrapError, CredentialError) as exc:
        manifest.status = "aborted"
        manifest.write(manifest_path)
        return _fail(f"exploration aborted: {exc}")
    artifacts = engine.write_outputs(out)

    if len(engine.kb) == 0:
        _write_stats(out, engine, [])
        manifest.status = "degraded"
        manifest.artifacts = artifacts + ["stats.json"]
        manifest.write(manifest_path)
        print("run degraded: knowledge base is empty "
              "(no insights were gathered; was the exploration budget 0?), "
              "skipping synthesis", file=sys.stderr)
        return EXIT_DEGRADED

    synth = Synthesizer(engine.kb, config, client)
    try:
        result = synth.synthesize(eli5_word_limit=args.word_limit)
    except CredentialError as exc:
        manifest.status = "aborted"
        manifest.write(manifest_path)
        return _fail(f"synthesis aborted: {exc}")
    artifacts += synth.write_outputs(result, out)

    degraded = result.degraded
    try:
        _write_stats(out, engine, _cited_urls(result))
        artifacts.append("stats.json")
    except GraphIntegrityError as exc:
        print(f"warning: stats skipped: {exc}", file=sys.stderr)
        degraded = True

    manifest.status = "degraded" if degraded else "complete"
    manifest.artifacts = artifacts
    manifest.write(manifest_path)
    print(f"run {'degraded' if degraded else 'complete'}: {out}")
    print(f"model calls: {ledger.total_calls()}, "
          f"tokens: {ledger.total_tokens()}")
    return EXIT_DEGRADED if degraded else EXIT_OK


def cmd_explore(args) -> int:
    config = _build_config(args)
    if not config.user_query:
        return _fail("a query is required (--query or config user_query)")
    try:
        fetcher, search, provider, names = _build_providers(args)
    except (FetchError, SearchError, ProviderError) as exc:
        return _fail(str(exc))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.create(config, names, out)
    manifest.write(out / "manifest.json")
    client = ChatClient(provider, ledger=TokenLedger())
    engine = ExplorationEngine(config, client, search, fetcher)
    try:
        engine.run()
    except (BootstrapError, CredentialError) as exc:
        manifest.status = "aborted"
        manifest.write(out / "manifest.json")
        return _fail(f"exploration aborted: {exc}")
    artifacts = engine.write_outputs(out)
    _write_stats(out, engine, [])
    manifest.status = "complete"
    manifest.artifacts = artifacts + ["stats.json"]
    manifest.write(out / "manifest.json")
    print(f"explored {len(engine.graph.nodes)} nodes, "
          f"{len(engine.kb)} knowledge entries: {out}")
    return EXIT_OK


def cmd_synthesize(args) -> int:
    kb_path = Path(args.kb) if args.kb else Path(args.run) / "kb.jsonl"
    if not kb_path.is_file():
        return _fail(f"knowledge base not found: {kb_path}")
    kb = KnowledgeBase.from_jsonl(kb_path)
    if len(kb) == 0:
        return _fail("knowledge base empty: nothing to synthesize from")
    config = _build_config(args)
    if not config.user_query:
        return _fail("a query is required (--query or config user_query)")
    if args.mode == "offline":
        if not args.llm_script:
            return _fail("offline mode requires --llm-script <script.json>")
        provider = ScriptedProvider.from_file(args.llm_script)
    else:
        provider = OpenAICompatProvider()
    out = Path(args.out) if args.out else kb_path.parent
    out.mkdir(parents=True, exist_ok=True)
    synth = Synthesizer(kb, config, ChatClient(provider, ledger=TokenLedger()))
    try:
        result = synth.synthesize(eli5_word_limit=args.word_limit)
    except (EmptyKnowledgeBaseError, CredentialError) as exc:
        return _fail(f"synthesis aborted: {exc}")
    synth.write_outputs(result, out)
    status = "degraded" if result.degraded else "complete"
    print(f"synthesis {status}: {out / 'final.md'}")
    return EXIT_DEGRADED if result.degraded else EXIT_OK


def _load_answers(answers_dir: Path) -> dict[str, str]:
    answers = {}
    for path in sorted(answers_dir.iterdir()):
        if path.is_file() and path.suffix in (".md", ".txt"):
            answers[path.stem] = path.read_text().strip()
    return answers


def cmd_judge(args) -> int:
    answers_dir = Path(args.answers)
    if not answers_dir.is_dir():
        return _fail(f"answers directory not found: {answers_dir}")
    answers = _load_answers(answers_dir)
    if not answers:
        return _fail(f"no .md or .txt answers in {answers_dir}")
    spec = json.loads(Path(args.judges).read_text())
    judges: dict[str, ChatClient] = {}
    judge_families: dict[str, str] = {}
    for name, entry in spec.get("judges", {}).items():
        if entry.get("script"):
            provider = ScriptedProvider.from_file(entry["script"])
        else:
            provider = OpenAICompatProvider(model=entry.get("model"))
        judges[name] = ChatClient(provider, ledger=TokenLedger())
        if entry.get("family"):
            judge_families[name] = entry["family"]
    agent_families = spec.get("agent_families", {})
    try:
        scores, warnings = judge_batch(args.query, answers, judges,
                                       trials=args.trials, seed=args.seed)
    except (JudgeError, CredentialError) as exc:
        return _fail(str(exc))
    if not scores:
        return _fail("all judge trials were discarded")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_scores_csv(out / "scores.csv", scores)
    write_summary_json(out / "summary.json", scores,
                       agent_families=agent_families,
                       judge_families=judge_families, warnings=warnings)
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"judged {len(answers)} answers: {out}")
    return EXIT_DEGRADED if warnings else EXIT_OK


def _cited_urls_from_final(run_dir: Path) -> list[str]:
    """Citations of record: [n] markers in final.md resolved via its table."""
    final = run_dir / "final.md"
    if not final.is_file():
        return []
    text = final.read_text()
    head, _sep, tail = text.partition("## Sources")
    table = {int(m.group(1)): m.group(2) for m in _SOURCE_ROW.finditer(tail)}
    urls: list[str] = []
    for m in _BODY_MARKER.finditer(head):
        url = table.get(int(m.group(1)))
        if url and url not in urls:
            urls.append(url)
    return sorted(urls)


def cmd_graph(args) -> int:
    run_dir = Path(args.run)
    graph_path = run_dir / "graph.json"
    if not graph_path.is_file():
        return _fail(f"graph not found: {graph_path}")
    graph = ExplorationGraph.read_json(graph_path)
    if args.action == "stats":
        memory = None
        memory_path = run_dir / "memory.jsonl"
        if memory_path.is_file():
            memory = EpisodicMemory.from_jsonl(memory_path)
        try:
            stats = compute_stats(graph, memory,
                                  _cited_urls_from_final(run_dir))
        except GraphIntegrityError as exc:
            return _fail(str(exc))
        payload = json.dumps(stats.to_dict(), indent=2, sort_keys=True)
        if args.out:
            Path(args.out).write_text(payload + "\n")
        print(payload)
        return EXIT_OK
    if args.action == "export":
        out = Path(args.out) if args.out else run_dir / f"graph.{args.format}"
        try:
            export(graph, args.format, out, _cited_urls_from_final(run_dir))
        except GraphIntegrityError as exc:
            return _fail(str(exc))
        print(f"wrote {out}")
        return EXIT_OK
    # embeddings
    kb_path = run_dir / "kb.jsonl"
    if not kb_path.is_file():
        return _fail(f"knowledge base not found: {kb_path}")
    kb = KnowledgeBase.from_jsonl(kb_path)
    out = Path(args.out) if args.out else run_dir / "embeddings.tsv"
    export_embeddings(kb, out)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_init_config(args) -> int:
    payload = json.dumps(default_config_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(payload + "\n")
        print(f"wrote {args.out}")
    else:
        print(payload)
    return EXIT_OK


def _add_provider_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=("offline", "live"),
                        default="offline",
                        help="offline replays fixtures; live hits the web")
    parser.add_argument("--corpus", help="offline corpus manifest.json")
    parser.add_argument("--search-fixtures",
                        help="offline search fixtures json")
    parser.add_argument("--llm-script", help="scripted model responses json")


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config json file")
    parser.add_argument("--query", help="the research question")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help="seed for every randomized choice")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="caesar",
        description="Agentic web research: explore, synthesize, judge.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="explore then synthesize")
    _add_common_flags(run)
    _add_provider_flags(run)
    run.add_argument("--out", required=True, help="run directory")
    run.add_argument("--budget", type=int, help="exploration budget override")
    run.add_argument("--rounds", type=int, help="refinement rounds override")
    run.add_argument("--word-limit", type=int, default=450,
                     help="ELI5 word limit")
    run.set_defaults(func=cmd_run)

    explore = sub.add_parser("explore", help="exploration phase only")
    _add_common_flags(explore)
    _add_provider_flags(explore)
    explore.add_argument("--out", required=True, help="run directory")
    explore.add_argument("--budget", type=int,
                         help="exploration budget override")
    explore.set_defaults(func=cmd_explore)

    synth = sub.add_parser("synthesize", help="synthesis from a frozen KB")
    _add_common_flags(synth)
    synth.add_argument("--run", help="run directory holding kb.jsonl")
    synth.add_argument("--kb", help="knowledge base jsonl (overrides --run)")
    synth.add_argument("--out", help="output directory (default: KB's)")
    synth.add_argument("--rounds", type=int, help="refinement rounds override")
    synth.add_argument("--word-limit", type=int, default=450,
                       help="ELI5 word limit")
    synth.add_argument("--mode", choices=("offline", "live"),
                       default="offline")
    synth.add_argument("--llm-script", help="scripted model responses json")
    synth.set_defaults(func=cmd_synthesize)

    judge = sub.add_parser("judge", help="blinded multi-judge scoring")
    judge.add_argument("answers", help="directory of answer files")
    judge.add_argument("--query", required=True)
    judge.add_argument("--judges", required=True,
                       help="judge spec json: judges, agent_families")
    judge.add_argument("--trials", type=int, default=3)
    judge.add_argument("--seed", type=int, default=DEFAULT_SEED)
    judge.add_argument("--out", required=True, help="output directory")
    judge.set_defaults(func=cmd_judge)

    graph = sub.add_parser("graph", help="stats and exports for a run graph")
    graph.add_argument("action", choices=("stats", "export", "embeddings"))
    graph.add_argument("run", help="run directory")
    graph.add_argument("--format", choices=("dot", "graphml"), default="dot")
    graph.add_argument("--out", help="output file")
    graph.set_defaults(func=cmd_graph)

    init = sub.add_parser("init-config", help="write the default config")
    init.add_argument("--out", help="destination file (default: stdout)")
    init.set_defaults(func=cmd_init_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(f"bad config: {exc}")
    except (FetchError, SearchError, ProviderError) as exc:
        return _fail(str(exc))
    except FileNotFoundError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
