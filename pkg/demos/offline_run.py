"""Full pipeline tour on a tiny offline site with a scripted model.

Builds a six-page corpus in a temp directory, explores it with a
deterministic provider, synthesizes a cited artifact, and prints what
landed where. No network, no credentials, finishes in well under a second.

    python3 demos/offline_run.py
"""

import json
import tempfile
from pathlib import Path

from caesar.config import CaesarConfig
from caesar.explore import ExplorationEngine
from caesar.llm import ChatClient, ScriptedProvider, TokenLedger
from caesar.synthesis import Synthesizer
from caesar.web import FixtureSearchProvider, OfflineFetcher

SITE = "http://demo.test"

PAGES = {
    "index.html": ("Tidal clock overview",
                   ["mechanics.html", "history.html", "ports.html"]),
    "mechanics.html": ("Gear trains and lunar ratios", ["materials.html"]),
    "history.html": ("Harbor timekeeping before radio", []),
    "ports.html": ("Port boards and posted tables", ["almanac.html"]),
    "materials.html": ("Brass, bronze and salt air", []),
    "almanac.html": ("Printed almanac supplements", []),
}

SCRIPT = {
    "search_expansion:*": "tidal clock mechanics history",
    "role_generation:*": ("You are a patient horology archivist tracing how "
                          "tidal clocks were built and used."),
    "think_insights:*": ("The page ties tidal timekeeping to lunar-cycle "
                         "gearing and harbor practice."),
    "act_meta_strategy:*": "EXPLORE",
    "act_link_select:*": "LINK: 0",
    "qa_answer:*": ("Tidal clocks track the lunar day with dedicated gear "
                    "ratios rather than solar time."),
    "qa_followup:*": "STOP",
    "draft_generation:*": ("Tidal clocks gear a dial to the lunar day so "
                           "harbors can read the next high tide. [1]\n\n"
                           "Ports posted the dial's output alongside printed "
                           "almanac tables. [2]"),
    "refine_query:*": "where do tidal clock readings disagree with almanacs",
    "merge_drafts:*": ("Tidal clocks pair lunar-day gearing with posted "
                       "tables, giving harbors a live tide reference. "
                       "[1] [2]"),
    "eli5_constrained:*": ("A tidal clock is a clock for the sea. It tells "
                           "you when the water will be high. The end."),
    "eli5_unconstrained:*": "A clock that follows the moon to predict tides.",
}


def build_corpus(root: Path) -> Path:
    corpus = root / "corpus"
    corpus.mkdir()
    mapping = {}
    for name, (title, links) in PAGES.items():
        items = "".join(f'<li><a href="{SITE}/{t}">{t}</a></li>' for t in links)
        body = (f"<html><head><title>{title}</title></head><body>"
                f"<h1>{title}</h1><p>{title}. The prose on this page repeats "
                f"stable facts about {name.split('.')[0]} for the demo.</p>"
                f"<ul>{items}</ul></body></html>")
        (corpus / name).write_text(body)
        mapping[f"{SITE}/{name}"] = f"corpus/{name}"
    manifest = root / "manifest.json"
    manifest.write_text(json.dumps(mapping, indent=2))
    return manifest


def main() -> None:
    root = Path(tempfile.mkdtemp(prefix="caesar_demo_"))
    manifest = build_corpus(root)
    query = "how did tidal clocks keep harbors on schedule"

    config = CaesarConfig(user_query=query, exploration_budget=8,
                          insight_budget=4, refinement_rounds=2)
    ledger = TokenLedger()
    client = ChatClient(ScriptedProvider(SCRIPT), ledger=ledger)
    search = FixtureSearchProvider({"*": [
        {"url": f"{SITE}/index.html", "title": "Tidal clock overview",
         "snippet": "Entry page."}]})
    engine = ExplorationEngine(config, client, search,
                               OfflineFetcher(manifest))
    engine.run()

    print(f"explored {len(engine.graph.nodes)} nodes "
          f"({engine.steps_used} steps, {len(engine.kb)} insights)")
    for url, node in engine.graph.nodes.items():
        marker = "*" if url == engine.graph.root else " "
        print(f"  {marker} depth {node.depth}  {url}")

    synth = Synthesizer(engine.kb, config, client)
    result = synth.synthesize()

    out = root / "run"
    out.mkdir()
    engine.write_outputs(out)
    synth.write_outputs(result, out)

    print("\n--- final.md ---")
    print((out / "final.md").read_text())
    print("--- eli5.txt ---")
    print((out / "eli5.txt").read_text())
    print(f"artifacts in {out}")
    print(f"model calls: {ledger.total_calls()}, "
          f"tokens: {ledger.total_tokens()}")
    print("\nsame thing via the CLI:")
    print(f"  caesar run --query '{query}' --corpus {manifest} \\\n"
          f"      --search-fixtures fixtures.json --llm-script script.json \\\n"
          f"      --out {out} --budget 8 --rounds 2")


if __name__ == "__main__":
    main()
