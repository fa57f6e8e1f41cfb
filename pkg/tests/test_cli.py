"""End-to-end command line behavior, all offline."""

import json

import pytest

from caesar.cli import main
from caesar.config import RunManifest
from conftest import DEFAULT_QUERY


def run_args(corpus: dict, out, extra=()) -> list[str]:
    return ["run", "--query", DEFAULT_QUERY,
            "--corpus", str(corpus["manifest"]),
            "--search-fixtures", str(corpus["search"]),
            "--llm-script", str(corpus["llm"]),
            "--out", str(out), *extra]


@pytest.fixture(scope="module")
def full_run(main_corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_full_run")
    code = main(run_args(main_corpus, out, ["--budget", "6", "--rounds", "2"]))
    assert code == 0
    return out


class TestHelp:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        assert "explore" in capsys.readouterr().out

    def test_subcommand_required(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2


class TestInitConfig:
    def test_stdout_payload(self, capsys):
        assert main(["init-config"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["exploration_budget"] == 1000
        assert payload["refinement_rounds"] == 3

    def test_file_output(self, tmp_path, capsys):
        target = tmp_path / "config.json"
        assert main(["init-config", "--out", str(target)]) == 0
        assert json.loads(target.read_text())["insight_budget"] == 30


class TestRun:
    def test_offline_requires_fixtures(self, tmp_path, capsys):
        out = tmp_path / "never"
        code = main(["run", "--query", "q", "--out", str(out)])
        assert code == 2
        assert "--corpus" in capsys.readouterr().err
        assert not out.exists()

    def test_missing_query_aborts(self, main_corpus, tmp_path, capsys):
        code = main(["run", "--corpus", str(main_corpus["manifest"]),
                     "--search-fixtures", str(main_corpus["search"]),
                     "--llm-script", str(main_corpus["llm"]),
                     "--out", str(tmp_path / "x")])
        assert code == 2
        assert "query" in capsys.readouterr().err

    def test_full_run_artifacts(self, full_run):
        for name in ("manifest.json", "graph.json", "kb.jsonl",
                     "memory.jsonl", "trace.jsonl", "final.md", "eli5.txt",
                     "stats.json", "synthesis_trace.jsonl"):
            assert (full_run / name).is_file(), name
        assert (full_run / "drafts" / "draft_1.md").is_file()
        assert (full_run / "drafts" / "draft_2.md").is_file()
        manifest = RunManifest.read(full_run / "manifest.json")
        assert manifest.status == "complete"
        assert "final.md" in manifest.artifacts
        assert manifest.providers == {"fetcher": "offline",
                                      "search": "fixture", "llm": "scripted"}

    def test_final_markdown_cites_real_sources(self, full_run):
        final = (full_run / "final.md").read_text()
        assert "## Sources" in final
        assert "[1]" in final
        kb_urls = {json.loads(line)["metadata"]["source_url"]
                   for line in (full_run / "kb.jsonl").read_text().splitlines()}
        table_urls = {line.split("|")[2].strip()
                      for line in final.splitlines()
                      if line.startswith("|") and "URL" not in line
                      and "---" not in line}
        assert table_urls <= kb_urls

    def test_zero_budget_degrades(self, main_corpus, tmp_path, capsys):
        out = tmp_path / "zero"
        code = main(run_args(main_corpus, out, ["--budget", "0"]))
        assert code == 1
        err = capsys.readouterr().err
        assert "knowledge base is empty" in err
        manifest = RunManifest.read(out / "manifest.json")
        assert manifest.status == "degraded"
        assert (out / "stats.json").is_file()
        assert not (out / "final.md").exists()

    def test_bootstrap_failure_leaves_aborted_manifest(self, main_corpus,
                                                       tmp_path, capsys):
        bad_script = tmp_path / "bad_llm.json"
        bad_script.write_text(json.dumps({"search_expansion:*": "terms"}))
        out = tmp_path / "aborted"
        code = main(["run", "--query", DEFAULT_QUERY,
                     "--corpus", str(main_corpus["manifest"]),
                     "--search-fixtures", str(main_corpus["search"]),
                     "--llm-script", str(bad_script),
                     "--out", str(out), "--budget", "3"])
        assert code == 2
        assert "aborted" in capsys.readouterr().err
        # manifest was written first, then flipped to aborted
        manifest = RunManifest.read(out / "manifest.json")
        assert manifest.status == "aborted"
        assert not (out / "final.md").exists()


class TestExplore:
    def test_explore_only(self, main_corpus, tmp_path):
        out = tmp_path / "explore"
        code = main(["explore", "--query", DEFAULT_QUERY,
                     "--corpus", str(main_corpus["manifest"]),
                     "--search-fixtures", str(main_corpus["search"]),
                     "--llm-script", str(main_corpus["llm"]),
                     "--out", str(out), "--budget", "4"])
        assert code == 0
        assert (out / "kb.jsonl").is_file()
        assert (out / "graph.json").is_file()
        assert not (out / "final.md").exists()
        assert RunManifest.read(out / "manifest.json").status == "complete"


class TestSynthesize:
    def test_from_run_directory(self, full_run, main_corpus, tmp_path):
        out = tmp_path / "resynth"
        code = main(["synthesize", "--run", str(full_run),
                     "--query", DEFAULT_QUERY,
                     "--llm-script", str(main_corpus["llm"]),
                     "--out", str(out), "--rounds", "1"])
        assert code == 0
        assert (out / "final.md").is_file()
        assert (out / "drafts" / "draft_1.md").is_file()
        assert not (out / "drafts" / "draft_2.md").exists()

    def test_missing_kb_aborts(self, main_corpus, tmp_path, capsys):
        code = main(["synthesize", "--run", str(tmp_path),
                     "--query", "q",
                     "--llm-script", str(main_corpus["llm"])])
        assert code == 2
        assert "not found" in capsys.readouterr().err

    def test_empty_kb_aborts(self, main_corpus, tmp_path, capsys):
        empty = tmp_path / "kb.jsonl"
        empty.write_text("")
        code = main(["synthesize", "--kb", str(empty), "--query", "q",
                     "--llm-script", str(main_corpus["llm"])])
        assert code == 2
        assert "nothing to synthesize" in capsys.readouterr().err


class TestJudge:
    @pytest.fixture()
    def judge_setup(self, tmp_path):
        answers = tmp_path / "answers"
        answers.mkdir()
        (answers / "agent_a.md").write_text("A thorough cited artifact.")
        (answers / "agent_b.txt").write_text("A thin artifact.")
        (answers / "notes.log").write_text("ignored")
        script = tmp_path / "judge_llm.json"
        script.write_text(json.dumps({
            "judge_rubric:*": ("ANSWER_1: new=6 useful=6 surprising=6\n"
                               "ANSWER_2: new=4 useful=4 surprising=4")}))
        spec = tmp_path / "judges.json"
        spec.write_text(json.dumps({
            "judges": {
                "j_alpha": {"script": str(script), "family": "fam_a"},
                "j_beta": {"script": str(script), "family": "fam_b"},
            },
            "agent_families": {"agent_a": "fam_a", "agent_b": "fam_b"},
        }))
        return answers, spec

    def test_scores_and_summary(self, judge_setup, tmp_path, capsys):
        answers, spec = judge_setup
        out = tmp_path / "judged"
        code = main(["judge", str(answers), "--query", "q",
                     "--judges", str(spec), "--trials", "2",
                     "--out", str(out)])
        assert code == 0
        rows = (out / "scores.csv").read_text().splitlines()
        # header + 2 judges x 2 trials x 2 agents
        assert len(rows) == 9
        summary = json.loads((out / "summary.json").read_text())
        assert set(summary["means"]) == {"agent_a", "agent_b"}
        assert "bias" in summary
        assert "agent_a_vs_agent_b" in summary["mwu"]

    def test_missing_answers_dir(self, judge_setup, tmp_path, capsys):
        _answers, spec = judge_setup
        code = main(["judge", str(tmp_path / "ghost"), "--query", "q",
                     "--judges", str(spec), "--out", str(tmp_path / "o")])
        assert code == 2


class TestGraphCommand:
    def test_stats_output(self, full_run, capsys):
        assert main(["graph", "stats", str(full_run)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["node_count"] >= 1
        assert payload["edge_count"] == payload["node_count"] - 1

    def test_export_default_path(self, full_run, capsys):
        assert main(["graph", "export", str(full_run)]) == 0
        assert (full_run / "graph.dot").read_text().startswith("digraph")
        assert main(["graph", "export", str(full_run),
                     "--format", "graphml"]) == 0
        assert "<graphml" in (full_run / "graph.graphml").read_text()

    def test_embeddings_export(self, full_run, capsys):
        assert main(["graph", "embeddings", str(full_run)]) == 0
        lines = (full_run / "embeddings.tsv").read_text().splitlines()
        kb_lines = (full_run / "kb.jsonl").read_text().splitlines()
        assert len(lines) == len(kb_lines)

    def test_missing_run_dir(self, tmp_path, capsys):
        assert main(["graph", "stats", str(tmp_path)]) == 2
