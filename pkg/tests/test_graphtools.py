"""Graph statistics against BFS oracles, plus DOT and GraphML exports.

The DOT checker here is written from the language grammar on purpose so
the exporter is validated by something it does not share code with.
"""

import re

import networkx as nx
import pytest

from caesar.explore import (
    EDGE_LINK,
    EDGE_SEARCH,
    ExplorationGraph,
    GraphIntegrityError,
    GraphNode,
)
from caesar.graphtools import (
    COLOR_CITED,
    COLOR_ROOT,
    DEPTH_RAMP,
    bfs_depths,
    compute_stats,
    export,
    export_embeddings,
    node_color,
    render_dot,
    render_graphml,
)
from caesar.knowledge import EpisodicMemory, EpisodicRecord, KnowledgeBase

S = "http://g.test"


def path_graph(length: int) -> ExplorationGraph:
    graph = ExplorationGraph()
    graph.add_root(f"{S}/n0")
    for i in range(1, length):
        graph.add_child(f"{S}/n{i - 1}", f"{S}/n{i}", EDGE_LINK, step=i)
    return graph


def star_graph(arms: int) -> ExplorationGraph:
    graph = ExplorationGraph()
    graph.add_root(f"{S}/hub")
    for i in range(arms):
        graph.add_child(f"{S}/hub", f"{S}/leaf{i}", EDGE_LINK, step=i + 1)
    return graph


def mixed_graph() -> ExplorationGraph:
    graph = ExplorationGraph()
    graph.add_root(f"{S}/root")
    graph.add_child(f"{S}/root", f"{S}/a", EDGE_LINK, 1)
    graph.add_child(f"{S}/root", "caesar://search/1", EDGE_SEARCH, 2)
    graph.add_child("caesar://search/1", f"{S}/b", EDGE_LINK, 3)
    graph.add_child(f"{S}/a", f"{S}/c", EDGE_LINK, 4)
    return graph


class TestDepths:
    def test_bfs_matches_stored_depths(self):
        graph = mixed_graph()
        depths = bfs_depths(graph)
        assert depths == {url: node.depth for url, node in graph.nodes.items()}

    def test_rootless_graph_rejected(self):
        with pytest.raises(GraphIntegrityError, match="no root"):
            bfs_depths(ExplorationGraph())

    def test_unreachable_node_rejected(self):
        graph = path_graph(2)
        graph.nodes[f"{S}/orphan"] = GraphNode(f"{S}/orphan", depth=9,
                                               created_step=0)
        with pytest.raises(GraphIntegrityError, match="unreachable"):
            bfs_depths(graph)


class TestStats:
    def test_single_root(self):
        stats = compute_stats(path_graph(1))
        assert stats.node_count == 1
        assert stats.edge_count == 0
        assert stats.max_depth == 0
        assert stats.depth_histogram == {0: 1}
        assert stats.mean_branching == 0.0

    def test_path_of_five(self):
        stats = compute_stats(path_graph(5))
        assert stats.depth_histogram == {d: 1 for d in range(5)}
        assert stats.max_depth == 4
        assert stats.mean_branching == 1.0

    def test_star_branching(self):
        stats = compute_stats(star_graph(6))
        assert stats.mean_branching == 6.0
        assert stats.depth_histogram == {0: 1, 1: 6}

    def test_search_edges_counted(self):
        assert compute_stats(mixed_graph()).search_edge_count == 1

    def test_backtracks_read_from_memory(self):
        memory = EpisodicMemory()
        memory.record_move(EpisodicRecord(1, f"{S}/n0", "explore",
                                          to_url=f"{S}/n1"))
        memory.record_move(EpisodicRecord(2, f"{S}/n1", "backtrack",
                                          to_url=f"{S}/n0"),
                           parent=f"{S}/n0")
        stats = compute_stats(path_graph(2), memory=memory)
        assert stats.backtrack_count == 1

    def test_cited_depths_deduplicated_in_order(self):
        graph = mixed_graph()
        stats = compute_stats(graph, cited_urls=[
            f"{S}/c", f"{S}/a", f"{S}/c"])
        assert stats.cited_node_depths == [2, 1]

    def test_cited_url_must_exist(self):
        with pytest.raises(GraphIntegrityError, match="cited URL"):
            compute_stats(mixed_graph(), cited_urls=[f"{S}/ghost"])

    def test_to_dict_serializable(self):
        data = compute_stats(mixed_graph()).to_dict()
        assert data["node_count"] == 5
        assert data["depth_histogram"] == {"0": 1, "1": 2, "2": 2}


class TestColors:
    def test_root_wins_over_cited(self):
        assert node_color("r", 0, "r", {"r"}) == COLOR_ROOT

    def test_cited_wins_over_ramp(self):
        assert node_color("x", 3, "r", {"x"}) == COLOR_CITED

    def test_ramp_clamps_at_deepest_shade(self):
        assert node_color("x", 2, "r", set()) == DEPTH_RAMP[2]
        assert node_color("x", 99, "r", set()) == DEPTH_RAMP[-1]


_DOT_QUOTED = r'"(?:[^"\\]|\\.)*"'
_DOT_NODE = re.compile(rf"^({_DOT_QUOTED})\s*\[([^\]]*)\];$")
_DOT_EDGE = re.compile(rf"^({_DOT_QUOTED})\s*->\s*({_DOT_QUOTED})\s*\[([^\]]*)\];$")


def dot_unquote(token: str) -> str:
    body = token[1:-1]
    return re.sub(r"\\(.)", r"\1", body)


def parse_dot(text: str):
    """Tiny independent reader for the digraph subset the exporter emits."""
    lines = [line.strip() for line in text.strip().splitlines()]
    assert lines[0].startswith("digraph ") and lines[0].endswith("{")
    assert lines[-1] == "}"
    nodes: dict[str, dict[str, str]] = {}
    edges: list[tuple[str, str, dict[str, str]]] = []
    for line in lines[1:-1]:
        if not line.endswith(";"):
            raise AssertionError(f"unterminated statement: {line!r}")
        edge = _DOT_EDGE.match(line)
        if edge:
            attrs = parse_attrs(edge.group(3))
            edges.append((dot_unquote(edge.group(1)),
                          dot_unquote(edge.group(2)), attrs))
            continue
        node = _DOT_NODE.match(line)
        if node:
            nodes[dot_unquote(node.group(1))] = parse_attrs(node.group(2))
            continue
        # attribute defaults and graph-level settings
        if re.match(r"^(node|edge|graph)\s*\[[^\]]*\];$", line):
            continue
        if re.match(r"^\w+=\w+;$", line):
            continue
        raise AssertionError(f"unparseable statement: {line!r}")
    return nodes, edges


def parse_attrs(blob: str) -> dict[str, str]:
    attrs = {}
    for part in re.findall(rf"(\w+)=({_DOT_QUOTED}|\w+)", blob):
        key, value = part
        attrs[key] = dot_unquote(value) if value.startswith('"') else value
    return attrs


class TestDotExport:
    def test_round_trip_preserves_sets(self):
        graph = mixed_graph()
        nodes, edges = parse_dot(render_dot(graph))
        assert set(nodes) == set(graph.nodes)
        assert [(s, d) for s, d, _a in edges] == [
            (s, d) for s, d, _k in graph.edges]
        assert [a["kind"] for _s, _d, a in edges] == [
            k for _s, _d, k in graph.edges]

    def test_colors_and_depths(self):
        graph = mixed_graph()
        nodes, _edges = parse_dot(render_dot(graph, cited_urls=[f"{S}/c"]))
        assert nodes[f"{S}/root"]["fillcolor"] == COLOR_ROOT
        assert nodes[f"{S}/c"]["fillcolor"] == COLOR_CITED
        assert nodes[f"{S}/a"]["fillcolor"] == DEPTH_RAMP[1]
        assert nodes[f"{S}/c"]["depth"] == "2"

    def test_quoting_survives_hostile_names(self):
        graph = ExplorationGraph()
        graph.add_root('http://g.test/we"ird\\path')
        nodes, _edges = parse_dot(render_dot(graph))
        assert set(nodes) == {'http://g.test/we"ird\\path'}

    def test_deterministic_bytes(self):
        graph = mixed_graph()
        assert render_dot(graph, [f"{S}/b"]) == render_dot(graph, [f"{S}/b"])


class TestGraphmlExport:
    def test_networkx_parses_and_round_trips(self):
        graph = mixed_graph()
        parsed = nx.parse_graphml(render_graphml(graph, [f"{S}/b"]))
        assert isinstance(parsed, nx.DiGraph)
        assert set(parsed.nodes) == set(graph.nodes)
        assert set(parsed.edges) == {(s, d) for s, d, _k in graph.edges}
        assert parsed.nodes[f"{S}/root"]["color"] == COLOR_ROOT
        assert parsed.nodes[f"{S}/b"]["color"] == COLOR_CITED
        assert parsed.nodes[f"{S}/c"]["depth"] == 2
        kinds = nx.get_edge_attributes(parsed, "kind")
        assert kinds[(f"{S}/root", "caesar://search/1")] == EDGE_SEARCH
        assert kinds[(f"{S}/root", f"{S}/a")] == EDGE_LINK

    def test_xml_escaping(self):
        graph = ExplorationGraph()
        graph.add_root("http://g.test/a?x=1&y=<2>")
        parsed = nx.parse_graphml(render_graphml(graph))
        assert set(parsed.nodes) == {"http://g.test/a?x=1&y=<2>"}


class TestExportFiles:
    def test_export_writes_both_formats(self, tmp_path):
        graph = mixed_graph()
        dot_path = export(graph, "dot", tmp_path / "g.dot")
        gml_path = export(graph, "graphml", tmp_path / "g.graphml")
        assert dot_path.read_text().startswith("digraph")
        assert "<graphml" in gml_path.read_text()

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="format"):
            export(mixed_graph(), "svg", tmp_path / "g.svg")

    def test_embeddings_tsv_round_trip(self, tmp_path):
        kb = KnowledgeBase()
        kb.add_text("alpha beta gamma", {"source_url": f"{S}/p1"})
        kb.add_text("delta epsilon zeta", {"source_url": f"{S}/p2"})
        path = export_embeddings(kb, tmp_path / "emb.tsv")
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        for line, entry in zip(lines, kb.entries):
            fields = line.split("\t")
            assert fields[0] == entry.entry_id
            values = [float(v) for v in fields[1:]]
            assert values == [float(v) for v in entry.embedding]
