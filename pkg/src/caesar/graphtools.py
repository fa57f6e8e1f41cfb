"""Statistics and exports for the navigation graph.

Depths come from a BFS over directed edges from the root, independent of
the creation-time depths stored on nodes. Exports are deterministic: the
same graph always serializes to the same bytes, nodes in insertion order
and edges in recording order.

Node colors encode BFS depth on an 8-step dark-to-bright ramp (depths
past 7 clamp to the brightest step). Two overrides sit on top: the root
is red (#ff0000) and nodes cited by the final artifact are cyan
(#00ffff), so the path from start to evidence is visible at a glance.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape, quoteattr

from .explore import EDGE_SEARCH, ExplorationGraph, GraphIntegrityError
from .knowledge import EpisodicMemory, KnowledgeBase

COLOR_ROOT = "#ff0000"
COLOR_CITED = "#00ffff"
DEPTH_RAMP = (
    "#10141f", "#1c2541", "#274060", "#335d7d",
    "#3f7a9b", "#4b98b8", "#57b5d6", "#63d2f3",
)

FORMAT_DOT = "dot"
FORMAT_GRAPHML = "graphml"


@dataclass
class GraphStats:
    node_count: int
    edge_count: int
    max_depth: int
    depth_histogram: dict[int, int]
    mean_branching: float
    backtrack_count: int
    search_edge_count: int
    cited_node_depths: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "max_depth": self.max_depth,
            "depth_histogram": {str(k): v for k, v in
                                sorted(self.depth_histogram.items())},
            "mean_branching": self.mean_branching,
            "backtrack_count": self.backtrack_count,
            "search_edge_count": self.search_edge_count,
            "cited_node_depths": list(self.cited_node_depths),
        }


def bfs_depths(graph: ExplorationGraph) -> dict[str, int]:
    if graph.root is None:
        raise GraphIntegrityError("graph has no root")
    adjacency: dict[str, list[str]] = {url: [] for url in graph.nodes}
    for src, dst, _kind in graph.edges:
        adjacency[src].append(dst)
    depths = {graph.root: 0}
    queue = deque([graph.root])
    while queue:
        current = queue.popleft()
        for child in adjacency[current]:
            if child not in depths:
                depths[child] = depths[current] + 1
                queue.append(child)
    missing = [url for url in graph.nodes if url not in depths]
    if missing:
        raise GraphIntegrityError(
            f"{len(missing)} nodes unreachable from root, first: {missing[0]}")
    return depths


def compute_stats(graph: ExplorationGraph,
                  memory: EpisodicMemory | None = None,
                  cited_urls: Sequence[str] = ()) -> GraphStats:
    depths = bfs_depths(graph)
    histogram: dict[int, int] = {}
    for depth in depths.values():
        histogram[depth] = histogram.get(depth, 0) + 1
    out_degrees = [graph.out_degree(url) for url in graph.nodes]
    non_leaf = [d for d in out_degrees if d > 0]
    mean_branching = sum(non_leaf) / len(non_leaf) if non_leaf else 0.0
    backtracks = 0
    if memory is not None:
        backtracks = sum(1 for r in memory.records if r.action == "backtrack")
    cited_depths: list[int] = []
    seen: set[str] = set()
    for url in cited_urls:
        if url in seen:
            continue
        seen.add(url)
        if url not in depths:
            raise GraphIntegrityError(
                f"cited URL not present in graph: {url}")
        cited_depths.append(depths[url])
    return GraphStats(
        node_count=len(graph.nodes),
        edge_count=len(graph.edges),
        max_depth=max(depths.values()) if depths else 0,
        depth_histogram=histogram,
        mean_branching=mean_branching,
        backtrack_count=backtracks,
        search_edge_count=sum(1 for _s, _d, kind in graph.edges
                              if kind == EDGE_SEARCH),
        cited_node_depths=cited_depths,
    )


def node_color(url: str, depth: int, root: str, cited: set[str]) -> str:
    if url == root:
        return COLOR_ROOT
    if url in cited:
        return COLOR_CITED
    return DEPTH_RAMP[min(depth, len(DEPTH_RAMP) - 1)]


def _dot_quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_dot(graph: ExplorationGraph,
               cited_urls: Iterable[str] = ()) -> str:
    depths = bfs_depths(graph)
    cited = set(cited_urls)
    lines = ["digraph caesar {", "  rankdir=LR;",
             "  node [shape=box, style=filled];"]
    for url in graph.nodes:
        color = node_color(url, depths[url], graph.root, cited)
        lines.append(
            f"  {_dot_quote(url)} [depth={depths[url]}, "
            f"fillcolor={_dot_quote(color)}, color={_dot_quote(color)}];")
    for src, dst, kind in graph.edges:
        lines.append(
            f"  {_dot_quote(src)} -> {_dot_quote(dst)} "
            f"[kind={_dot_quote(kind)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def render_graphml(graph: ExplorationGraph,
                   cited_urls: Iterable[str] = ()) -> str:
    depths = bfs_depths(graph)
    cited = set(cited_urls)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="d0" for="node" attr.name="depth" attr.type="int"/>',
        '  <key id="d1" for="node" attr.name="color" attr.type="string"/>',
        '  <key id="d2" for="edge" attr.name="kind" attr.type="string"/>',
        '  <graph id="caesar" edgedefault="directed">',
    ]
    for url in graph.nodes:
        color = node_color(url, depths[url], graph.root, cited)
        lines.append(f"    <node id={quoteattr(url)}>")
        lines.append(f'      <data key="d0">{depths[url]}</data>')
        lines.append(f'      <data key="d1">{escape(color)}</data>')
        lines.append("    </node>")
    for src, dst, kind in graph.edges:
        lines.append(
            f"    <edge source={quoteattr(src)} target={quoteattr(dst)}>")
        lines.append(f'      <data key="d2">{escape(kind)}</data>')
        lines.append("    </edge>")
    lines.append("  </graph>")
    lines.append("</graphml>")
    return "\n".join(lines) + "\n"


def export(graph: ExplorationGraph, fmt: str, out_path: str | Path,
           cited_urls: Iterable[str] = ()) -> Path:
    if fmt == FORMAT_DOT:
        content = render_dot(graph, cited_urls)
    elif fmt == FORMAT_GRAPHML:
        content = render_graphml(graph, cited_urls)
    else:
        raise ValueError(f"unknown export format: {fmt!r}")
    path = Path(out_path)
    path.write_text(content)
    return path


def export_embeddings(kb: KnowledgeBase, out_path: str | Path) -> Path:
    """TSV of entry id and embedding components, repr precision."""
    path = Path(out_path)
    with open(path, "w") as fh:
        for entry in kb.entries:
            values = "\t".join(repr(float(v)) for v in entry.embedding)
            fh.write(f"{entry.entry_id}\t{values}\n")
    return path
