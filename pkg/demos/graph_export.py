"""Graph export demo: one toy run graph rendered as DOT and GraphML.

Builds a small navigation graph by hand, computes its stats, and prints
both export formats. Nodes carry the depth color ramp; the root is red
and cited nodes are cyan so a rendered figure shows where the final
artifact's evidence sits in the crawl.

    python3 demos/graph_export.py
"""

from caesar.explore import EDGE_LINK, EDGE_SEARCH, ExplorationGraph
from caesar.graphtools import compute_stats, render_dot, render_graphml

S = "http://demo.test"


def build() -> ExplorationGraph:
    graph = ExplorationGraph()
    graph.add_root(f"{S}/index.html")
    graph.add_child(f"{S}/index.html", f"{S}/mechanics.html", EDGE_LINK, 1)
    graph.add_child(f"{S}/index.html", f"{S}/history.html", EDGE_LINK, 2)
    graph.add_child(f"{S}/mechanics.html", f"{S}/materials.html", EDGE_LINK, 3)
    graph.add_child(f"{S}/history.html", "caesar://search/1", EDGE_SEARCH, 4)
    graph.add_child("caesar://search/1", f"{S}/almanac.html", EDGE_LINK, 5)
    return graph


def main() -> None:
    graph = build()
    cited = [f"{S}/mechanics.html", f"{S}/almanac.html"]

    stats = compute_stats(graph, cited_urls=cited)
    print(f"nodes={stats.node_count} edges={stats.edge_count} "
          f"max_depth={stats.max_depth} "
          f"branching={stats.mean_branching:.2f} "
          f"search_edges={stats.search_edge_count}")
    print(f"cited insight depths: {stats.cited_node_depths}")

    print("\n--- graph.dot ---")
    print(render_dot(graph, cited))
    print("--- graph.graphml ---")
    print(render_graphml(graph, cited))


if __name__ == "__main__":
    main()
