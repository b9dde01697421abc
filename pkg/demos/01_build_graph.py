"""Build a tiny two-typed graph by hand and query it.

Type A nodes are authors, type B nodes are papers. Relations are declared
up front with their endpoint classes; edges are plain (relation, src, dst)
triples and symmetric relations store both directions automatically.
"""
import numpy as np

from duograph.graph import (BiGraph, NodeType, RelationClass, RelationSpec,
                            build_graph, mean_neighbor_features)

relations = [
    RelationSpec("coauthor", RelationClass.INTRA_A, NodeType.A, NodeType.A, symmetric=True),
    RelationSpec("cites", RelationClass.INTRA_B, NodeType.B, NodeType.B),
    RelationSpec("wrote", RelationClass.INTER, NodeType.A, NodeType.B),
]

edges = [
    ("coauthor", 0, 1),
    ("coauthor", 1, 2),
    ("cites", 0, 1),
    ("cites", 2, 1),
    ("cites", 2, 0),
    ("wrote", 0, 0),
    ("wrote", 1, 0),
    ("wrote", 1, 1),
    ("wrote", 2, 2),
]

features = {
    NodeType.A: np.eye(3, 4),
    NodeType.B: np.eye(3, 4, k=1),
}

graph = build_graph({NodeType.A: 3, NodeType.B: 3}, features, relations, edges)

print("nodes:", {t.label: n for t, n in graph.counts.items()})
for name in graph.relation_names():
    spec = graph.relations[name]
    print(f"relation {name}: {spec.src_type.label} -> {spec.dst_type.label}, "
          f"{graph.csr(name).n_edges} stored edges")

# symmetric relation: both directions are visible from either endpoint
print("coauthors of author 1:", graph.neighbors("coauthor", 1))

# directed relation: forward and reverse views differ
print("paper 1 cites:", graph.neighbors("cites", 1))
print("paper 1 cited by:", graph.neighbors("cites", 1, reverse=True))

# authors of paper 0 via the reverse view of wrote
print("authors of paper 0:", graph.neighbors("wrote", 0, reverse=True))

# derived author features: average of the papers each author wrote
author_feats, isolated = mean_neighbor_features(graph, ["wrote"], NodeType.A)
print("author features from papers:\n", author_feats)
print("authors with no papers:", np.flatnonzero(isolated))
