import numpy as np
import pytest

from duograph.graph import NodeType, RelationClass, RelationSpec, build_graph


@pytest.fixture
def tiny_graph():
    """2 authors, 2 papers; one relation of each class."""
    feats = {
        NodeType.A: np.array([[1.0, 0.0], [0.0, 1.0]]),
        NodeType.B: np.array([[0.5, 0.5], [-0.5, 0.25]]),
    }
    relations = [
        RelationSpec("colleague", RelationClass.INTRA_A, NodeType.A, NodeType.A, symmetric=True),
        RelationSpec("cite", RelationClass.INTRA_B, NodeType.B, NodeType.B),
        RelationSpec("wrote", RelationClass.INTER, NodeType.A, NodeType.B),
    ]
    edges = [
        ("colleague", 0, 1),
        ("cite", 0, 1),
        ("wrote", 0, 0),
        ("wrote", 1, 0),
        ("wrote", 1, 1),
    ]
    return build_graph({NodeType.A: 2, NodeType.B: 2}, feats, relations, edges)


def random_bigraph(rng, n_a=6, n_b=7, dim=3, extra_intra=1, n_inter=2):
    """Random schema + edges; always at least one intra relation per type."""
    relations = [
        RelationSpec("a_r0", RelationClass.INTRA_A, NodeType.A, NodeType.A,
                     symmetric=bool(rng.integers(2))),
        RelationSpec("b_r0", RelationClass.INTRA_B, NodeType.B, NodeType.B,
                     symmetric=bool(rng.integers(2))),
    ]
    for k in range(extra_intra):
        relations.append(RelationSpec(f"a_r{k + 1}", RelationClass.INTRA_A,
                                      NodeType.A, NodeType.A, symmetric=bool(rng.integers(2))))
        relations.append(RelationSpec(f"b_r{k + 1}", RelationClass.INTRA_B,
                                      NodeType.B, NodeType.B, symmetric=bool(rng.integers(2))))
    for m in range(n_inter):
        if rng.integers(2):
            relations.append(RelationSpec(f"x_r{m}", RelationClass.INTER, NodeType.A, NodeType.B))
        else:
            relations.append(RelationSpec(f"x_r{m}", RelationClass.INTER, NodeType.B, NodeType.A))
    sizes = {NodeType.A: n_a, NodeType.B: n_b}
    edges = []
    for spec in relations:
        n_edges = int(rng.integers(0, 2 * max(n_a, n_b)))
        for _ in range(n_edges):
            edges.append((spec.name,
                          int(rng.integers(sizes[spec.src_type])),
                          int(rng.integers(sizes[spec.dst_type]))))
    feats = {
        NodeType.A: rng.uniform(-1.5, 1.5, size=(n_a, dim)),
        NodeType.B: rng.uniform(-1.5, 1.5, size=(n_b, dim)),
    }
    return build_graph(sizes, feats, relations, edges)
