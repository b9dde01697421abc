"""Cross-class encoder: attention over the other node class, relation
weighting restricted to relations that actually reach a node, and the
weighted residual connection used after each stage.

Both classes are first mapped into a shared space by per-class square
matrices; each cross relation is processed in both directions with its
own attention vector and normalization per direction. Nodes that no
cross relation reaches keep a zero pre-residual vector.
"""
from __future__ import annotations

import numpy as np

from . import ops
from .errors import DirectionInvalid, RelationClassMismatch, ShapeMismatch
from .graph import BiGraph, NodeType
from .intra import attend_over_plan
from .tensor import Tensor


def node_aggregate(mapped_target: Tensor, mapped_source: Tensor, graph: BiGraph,
                   relation: str, target_type: NodeType,
                   attn: Tensor, gain: Tensor, bias: Tensor, slope: float):
    """Attention toward `target_type` over one cross relation.

    Returns (rows, reached, alpha, plan): `rows` is [n_target, d] with
    zeros where nothing arrived, `reached` the boolean coverage column.
    """
    spec = graph.spec(relation)
    if spec.is_intra:
        raise RelationClassMismatch(f"relation {relation!r} is not cross-class")
    if target_type not in (spec.src_type, spec.dst_type):
        raise DirectionInvalid(f"relation {relation!r} has no {target_type.label} endpoint")
    n_target = graph.n_nodes(target_type)
    plan = graph.message_plan(relation, target_type)
    reached = np.zeros(n_target, dtype=bool)
    if plan.n_edges == 0:
        width = mapped_target.shape[1]
        return ops.constant(np.zeros((n_target, width))), reached, None, plan
    out_active, alpha = attend_over_plan(mapped_target, mapped_source, plan,
                                         attn, gain, bias, slope)
    reached[plan.targets] = True
    if plan.covers_all:
        return out_active, reached, alpha, plan
    return ops.scatter_rows(out_active, plan.targets, n_target), reached, alpha, plan


def weighted_residual(new: Tensor, old: Tensor, weight: float,
                      gain: Tensor, bias: Tensor, slope: float) -> Tensor:
    """Norm(weight * act(new) + (1 - weight) * old)."""
    if new.shape != old.shape:
        raise ShapeMismatch(f"residual shapes {new.shape} vs {old.shape}")
    if not 0.0 <= weight <= 1.0:
        raise ShapeMismatch(f"residual weight must lie in [0, 1], got {weight}")
    mixed = ops.add(ops.scalar_mul(ops.leaky_relu(new, slope), weight),
                    ops.scalar_mul(old, 1.0 - weight))
    return ops.layer_norm(mixed, gain, bias)
