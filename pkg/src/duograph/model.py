"""Model assembly: configuration, task declarations, the layered forward
pass in its variants and stage orderings, and the task losses.

A layer projects both node classes, runs the within-class stage and the
cross-class stage (order set by `ordering`), and applies a weighted
residual after each stage. Variants prune parts of that pipeline:
`no-dual` folds all relations into one stage, `no-hier` replaces learned
relation weights with uniform averaging, `no-global` drops the
graph-level weight share.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from enum import Enum

import numpy as np

from . import inter, intra, ops
from .errors import ConfigShapeMismatch, NoLabeledNodes, NoRelations
from .graph import BiGraph, NodeType
from .intra import AttentionRecord, FusionRecord
from .params import ParamSet, TYPES
from .tensor import Tensor

VARIANTS = ("full", "no-dual", "no-hier", "no-global")
ORDERINGS = ("standard", "inverted", "parallel")


@dataclass
class ModelConfig:
    input_dim: int
    hidden_dim: int = 128
    num_layers: int = 2
    dropout: float = 0.1
    temperature: float = 1.0
    res_weight: float = 0.5
    res_weight_inter: float = 0.5
    slope: float = 0.2
    lr_max: float = 0.01
    lr_min: float = 1e-4
    weight_decay: float = 1e-4
    epochs: int = 200
    num_negatives: int = 4
    variant: str = "full"
    ordering: str = "standard"
    extra_inter_residual: bool = False
    literal_temperature: bool = False
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        checks = [
            (self.input_dim >= 1, "input_dim must be >= 1"),
            (self.hidden_dim >= 2, "hidden_dim must be >= 2"),
            (self.num_layers >= 0, "num_layers must be >= 0"),
            (0.0 <= self.dropout < 1.0, "dropout must lie in [0, 1)"),
            (self.temperature > 0.0, "temperature must be positive"),
            (0.0 <= self.res_weight <= 1.0, "res_weight must lie in [0, 1]"),
            (0.0 <= self.res_weight_inter <= 1.0, "res_weight_inter must lie in [0, 1]"),
            (0.0 < self.slope < 1.0, "slope must lie in (0, 1)"),
            (self.lr_max > 0 and self.lr_min >= 0, "learning rates must be positive"),
            (self.epochs >= 1, "epochs must be >= 1"),
            (self.num_negatives >= 1, "num_negatives must be >= 1"),
            (self.variant in VARIANTS, f"variant must be one of {VARIANTS}"),
            (self.ordering in ORDERINGS, f"ordering must be one of {ORDERINGS}"),
            (self.seed >= 0, "seed must be a non-negative integer"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigShapeMismatch(msg)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigShapeMismatch(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


class TaskKind(Enum):
    SINGLE_LABEL = "single_label"
    MULTI_LABEL = "multi_label"
    LINK_RANKING = "link_ranking"


@dataclass
class RankInstance:
    """One retrieval query: rank `candidates`, of which one is correct."""

    query: int
    candidates: np.ndarray
    true_index: int

    @staticmethod
    def make(query: int, true_id: int, distractors) -> "RankInstance":
        cands = np.unique(np.append(np.asarray(distractors, dtype=np.int64), true_id))
        return RankInstance(query=int(query), candidates=cands,
                            true_index=int(np.searchsorted(cands, true_id)))

    @property
    def true_id(self) -> int:
        return int(self.candidates[self.true_index])


@dataclass
class TaskSpec:
    """A prediction task bound to one node class.

    Classification tasks label nodes (one or several classes per node);
    ranking tasks hold retrieval instances. Splits map split name to node
    ids (classification) or instance indices (ranking).
    """

    name: str
    kind: TaskKind
    target_type: NodeType
    n_classes: int = 0
    labels: dict = field(default_factory=dict)
    instances: list = field(default_factory=list)
    splits: dict = field(default_factory=dict)

    def split_ids(self, split: str) -> np.ndarray:
        return np.asarray(self.splits.get(split, np.empty(0, dtype=np.int64)), dtype=np.int64)

    def label_matrix(self, ids) -> np.ndarray:
        out = np.zeros((len(ids), self.n_classes))
        for row, node in enumerate(ids):
            for c in self.labels[int(node)]:
                out[row, c] = 1.0
        return out


@dataclass
class ForwardRecords:
    attention: list = field(default_factory=list)
    fusion: list = field(default_factory=list)


def _stage_params(ps: ParamSet, layer: int, rel: str, group: str, t: NodeType):
    stem = {"intra": f"layer{layer}.intra.{rel}",
            "inter": f"layer{layer}.inter.{rel}.to_{t.label}",
            "uni": f"layer{layer}.uni.{rel}.to_{t.label}"}[group]
    return ps.get(f"{stem}.attn"), ps.get(f"{stem}.gain"), ps.get(f"{stem}.bias")


def _intra_stage(graph: BiGraph, inputs: dict, ps: ParamSet, layer: int,
                 config: ModelConfig, records: ForwardRecords | None) -> dict:
    out = {}
    mean_fusion = config.variant == "no-hier"
    use_global = config.variant == "full"
    for t in TYPES:
        rels = graph.intra_relations(t)
        if not rels:
            raise NoRelations(f"node class {t.label} declares no within-class relations")
        reps, masks = [], []
        n = graph.n_nodes(t)
        for rel in rels:
            attn, gain, bias = _stage_params(ps, layer, rel, "intra", t)
            rep, alpha, plan = intra.node_aggregate(inputs[t], graph, rel, t,
                                                    attn, gain, bias, config.slope)
            reps.append(rep)
            masks.append(np.ones(n, dtype=bool))
            if records is not None:
                records.attention.append(AttentionRecord(
                    layer=layer, relation=rel, target_type=t, stage="intra",
                    edge_targets=plan.edge_targets, sources=plan.sources,
                    offsets=plan.offsets, alpha=alpha.data[:, 0].copy()))
        score_vec = ps.get(f"layer{layer}.{t.label}.local_score") if not mean_fusion else None
        glb = ps.get(f"layer{layer}.{t.label}.global_logits") if use_global else None
        mix = ps.get(f"layer{layer}.{t.label}.mix_logit") if use_global else None
        fused, local_np, global_row, mix_val, coeff, mask = intra.relation_fuse(
            inputs[t], reps, masks, score_vec, glb, mix, mean_fusion=mean_fusion)
        if records is not None:
            records.fusion.append(FusionRecord(
                layer=layer, target_type=t, stage="intra", relations=rels, mask=mask,
                local=local_np, global_row=global_row, mix=mix_val, coeff=coeff))
        out[t] = inter.weighted_residual(
            fused, inputs[t], config.res_weight,
            ps.get(f"layer{layer}.{t.label}.res_intra.gain"),
            ps.get(f"layer{layer}.{t.label}.res_intra.bias"), config.slope)
    return out


def _inter_stage(graph: BiGraph, inputs: dict, ps: ParamSet, layer: int,
                 config: ModelConfig, records: ForwardRecords | None) -> dict:
    rels = graph.inter_relations()
    mean_fusion = config.variant == "no-hier"
    mapped = {t: ops.matmul(inputs[t], ps.get(f"layer{layer}.{t.label}.common_map"))
              for t in TYPES}
    out = {}
    for t in TYPES:
        reps, masks = [], []
        for rel in rels:
            attn, gain, bias = _stage_params(ps, layer, rel, "inter", t)
            rep, reached, alpha, plan = inter.node_aggregate(
                mapped[t], mapped[t.other], graph, rel, t, attn, gain, bias, config.slope)
            reps.append(rep)
            masks.append(reached)
            if records is not None and alpha is not None:
                records.attention.append(AttentionRecord(
                    layer=layer, relation=rel, target_type=t, stage="inter",
                    edge_targets=plan.edge_targets, sources=plan.sources,
                    offsets=plan.offsets, alpha=alpha.data[:, 0].copy()))
        if reps:
            score_vec = (ps.get(f"layer{layer}.{t.label}.inter_score")
                         if not mean_fusion else None)
            fused, local_np, global_row, mix_val, coeff, mask = intra.relation_fuse(
                inputs[t], reps, masks, score_vec, None, None, mean_fusion=mean_fusion)
            if records is not None:
                records.fusion.append(FusionRecord(
                    layer=layer, target_type=t, stage="inter", relations=rels, mask=mask,
                    local=local_np, global_row=global_row, mix=mix_val, coeff=coeff))
        else:
            # no cross relations declared: stage contributes zero pre-residual
            fused = ops.constant(np.zeros(inputs[t].shape))
        gain = ps.get(f"layer{layer}.{t.label}.res_inter.gain")
        bias = ps.get(f"layer{layer}.{t.label}.res_inter.bias")
        res = inter.weighted_residual(fused, inputs[t], config.res_weight_inter,
                                      gain, bias, config.slope)
        if config.extra_inter_residual:
            # second pass through the same residual, reusing its tensors
            res = inter.weighted_residual(res, inputs[t], config.res_weight_inter,
                                          gain, bias, config.slope)
        out[t] = res
    return out


def _unified_stage(graph: BiGraph, inputs: dict, ps: ParamSet, layer: int,
                   config: ModelConfig, records: ForwardRecords | None) -> dict:
    out = {}
    for t in TYPES:
        rel_names = graph.intra_relations(t) + graph.inter_relations()
        if not rel_names:
            raise NoRelations(f"node class {t.label} has no relations")
        reps, masks = [], []
        n = graph.n_nodes(t)
        for rel in graph.intra_relations(t):
            attn, gain, bias = _stage_params(ps, layer, rel, "uni", t)
            plan = graph.message_plan(rel, t)
            rep, alpha = intra.attend_over_plan(inputs[t], inputs[t], plan,
                                                attn, gain, bias, config.slope)
            reps.append(rep)
            masks.append(np.ones(n, dtype=bool))
            if records is not None:
                records.attention.append(AttentionRecord(
                    layer=layer, relation=rel, target_type=t, stage="unified",
                    edge_targets=plan.edge_targets, sources=plan.sources,
                    offsets=plan.offsets, alpha=alpha.data[:, 0].copy()))
        for rel in graph.inter_relations():
            attn, gain, bias = _stage_params(ps, layer, rel, "uni", t)
            rep, reached, alpha, plan = inter.node_aggregate(
                inputs[t], inputs[t.other], graph, rel, t, attn, gain, bias, config.slope)
            reps.append(rep)
            masks.append(reached)
            if records is not None and alpha is not None:
                records.attention.append(AttentionRecord(
                    layer=layer, relation=rel, target_type=t, stage="unified",
                    edge_targets=plan.edge_targets, sources=plan.sources,
                    offsets=plan.offsets, alpha=alpha.data[:, 0].copy()))
        fused, local_np, global_row, mix_val, coeff, mask = intra.relation_fuse(
            inputs[t], reps, masks,
            ps.get(f"layer{layer}.{t.label}.local_score"),
            ps.get(f"layer{layer}.{t.label}.global_logits"),
            ps.get(f"layer{layer}.{t.label}.mix_logit"))
        if records is not None:
            records.fusion.append(FusionRecord(
                layer=layer, target_type=t, stage="unified", relations=rel_names,
                mask=mask, local=local_np, global_row=global_row, mix=mix_val, coeff=coeff))
        out[t] = inter.weighted_residual(
            fused, inputs[t], config.res_weight,
            ps.get(f"layer{layer}.{t.label}.res.gain"),
            ps.get(f"layer{layer}.{t.label}.res.bias"), config.slope)
    return out


def forward(graph: BiGraph, config: ModelConfig, ps: ParamSet, *,
            training: bool = False, rng=None, collect: bool = False):
    """Embeddings for both node classes; optionally the attention records.

    Dropout applies to each layer's input only when `training` is true,
    drawing masks from `rng`.
    """
    if graph.feature_dim != config.input_dim:
        raise ConfigShapeMismatch(
            f"graph features have dim {graph.feature_dim}, config says {config.input_dim}")
    if training and config.dropout > 0.0 and rng is None:
        raise ConfigShapeMismatch("training forward with dropout needs an rng")
    records = ForwardRecords() if collect else None
    current = {t: ops.constant(graph.features[t]) for t in TYPES}
    if config.num_layers == 0:
        return ({t: ops.matmul(current[t], ps.get(f"proj.{t.label}")) for t in TYPES},
                records)
    for layer in range(config.num_layers):
        if training and config.dropout > 0.0:
            current = {t: ops.dropout(current[t], config.dropout, rng) for t in TYPES}
        projected = {t: ops.matmul(current[t], ps.get(f"layer{layer}.{t.label}.proj"))
                     for t in TYPES}
        if config.variant == "no-dual":
            current = _unified_stage(graph, projected, ps, layer, config, records)
        elif config.ordering == "standard":
            z = _intra_stage(graph, projected, ps, layer, config, records)
            current = _inter_stage(graph, z, ps, layer, config, records)
        elif config.ordering == "inverted":
            v = _inter_stage(graph, projected, ps, layer, config, records)
            current = _intra_stage(graph, v, ps, layer, config, records)
        else:  # parallel
            z = _intra_stage(graph, projected, ps, layer, config, records)
            v = _inter_stage(graph, projected, ps, layer, config, records)
            current = {t: ops.matmul(ops.concat_cols(z[t], v[t]),
                                     ps.get(f"layer{layer}.{t.label}.merge"))
                       for t in TYPES}
    return current, records


# task losses

def task_loss(task: TaskSpec, embs: dict, ps: ParamSet, config: ModelConfig,
              split: str = "train", rng=None) -> Tensor:
    """Scalar loss for one task on one split."""
    if task.kind is TaskKind.LINK_RANKING:
        return _ranking_loss(task, embs, ps, config, split, rng)
    ids = task.split_ids(split)
    if ids.size == 0:
        raise NoLabeledNodes(f"task {task.name!r} has no labeled nodes in split {split!r}")
    m = ids.size
    logits = ops.matmul(ops.gather_rows(embs[task.target_type], ids),
                        ps.get(f"head.{task.name}.weight"))
    y = ops.constant(task.label_matrix(ids))
    temp = config.temperature
    if task.kind is TaskKind.SINGLE_LABEL:
        if config.literal_temperature:
            p = ops.softmax_rows(logits)
            loss = ops.scalar_mul(ops.sum_all(ops.mul(ops.log(p), y)), -1.0 / m)
            return ops.add(loss, ops.constant(np.log(temp)))
        p = ops.softmax_rows(ops.scalar_mul(logits, 1.0 / temp))
        return ops.scalar_mul(ops.sum_all(ops.mul(ops.log(p), y)), -1.0 / m)
    # multi-label: per-class binary cross-entropy via the softplus identity
    z = logits if config.literal_temperature else ops.scalar_mul(logits, 1.0 / temp)
    per_entry = ops.add(ops.softplus(z), ops.scalar_mul(ops.mul(y, z), -1.0))
    denom = m * task.n_classes
    loss = ops.scalar_mul(ops.sum_all(per_entry), 1.0 / denom)
    if config.literal_temperature:
        loss = ops.add(loss, ops.constant(y.data.sum() * np.log(temp) / denom))
    return loss


def _ranking_loss(task: TaskSpec, embs: dict, ps: ParamSet, config: ModelConfig,
                  split: str, rng) -> Tensor:
    idxs = task.split_ids(split)
    if idxs.size == 0:
        raise NoLabeledNodes(f"task {task.name!r} has no instances in split {split!r}")
    if rng is None:
        raise NoLabeledNodes(f"ranking loss for task {task.name!r} needs an rng for negatives")
    cand_type = task.target_type.other
    n_cand = embs[cand_type].shape[0]
    instances = [task.instances[i] for i in idxs]
    m = len(instances)
    k = config.num_negatives
    queries = np.array([inst.query for inst in instances], dtype=np.int64)
    cols = np.zeros((m, 1 + k), dtype=np.int64)
    for row, inst in enumerate(instances):
        cols[row, 0] = inst.true_id
        for j in range(k):
            neg = int(rng.integers(n_cand))
            while neg == inst.true_id:
                neg = int(rng.integers(n_cand))
            cols[row, 1 + j] = neg
    q = ops.matmul(ops.gather_rows(embs[task.target_type], queries),
                   ps.get(f"head.{task.name}.query"))
    c = ops.matmul(ops.gather_rows(embs[cand_type], cols.reshape(-1)),
                   ps.get(f"head.{task.name}.cand"))
    q_rep = ops.gather_rows(q, np.repeat(np.arange(m), 1 + k))
    dots = ops.row_sum(ops.mul(q_rep, c))
    scores = ops.reshape(dots, m, 1 + k)
    first = np.zeros((m, 1 + k))
    first[:, 0] = 1.0
    y = ops.constant(first)
    if config.literal_temperature:
        p = ops.softmax_rows(scores)
        loss = ops.scalar_mul(ops.sum_all(ops.mul(ops.log(p), y)), -1.0 / m)
        return ops.add(loss, ops.constant(np.log(config.temperature)))
    p = ops.softmax_rows(ops.scalar_mul(scores, 1.0 / config.temperature))
    return ops.scalar_mul(ops.sum_all(ops.mul(ops.log(p), y)), -1.0 / m)


# eval-side scoring (plain numpy on detached embeddings)

def classification_scores(task: TaskSpec, emb_data: np.ndarray, ps: ParamSet,
                          ids: np.ndarray) -> np.ndarray:
    w = ps.get(f"head.{task.name}.weight").data
    return emb_data[ids] @ w


def ranking_scores(task: TaskSpec, emb_q: np.ndarray, emb_c: np.ndarray,
                   ps: ParamSet, idxs: np.ndarray):
    """Per instance: scores over its candidate list (in candidate order)."""
    wq = ps.get(f"head.{task.name}.query").data
    wc = ps.get(f"head.{task.name}.cand").data
    out = []
    for i in idxs:
        inst = task.instances[int(i)]
        qv = emb_q[inst.query] @ wq
        cv = emb_c[inst.candidates] @ wc
        out.append((cv @ qv, inst.true_index))
    return out
