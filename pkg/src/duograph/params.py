"""Parameter construction for every model variant.

Parameters live in a flat named list whose order is fixed by the graph
schema and config, so checkpoints, the optimizer, and gradient checks all
see the same layout. Names double as the checkpoint header keys.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigShapeMismatch
from .graph import BiGraph, NodeType
from .rand import rng_for
from .tensor import Tensor

TYPES = (NodeType.A, NodeType.B)


class ParamSet:
    def __init__(self):
        self.named: list[tuple[str, Tensor]] = []
        self._index: dict[str, Tensor] = {}

    def add(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._index:
            raise ConfigShapeMismatch(f"parameter {name!r} created twice")
        t = Tensor(data, requires_grad=True)
        self.named.append((name, t))
        self._index[name] = t
        return t

    def get(self, name: str) -> Tensor:
        return self._index[name]

    def has(self, name: str) -> bool:
        return name in self._index

    def names(self) -> list[str]:
        return [n for n, _ in self.named]

    def snapshot(self) -> list[tuple[str, np.ndarray]]:
        return [(n, t.data.copy()) for n, t in self.named]

    def load(self, named_arrays) -> None:
        """Overwrite parameter data in place; shapes and names must match."""
        arrays = dict(named_arrays)
        if set(arrays) != set(self._index):
            missing = set(self._index) - set(arrays)
            extra = set(arrays) - set(self._index)
            raise ConfigShapeMismatch(
                f"checkpoint names disagree (missing {sorted(missing)}, extra {sorted(extra)})")
        for name, t in self.named:
            arr = np.asarray(arrays[name], dtype=np.float64)
            if arr.shape != t.data.shape:
                raise ConfigShapeMismatch(
                    f"parameter {name!r}: checkpoint shape {arr.shape} != {t.data.shape}")
            t.data = arr.copy()


def _glorot(rng, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _attn_vec(rng, width: int) -> np.ndarray:
    limit = 1.0 / np.sqrt(width)
    return rng.uniform(-limit, limit, size=(width, 1))


def build_params(graph: BiGraph, config, tasks=()) -> ParamSet:
    """Create and initialize every tensor the configured variant reads."""
    d_in = config.input_dim
    if graph.feature_dim != d_in:
        raise ConfigShapeMismatch(
            f"config input_dim {d_in} != graph feature dim {graph.feature_dim}")
    d = config.hidden_dim
    rng = rng_for(config.seed, "init")
    ps = ParamSet()
    hierarchical = config.variant in ("full", "no-global", "no-dual")
    global_side = config.variant in ("full", "no-dual")

    if config.num_layers == 0:
        for t in TYPES:
            ps.add(f"proj.{t.label}", _glorot(rng, d_in, d))
        _add_heads(ps, rng, d, tasks)
        return ps

    for layer in range(config.num_layers):
        width = d_in if layer == 0 else d
        for t in TYPES:
            ps.add(f"layer{layer}.{t.label}.proj", _glorot(rng, width, d))
        if config.variant == "no-dual":
            for t in TYPES:
                rels = graph.intra_relations(t) + graph.inter_relations()
                for rel in rels:
                    stem = f"layer{layer}.uni.{rel}.to_{t.label}"
                    ps.add(f"{stem}.attn", _attn_vec(rng, 2 * d))
                    ps.add(f"{stem}.gain", np.ones((1, d)))
                    ps.add(f"{stem}.bias", np.zeros((1, d)))
                ps.add(f"layer{layer}.{t.label}.local_score", _attn_vec(rng, 2 * d))
                ps.add(f"layer{layer}.{t.label}.global_logits", np.zeros((1, len(rels))))
                ps.add(f"layer{layer}.{t.label}.mix_logit", np.zeros((1, 1)))
                ps.add(f"layer{layer}.{t.label}.res.gain", np.ones((1, d)))
                ps.add(f"layer{layer}.{t.label}.res.bias", np.zeros((1, d)))
            continue
        # within-class stage
        for t in TYPES:
            for rel in graph.intra_relations(t):
                stem = f"layer{layer}.intra.{rel}"
                ps.add(f"{stem}.attn", _attn_vec(rng, 2 * d))
                ps.add(f"{stem}.gain", np.ones((1, d)))
                ps.add(f"{stem}.bias", np.zeros((1, d)))
            if hierarchical:
                ps.add(f"layer{layer}.{t.label}.local_score", _attn_vec(rng, 2 * d))
            if global_side:
                k = len(graph.intra_relations(t))
                ps.add(f"layer{layer}.{t.label}.global_logits", np.zeros((1, k)))
                ps.add(f"layer{layer}.{t.label}.mix_logit", np.zeros((1, 1)))
            ps.add(f"layer{layer}.{t.label}.res_intra.gain", np.ones((1, d)))
            ps.add(f"layer{layer}.{t.label}.res_intra.bias", np.zeros((1, d)))
        # cross-class stage
        for t in TYPES:
            ps.add(f"layer{layer}.{t.label}.common_map", _glorot(rng, d, d))
        for rel in graph.inter_relations():
            for t in TYPES:
                stem = f"layer{layer}.inter.{rel}.to_{t.label}"
                ps.add(f"{stem}.attn", _attn_vec(rng, 2 * d))
                ps.add(f"{stem}.gain", np.ones((1, d)))
                ps.add(f"{stem}.bias", np.zeros((1, d)))
        for t in TYPES:
            if hierarchical:
                ps.add(f"layer{layer}.{t.label}.inter_score", _attn_vec(rng, 2 * d))
            ps.add(f"layer{layer}.{t.label}.res_inter.gain", np.ones((1, d)))
            ps.add(f"layer{layer}.{t.label}.res_inter.bias", np.zeros((1, d)))
        if config.ordering == "parallel":
            for t in TYPES:
                ps.add(f"layer{layer}.{t.label}.merge", _glorot(rng, 2 * d, d))

    _add_heads(ps, rng, d, tasks)
    return ps


def _add_heads(ps: ParamSet, rng, d: int, tasks) -> None:
    from .model import TaskKind
    for task in tasks:
        if task.kind is TaskKind.LINK_RANKING:
            ps.add(f"head.{task.name}.query", _glorot(rng, d, d))
            ps.add(f"head.{task.name}.cand", _glorot(rng, d, d))
        else:
            ps.add(f"head.{task.name}.weight", _glorot(rng, d, task.n_classes))
