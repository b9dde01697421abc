"""Full-batch training with cosine annealing and checkpoint selection.

After every epoch the model is evaluated on the validation split; the
retained parameters are those of the epoch with the best validation
ranking quality, with lower validation loss breaking exact ties.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import ops
from .errors import DivergedLoss, IoFailure, NoLabeledNodes
from .graph import BiGraph, NodeType
from .metrics import accuracy, cluster_eval, mrr, ndcg, ranked_order, top1_predictions
from .model import (ModelConfig, TaskKind, TaskSpec, classification_scores, forward,
                    ranking_scores, task_loss)
from .optim import AdamW, cosine_lr
from .params import ParamSet, build_params
from .rand import rng_for
from .tensor import Tape, backward


@dataclass
class TrainResult:
    log: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_ndcg: float = -1.0
    best_val_loss: float = float("inf")
    best_params: list = field(default_factory=list)


def _mean_val_ndcg(graph: BiGraph, tasks, ps: ParamSet, config: ModelConfig,
                   embs_data: dict, split: str) -> float:
    vals = []
    for task in tasks:
        ids = task.split_ids(split)
        if ids.size == 0:
            continue
        vals.append(_task_ndcg(task, embs_data, ps, ids))
    if not vals:
        raise NoLabeledNodes(f"no task has instances in split {split!r}")
    return float(np.mean(vals))


def _task_ndcg(task: TaskSpec, embs_data: dict, ps: ParamSet, ids: np.ndarray) -> float:
    if task.kind is TaskKind.LINK_RANKING:
        scored = ranking_scores(task, embs_data[task.target_type],
                                embs_data[task.target_type.other], ps, ids)
        return float(np.mean([ndcg(s, _one_hot_bool(len(s), t)) for s, t in scored]))
    scores = classification_scores(task, embs_data[task.target_type], ps, ids)
    rel = task.label_matrix(ids) > 0
    return float(np.mean([ndcg(scores[i], rel[i]) for i in range(len(ids))]))


def _one_hot_bool(n: int, idx: int) -> np.ndarray:
    out = np.zeros(n, dtype=bool)
    out[idx] = True
    return out


def _total_loss(graph, tasks, ps, config, split, training, drop_rng, neg_rng):
    embs, _ = forward(graph, config, ps, training=training, rng=drop_rng)
    total = None
    for task in tasks:
        if task.split_ids(split).size == 0:
            continue
        loss = task_loss(task, embs, ps, config, split=split, rng=neg_rng)
        total = loss if total is None else ops.add(total, loss)
    if total is None:
        raise NoLabeledNodes(f"no task has data in split {split!r}")
    return total, embs


def train(graph: BiGraph, tasks, config: ModelConfig, ps: ParamSet | None = None):
    """Train on the `train` split; returns (params, TrainResult).

    The returned ParamSet holds the selected (best-validation) weights.
    """
    if ps is None:
        ps = build_params(graph, config, tasks)
    opt = AdamW(ps.named, weight_decay=config.weight_decay)
    result = TrainResult()
    for epoch in range(config.epochs):
        lr = cosine_lr(epoch, config.epochs, config.lr_max, config.lr_min)
        drop_rng = rng_for(config.seed, "dropout", epoch)
        neg_rng = rng_for(config.seed, "negatives", epoch)
        opt.zero_grad()
        with Tape() as tape:
            loss, _ = _total_loss(graph, tasks, ps, config, "train", True, drop_rng, neg_rng)
        train_loss = float(loss.data[0, 0])
        if not np.isfinite(train_loss):
            raise DivergedLoss(f"train loss became {train_loss} at epoch {epoch + 1}")
        backward(tape, loss)
        opt.step(lr)

        val_neg_rng = rng_for(config.seed, "val-negatives")
        val_loss_t, embs = _total_loss(graph, tasks, ps, config, "val", False, None, val_neg_rng)
        val_loss = float(val_loss_t.data[0, 0])
        embs_data = {t: embs[t].data for t in embs}
        val_ndcg = _mean_val_ndcg(graph, tasks, ps, config, embs_data, "val")
        result.log.append({"epoch": epoch + 1, "train_loss": train_loss,
                           "val_ndcg": val_ndcg, "val_loss": val_loss, "lr": lr})
        better = (val_ndcg > result.best_val_ndcg
                  or (val_ndcg == result.best_val_ndcg and val_loss < result.best_val_loss))
        if better:
            result.best_epoch = epoch + 1
            result.best_val_ndcg = val_ndcg
            result.best_val_loss = val_loss
            result.best_params = ps.snapshot()
    ps.load(result.best_params)
    return ps, result


def write_log(path, log: list) -> None:
    """One JSON object per line: epoch, train_loss, val_ndcg, val_loss, lr."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for entry in log:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write training log {path}: {exc}") from exc


def evaluate(graph: BiGraph, tasks, ps: ParamSet, config: ModelConfig,
             split: str = "test", cluster_repeats: int = 10) -> dict:
    """Per-task ranking/accuracy metrics plus clustering quality.

    Clustering runs k-means on the embeddings of the first single-label
    task's node class against its labels, over all labeled nodes.
    """
    embs, _ = forward(graph, config, ps, training=False)
    embs_data = {t: embs[t].data for t in embs}
    report = {}
    for task in tasks:
        ids = task.split_ids(split)
        if ids.size == 0:
            report[task.name] = {"ndcg": None, "mrr": None, "acc": None}
            continue
        if task.kind is TaskKind.LINK_RANKING:
            scored = ranking_scores(task, embs_data[task.target_type],
                                    embs_data[task.target_type.other], ps, ids)
            ndcgs = [ndcg(s, _one_hot_bool(len(s), t)) for s, t in scored]
            mrrs = [mrr(s, _one_hot_bool(len(s), t)) for s, t in scored]
            top1 = [int(ranked_order(s)[0]) for s, _ in scored]
            acc = accuracy(top1, [(t,) for _, t in scored])
        else:
            scores = classification_scores(task, embs_data[task.target_type], ps, ids)
            rel = task.label_matrix(ids) > 0
            ndcgs = [ndcg(scores[i], rel[i]) for i in range(len(ids))]
            mrrs = [mrr(scores[i], rel[i]) for i in range(len(ids))]
            acc = accuracy(top1_predictions(scores),
                           [task.labels[int(n)] for n in ids])
        report[task.name] = {"ndcg": float(np.mean(ndcgs)),
                             "mrr": float(np.mean(mrrs)), "acc": acc}
    single = next((t for t in tasks if t.kind is TaskKind.SINGLE_LABEL), None)
    if single is not None:
        nodes = np.array(sorted(single.labels), dtype=np.int64)
        labels = np.array([single.labels[int(n)][0] for n in nodes])
        emb = embs_data[single.target_type][nodes]
        res = cluster_eval(emb, labels, single.n_classes,
                           repeats=cluster_repeats, seed=config.seed)
        report["clustering"] = {"nmi_mean": res.nmi_mean, "nmi_std": res.nmi_std,
                                "ari_mean": res.ari_mean, "ari_std": res.ari_std}
    return report
