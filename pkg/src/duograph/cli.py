"""Command-line front end.

Seven subcommands cover the working loop: generate a planted dataset,
train, evaluate, run the variant comparison, check gradients against
finite differences, and export attention weights or embeddings for
outside tooling. All artifacts are deterministic for a fixed seed and
config, so re-running a command overwrites byte-identical files.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .errors import Error, InfeasibleConfig, IoFailure
from .graph import BiGraph, NodeType, format_float
from .model import (VARIANTS, ORDERINGS, ModelConfig, TaskKind, forward, task_loss)
from .params import ParamSet, build_params
from .rand import rng_for
from .synth import SynthConfig, export_dataset, generate, import_dataset
from .tensor import Tape, backward, load_tensors, save_tensors
from .train import evaluate, train, write_log

COMMANDS = ("generate", "train", "eval", "ablate", "gradcheck",
            "export-attn", "export-emb")

GRADCHECK_TOL = 1e-3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duograph")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--out", default=".")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--variant", choices=VARIANTS, default=None)
        p.add_argument("--ordering", choices=ORDERINGS, default=None)
        p.add_argument("--compat-literal-temperature", action="store_true")
    return parser


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoFailure(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InfeasibleConfig("config root must be a JSON object")
    return cfg


def _synth_config(cfg: dict, args) -> SynthConfig:
    fields = dict(cfg.get("synth", {}))
    if args.seed is not None:
        fields["seed"] = args.seed
    return SynthConfig.from_dict(fields)


def _resolve_dataset(cfg: dict, args):
    """Dataset comes from cfg["data"] when present, else the generator."""
    data_dir = cfg.get("data")
    if data_dir:
        return import_dataset(data_dir), None
    synth = _synth_config(cfg, args)
    return generate(synth), synth


def _model_config(cfg: dict, args, graph: BiGraph) -> ModelConfig:
    fields = dict(cfg.get("model", {}))
    fields.setdefault("input_dim", graph.feature_dim)
    if args.seed is not None:
        fields["seed"] = args.seed
    if args.variant is not None:
        fields["variant"] = args.variant
    if args.ordering is not None:
        fields["ordering"] = args.ordering
    if args.compat_literal_temperature:
        fields["literal_temperature"] = True
    return ModelConfig.from_dict(fields)


def _write_json(path, payload) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _load_checkpoint(cfg: dict, args, graph, tasks, config) -> ParamSet:
    ps = build_params(graph, config, tasks)
    path = cfg.get("checkpoint") or os.path.join(args.out, "checkpoint.bin")
    ps.load(load_tensors(path))
    return ps


def _cmd_generate(cfg, args) -> int:
    synth = _synth_config(cfg, args)
    graph, tasks = generate(synth)
    os.makedirs(args.out, exist_ok=True)
    export_dataset(graph, tasks, args.out)
    _write_json(os.path.join(args.out, "synth_config.json"), synth.to_dict())
    print(f"dataset written to {args.out}")
    return 0


def _cmd_train(cfg, args) -> int:
    (graph, tasks), synth = _resolve_dataset(cfg, args)
    config = _model_config(cfg, args, graph)
    ps, result = train(graph, tasks, config)
    os.makedirs(args.out, exist_ok=True)
    save_tensors(os.path.join(args.out, "checkpoint.bin"),
                 [(n, ps.get(n)) for n in ps.names()])
    write_log(os.path.join(args.out, "train_log.jsonl"), result.log)
    resolved = {"model": config.to_dict(),
                "synth": synth.to_dict() if synth is not None else None,
                "data": cfg.get("data")}
    _write_json(os.path.join(args.out, "resolved_config.json"), resolved)
    print(f"best epoch {result.best_epoch}: "
          f"val ndcg {format_float(result.best_val_ndcg)}, "
          f"val loss {format_float(result.best_val_loss)}")
    return 0


def _cmd_eval(cfg, args) -> int:
    (graph, tasks), _ = _resolve_dataset(cfg, args)
    config = _model_config(cfg, args, graph)
    ps = _load_checkpoint(cfg, args, graph, tasks, config)
    report = evaluate(graph, tasks, ps, config)
    os.makedirs(args.out, exist_ok=True)
    _write_json(os.path.join(args.out, "eval_report.json"), report)
    print(json.dumps(report, sort_keys=True))
    return 0


def _ablate_cell(payload: dict) -> dict:
    """One variant x seed run; module level so worker pools can pickle it.

    The dataset is fixed by the config (cell seeds steer only model
    randomness), so every cell compares on identical data.
    """
    cfg = dict(payload["cfg"])
    ns_data = argparse.Namespace(seed=None, variant=None, ordering=None,
                                 compat_literal_temperature=False)
    ns_model = argparse.Namespace(seed=payload["seed"], variant=payload["variant"],
                                  ordering=None, compat_literal_temperature=False)
    (graph, tasks), _ = _resolve_dataset(cfg, ns_data)
    config = _model_config(cfg, ns_model, graph)
    ps, _ = train(graph, tasks, config)
    report = evaluate(graph, tasks, ps, config)
    return {"variant": payload["variant"], "seed": payload["seed"],
            "report": report}


def _cmd_ablate(cfg, args) -> int:
    if args.seed is not None:
        # the command seed picks the world; cell seeds vary training only
        cfg = dict(cfg)
        cfg["synth"] = dict(cfg.get("synth", {}), seed=args.seed)
    seeds = cfg.get("seeds")
    if seeds is None:
        seeds = [args.seed if args.seed is not None else 0]
    if not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise InfeasibleConfig("seeds must be a non-empty list of non-negative ints")
    jobs = [{"cfg": cfg, "variant": v, "seed": s} for s in seeds for v in VARIANTS]
    threads = int(os.environ.get("DHAN_THREADS", "1"))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_ablate_cell, jobs))
    else:
        rows = [_ablate_cell(job) for job in jobs]

    done = {(r["variant"], r["seed"]) for r in rows}
    expected = {(v, s) for s in seeds for v in VARIANTS}
    if done != expected:
        missing = sorted(expected - done)
        raise InfeasibleConfig(f"ablation incomplete, missing cells: {missing}")

    os.makedirs(args.out, exist_ok=True)
    _write_json(os.path.join(args.out, "ablation.json"),
                {"seeds": list(seeds), "variants": list(VARIANTS), "rows": rows})
    columns = ["variant", "seed", "pv_acc", "pf_l1_acc", "pf_l2_acc",
               "ad_ndcg", "ad_mrr", "nmi_mean", "ari_mean"]
    lines = ["\t".join(columns)]
    for row in rows:
        rep = row["report"]

        def cell(value):
            return "NA" if value is None else format_float(value)

        lines.append("\t".join([
            row["variant"], str(row["seed"]),
            cell(rep.get("pv", {}).get("acc")),
            cell(rep.get("pf_l1", {}).get("acc")),
            cell(rep.get("pf_l2", {}).get("acc")),
            cell(rep.get("ad", {}).get("ndcg")),
            cell(rep.get("ad", {}).get("mrr")),
            cell(rep.get("clustering", {}).get("nmi_mean")),
            cell(rep.get("clustering", {}).get("ari_mean")),
        ]))
    try:
        with open(os.path.join(args.out, "ablation.tsv"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write ablation table: {exc}") from exc
    print(f"ablation table written to {args.out} "
          f"({len(rows)} cells, {len(seeds)} seeds x {len(VARIANTS)} variants)")
    return 0


def builtin_gradcheck_problem(seed: int):
    """Tiny fixed-size problem (20 nodes) exercising every head kind."""
    synth = SynthConfig(n_papers=12, n_authors=8, n_venues=2, n_fields_l1=2,
                        n_fields_l2=3, feature_dim=5, min_authors=1, max_authors=3,
                        name_group_size=2, ad_distractors=3, seed=seed)
    graph, tasks = generate(synth)
    config = ModelConfig(input_dim=5, hidden_dim=4, num_layers=2, dropout=0.0,
                         seed=seed)
    return graph, tasks, config


def gradcheck(seed: int, entries_per_tensor: int = 4, h: float = 1e-5):
    """Compare backward() against central differences on the builtin problem.

    Samples a few entries from every parameter tensor. Returns
    (max relative error, entries checked, tensor count).
    """
    graph, tasks, config = builtin_gradcheck_problem(seed)
    ps = build_params(graph, config, tasks)

    def loss_value() -> float:
        total = None
        from . import ops
        embs, _ = forward(graph, config, ps, training=False)
        for task in tasks:
            loss = task_loss(task, embs, ps, config, split="train",
                             rng=rng_for(seed, "negatives", 0))
            total = loss if total is None else ops.add(total, loss)
        return total

    with Tape() as tape:
        loss = loss_value()
        backward(tape, loss)
    analytic = {name: ps.get(name).grad.copy() for name in ps.names()}

    pick_rng = rng_for(seed, "gradcheck")
    worst, checked = 0.0, 0
    for name in ps.names():
        tensor = ps.get(name)
        flat = tensor.data.reshape(-1)
        count = min(entries_per_tensor, flat.size)
        idx = pick_rng.choice(flat.size, size=count, replace=False)
        for j in sorted(int(i) for i in idx):
            orig = flat[j]
            flat[j] = orig + h
            up = float(loss_value().data[0, 0])
            flat[j] = orig - h
            down = float(loss_value().data[0, 0])
            flat[j] = orig
            fd = (up - down) / (2.0 * h)
            an = float(analytic[name].reshape(-1)[j])
            scale = max(abs(an), abs(fd), 1e-6)
            worst = max(worst, abs(an - fd) / scale)
            checked += 1
    return worst, checked, len(ps.names())


def _cmd_gradcheck(cfg, args) -> int:
    seed = args.seed if args.seed is not None else 0
    worst, checked, tensors = gradcheck(seed)
    ok = worst < GRADCHECK_TOL
    print(f"max rel err {format_float(worst)} over {checked} entries in "
          f"{tensors} tensors ({'PASS' if ok else 'FAIL'}, tol {GRADCHECK_TOL:g})")
    return 0 if ok else 1


def _cmd_export_attn(cfg, args) -> int:
    (graph, tasks), _ = _resolve_dataset(cfg, args)
    config = _model_config(cfg, args, graph)
    ps = _load_checkpoint(cfg, args, graph, tasks, config)
    _, records = forward(graph, config, ps, training=False, collect=True)
    os.makedirs(args.out, exist_ok=True)

    intra_lines = ["layer\trelation\ttarget\tsource\talpha"]
    inter_lines = ["layer\trelation\tdirection\ttarget\tsource\talpha"]
    for rec in records.attention:
        alpha = rec.alpha.reshape(-1)
        for e in range(rec.sources.size):
            tgt, src = int(rec.edge_targets[e]), int(rec.sources[e])
            val = format_float(alpha[e])
            if rec.stage == "inter":
                inter_lines.append(f"{rec.layer}\t{rec.relation}\tto_{rec.target_type.label}"
                                   f"\t{tgt}\t{src}\t{val}")
            else:
                intra_lines.append(f"{rec.layer}\t{rec.relation}\t{tgt}\t{src}\t{val}")
    for fname, lines in (("attn_intra.tsv", intra_lines), ("attn_inter.tsv", inter_lines)):
        try:
            with open(os.path.join(args.out, fname), "w", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + "\n")
        except OSError as exc:
            raise IoFailure(f"cannot write {fname}: {exc}") from exc

    fusion = []
    for rec in records.fusion:
        entry = {"layer": rec.layer, "target_type": rec.target_type.label,
                 "stage": rec.stage, "relations": list(rec.relations),
                 "mix": rec.mix,
                 "global_weights": None if rec.global_row is None
                 else [float(v) for v in rec.global_row],
                 "mean_coefficients": {rel: float(rec.coeff[:, k].mean())
                                       for k, rel in enumerate(rec.relations)},
                 "participation": {rel: float(rec.mask[:, k].mean())
                                   for k, rel in enumerate(rec.relations)}}
        fusion.append(entry)
    _write_json(os.path.join(args.out, "fusion.json"), fusion)
    print(f"attention exports written to {args.out}")
    return 0


def _pca_2d(matrix: np.ndarray) -> np.ndarray:
    centered = matrix - matrix.mean(axis=0, keepdims=True)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:2]
    for r in range(comps.shape[0]):
        lead = np.argmax(np.abs(comps[r]))
        if comps[r, lead] < 0:
            comps[r] = -comps[r]
    return centered @ comps.T


def _cmd_export_emb(cfg, args) -> int:
    (graph, tasks), _ = _resolve_dataset(cfg, args)
    config = _model_config(cfg, args, graph)
    ps = _load_checkpoint(cfg, args, graph, tasks, config)
    embs, _ = forward(graph, config, ps, training=False)
    os.makedirs(args.out, exist_ok=True)

    dim = embs[NodeType.A].data.shape[1]
    header = "node_id\ttype\t" + "\t".join(f"emb_{j}" for j in range(dim))
    lines = [header]
    stacked = []
    for t in (NodeType.A, NodeType.B):
        data = embs[t].data
        stacked.append(data)
        for i in range(data.shape[0]):
            vals = "\t".join(format_float(v) for v in data[i])
            lines.append(f"{i}\t{t.label}\t{vals}")
    try:
        with open(os.path.join(args.out, "embeddings.tsv"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write embeddings: {exc}") from exc

    proj = _pca_2d(np.vstack(stacked))
    lines = ["node_id\ttype\tpc_0\tpc_1"]
    row = 0
    for t in (NodeType.A, NodeType.B):
        for i in range(graph.n_nodes(t)):
            lines.append(f"{i}\t{t.label}\t{format_float(proj[row, 0])}"
                         f"\t{format_float(proj[row, 1])}")
            row += 1
    try:
        with open(os.path.join(args.out, "embeddings_pca.tsv"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write PCA projection: {exc}") from exc
    print(f"embedding exports written to {args.out}")
    return 0


_HANDLERS = {
    "generate": _cmd_generate,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "ablate": _cmd_ablate,
    "gradcheck": _cmd_gradcheck,
    "export-attn": _cmd_export_attn,
    "export-emb": _cmd_export_emb,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.seed is not None and args.seed < 0:
        print("error: InfeasibleConfig: seed must be non-negative", file=sys.stderr)
        return 1
    try:
        cfg = _load_config(args.config)
        return _HANDLERS[args.command](cfg, args)
    except Error as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
