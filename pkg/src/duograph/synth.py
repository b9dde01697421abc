"""Planted-structure dataset generator and dataset interchange files.

The generator builds an authorship world: papers carry venue and topic
prototypes in their features, authors inherit the mean of their papers'
features, and the relation schema mirrors a scholarly graph (colleague
and co-authorship relations between authors; citation, shared-venue and
shared-topic relations between papers; two authorship relations across
the classes). Four tasks come out of it: venue prediction (single
label), coarse and fine topic prediction (multi label), and an author
disambiguation ranking task built from name groups.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, asdict

import numpy as np

from .errors import InfeasibleConfig, IoFailure, ParseError
from .graph import (BiGraph, NodeType, RelationClass, RelationSpec, build_graph,
                    load_graph_tsv, mean_neighbor_features, save_graph_tsv, _write_lines,
                    _read_rows)
from .model import RankInstance, TaskKind, TaskSpec
from .rand import rng_for

SPLITS = ("train", "val", "test")


@dataclass
class SynthConfig:
    n_papers: int = 600
    n_authors: int = 300
    n_venues: int = 4
    n_fields_l1: int = 3
    n_fields_l2: int = 6
    feature_dim: int = 16
    venue_scale: float = 3.0
    field_scale: float = 1.5
    noise: float = 0.8
    min_authors: int = 1
    max_authors: int = 4
    p_community_author: float = 0.8
    p_colleague: float = 0.1
    p_same_venue: float = 0.05
    p_same_field: float = 0.05
    max_cites: int = 3
    p_cite_within_field: float = 0.5
    name_group_size: int = 5
    ad_distractors: int = 9
    year_span: int = 10
    train_year_max: int = 6
    val_year_max: int = 7
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        checks = [
            (self.n_papers >= 1 and self.n_authors >= 1, "need at least one node per class"),
            (1 <= self.n_venues <= self.n_papers, "more venues than papers"),
            (1 <= self.n_fields_l1 <= self.n_fields_l2, "coarse fields exceed fine fields"),
            (self.n_fields_l2 <= self.n_papers, "more fields than papers"),
            (self.feature_dim >= 2, "feature_dim must be >= 2"),
            (1 <= self.min_authors <= self.max_authors, "author count bounds invalid"),
            (self.max_authors <= self.n_authors, "papers need more authors than exist"),
            (all(0.0 <= p <= 1.0 for p in (self.p_community_author, self.p_colleague,
                                           self.p_same_venue, self.p_same_field,
                                           self.p_cite_within_field)), "probabilities must lie in [0, 1]"),
            (self.max_cites >= 0, "max_cites must be >= 0"),
            (self.name_group_size >= 2, "name groups need at least 2 members"),
            (self.ad_distractors >= 1, "need at least one distractor"),
            (0 < self.year_span, "year_span must be positive"),
            (0 <= self.train_year_max < self.val_year_max < self.year_span,
             "year thresholds must satisfy 0 <= train < val < span"),
            (self.seed >= 0, "seed must be non-negative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InfeasibleConfig(msg)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InfeasibleConfig(f"unknown generator config keys: {sorted(unknown)}")
        return cls(**data)


RELATIONS = [
    RelationSpec("colleague", RelationClass.INTRA_A, NodeType.A, NodeType.A, symmetric=True),
    RelationSpec("co_first", RelationClass.INTRA_A, NodeType.A, NodeType.A, symmetric=True),
    RelationSpec("co_support", RelationClass.INTRA_A, NodeType.A, NodeType.A, symmetric=True),
    RelationSpec("cite", RelationClass.INTRA_B, NodeType.B, NodeType.B),
    RelationSpec("cited_by", RelationClass.INTRA_B, NodeType.B, NodeType.B),
    RelationSpec("same_venue", RelationClass.INTRA_B, NodeType.B, NodeType.B, symmetric=True),
    RelationSpec("same_field", RelationClass.INTRA_B, NodeType.B, NodeType.B, symmetric=True),
    RelationSpec("lead_author_of", RelationClass.INTER, NodeType.A, NodeType.B),
    RelationSpec("support_author_of", RelationClass.INTER, NodeType.A, NodeType.B),
]


def _pairs_within(ids: np.ndarray, p: float, rng) -> list[tuple[int, int]]:
    if ids.size < 2 or p <= 0.0:
        return []
    iu, ju = np.triu_indices(ids.size, k=1)
    keep = rng.random(iu.size) < p
    return list(zip(ids[iu[keep]], ids[ju[keep]]))


def generate(config: SynthConfig):
    """Build (graph, tasks) with planted venue/topic/authorship structure."""
    cfg = config
    rng_world = rng_for(cfg.seed, "world")
    n_p, n_a = cfg.n_papers, cfg.n_authors

    parent = np.arange(cfg.n_fields_l2) % cfg.n_fields_l1
    venue = rng_world.integers(cfg.n_venues, size=n_p)
    year = rng_world.integers(cfg.year_span, size=n_p)
    primary = rng_world.integers(cfg.n_fields_l2, size=n_p)
    fields = []
    for i in range(n_p):
        fs = {int(primary[i])}
        if cfg.n_fields_l2 > 1 and rng_world.random() < 0.4:
            extra = int(rng_world.integers(cfg.n_fields_l2 - 1))
            if extra >= primary[i]:
                extra += 1
            fs.add(extra)
        fields.append(tuple(sorted(fs)))

    rng_feat = rng_for(cfg.seed, "features")
    venue_proto = rng_feat.normal(size=(cfg.n_venues, cfg.feature_dim)) * cfg.venue_scale
    field_proto = rng_feat.normal(size=(cfg.n_fields_l2, cfg.feature_dim)) * cfg.field_scale
    paper_feats = np.empty((n_p, cfg.feature_dim))
    for i in range(n_p):
        topic = np.mean([field_proto[f] for f in fields[i]], axis=0)
        paper_feats[i] = venue_proto[venue[i]] + topic
    paper_feats += rng_feat.normal(size=paper_feats.shape) * cfg.noise

    # authorship: communities track venues
    rng_auth = rng_for(cfg.seed, "authors")
    community = rng_auth.integers(cfg.n_venues, size=n_a)
    by_comm = [np.nonzero(community == c)[0] for c in range(cfg.n_venues)]
    edges: list[tuple[str, int, int]] = []
    lead_of: list[list[int]] = [[] for _ in range(n_a)]
    support_of: list[list[int]] = [[] for _ in range(n_a)]
    papers_of: list[list[int]] = [[] for _ in range(n_a)]
    for i in range(n_p):
        count = int(rng_auth.integers(cfg.min_authors, cfg.max_authors + 1))
        chosen: list[int] = []
        pool = by_comm[venue[i]]
        for _ in range(count):
            if pool.size and rng_auth.random() < cfg.p_community_author:
                cand = int(pool[rng_auth.integers(pool.size)])
            else:
                cand = int(rng_auth.integers(n_a))
            if cand not in chosen:
                chosen.append(cand)
        leads, supports = chosen[:2], chosen[2:]
        for a in leads:
            edges.append(("lead_author_of", a, i))
            lead_of[a].append(i)
            papers_of[a].append(i)
        for a in supports:
            edges.append(("support_author_of", a, i))
            support_of[a].append(i)
            papers_of[a].append(i)
        for x in range(len(leads)):
            for z in range(x + 1, len(leads)):
                edges.append(("co_first", leads[x], leads[z]))
        for x in range(len(supports)):
            for z in range(x + 1, len(supports)):
                edges.append(("co_support", supports[x], supports[z]))

    rng_intra = rng_for(cfg.seed, "intra")
    for c in range(cfg.n_venues):
        edges.extend(("colleague", u, v) for u, v in _pairs_within(by_comm[c], cfg.p_colleague, rng_intra))
    for v in range(cfg.n_venues):
        ids = np.nonzero(venue == v)[0]
        edges.extend(("same_venue", a, b) for a, b in _pairs_within(ids, cfg.p_same_venue, rng_intra))
    for f in range(cfg.n_fields_l2):
        ids = np.nonzero(primary == f)[0]
        edges.extend(("same_field", a, b) for a, b in _pairs_within(ids, cfg.p_same_field, rng_intra))
    by_field = [np.nonzero(primary == f)[0] for f in range(cfg.n_fields_l2)]
    for i in range(n_p):
        n_cites = int(rng_intra.integers(0, cfg.max_cites + 1))
        for _ in range(n_cites):
            if rng_intra.random() < cfg.p_cite_within_field and by_field[primary[i]].size > 1:
                pool = by_field[primary[i]]
            else:
                pool = None
            j = int(pool[rng_intra.integers(pool.size)]) if pool is not None \
                else int(rng_intra.integers(n_p))
            if j != i:
                edges.append(("cite", i, j))
                edges.append(("cited_by", j, i))

    features = {NodeType.A: np.zeros((n_a, cfg.feature_dim)), NodeType.B: paper_feats}
    sizes = {NodeType.A: n_a, NodeType.B: n_p}
    graph = build_graph(sizes, features, RELATIONS, edges)
    author_feats, _ = mean_neighbor_features(
        graph, ["lead_author_of", "support_author_of"], NodeType.A)
    graph = graph.with_features(NodeType.A, author_feats)

    tasks = _build_tasks(cfg, venue, fields, parent, year, papers_of)
    return graph, tasks


def _split_of(cfg: SynthConfig, y: int) -> str:
    if y <= cfg.train_year_max:
        return "train"
    if y <= cfg.val_year_max:
        return "val"
    return "test"


def _year_splits(cfg: SynthConfig, keys, years) -> dict:
    splits = {s: [] for s in SPLITS}
    for key, y in zip(keys, years):
        splits[_split_of(cfg, int(y))].append(key)
    return {s: np.array(v, dtype=np.int64) for s, v in splits.items()}


def _build_tasks(cfg: SynthConfig, venue, fields, parent, year, papers_of) -> list[TaskSpec]:
    papers = list(range(cfg.n_papers))
    pv = TaskSpec(name="pv", kind=TaskKind.SINGLE_LABEL, target_type=NodeType.B,
                  n_classes=cfg.n_venues,
                  labels={i: (int(venue[i]),) for i in papers},
                  splits=_year_splits(cfg, papers, year))
    pf_l1 = TaskSpec(name="pf_l1", kind=TaskKind.MULTI_LABEL, target_type=NodeType.B,
                     n_classes=cfg.n_fields_l1,
                     labels={i: tuple(sorted({int(parent[f]) for f in fields[i]})) for i in papers},
                     splits=_year_splits(cfg, papers, year))
    pf_l2 = TaskSpec(name="pf_l2", kind=TaskKind.MULTI_LABEL, target_type=NodeType.B,
                     n_classes=cfg.n_fields_l2,
                     labels={i: fields[i] for i in papers},
                     splits=_year_splits(cfg, papers, year))

    rng_ad = rng_for(cfg.seed, "disambiguation")
    order = rng_ad.permutation(cfg.n_authors)
    group_of = np.zeros(cfg.n_authors, dtype=np.int64)
    for pos, author in enumerate(order):
        group_of[author] = pos // cfg.name_group_size
    groups: dict[int, list[int]] = {}
    for a in range(cfg.n_authors):
        groups.setdefault(int(group_of[a]), []).append(a)
    instances, inst_years = [], []
    for a in sorted(range(cfg.n_authors)):
        own = papers_of[a]
        if not own:
            continue
        true_paper = int(own[rng_ad.integers(len(own))])
        distractors: set[int] = set()
        for other in groups[int(group_of[a])]:
            if other == a or not papers_of[other]:
                continue
            distractors.add(int(papers_of[other][rng_ad.integers(len(papers_of[other]))]))
        distractors.discard(true_paper)  # a group peer may share the true paper
        while len(distractors) < cfg.ad_distractors:
            cand = int(rng_ad.integers(cfg.n_papers))
            if cand != true_paper:
                distractors.add(cand)
        instances.append(RankInstance.make(a, true_paper, sorted(distractors)))
        inst_years.append(int(year[true_paper]))
    ad = TaskSpec(name="ad", kind=TaskKind.LINK_RANKING, target_type=NodeType.A,
                  instances=instances,
                  splits=_year_splits(cfg, list(range(len(instances))), inst_years))
    return [pv, pf_l1, pf_l2, ad]


# dataset interchange: graph TSVs + tasks.tsv + labels.tsv + splits.tsv

def export_dataset(graph: BiGraph, tasks, directory) -> None:
    save_graph_tsv(graph, directory)
    lines = ["name\tkind\ttarget_type\tn_classes"]
    for task in tasks:
        lines.append(f"{task.name}\t{task.kind.value}\t{task.target_type.label}\t{task.n_classes}")
    _write_lines(directory, "tasks.tsv", lines)

    lines = ["node\ttask\tlabels"]
    for task in tasks:
        if task.kind is TaskKind.LINK_RANKING:
            for inst in task.instances:
                rest = ",".join(str(c) for c in inst.candidates if c != inst.true_id)
                lines.append(f"{inst.query}\t{task.name}\t{inst.true_id},{rest}")
        else:
            for node in sorted(task.labels):
                lab = ",".join(str(c) for c in task.labels[node])
                lines.append(f"{node}\t{task.name}\t{lab}")
    _write_lines(directory, "labels.tsv", lines)

    lines = ["node\ttask\tsplit"]
    for task in tasks:
        for split in SPLITS:
            ids = task.split_ids(split)
            if task.kind is TaskKind.LINK_RANKING:
                ids = np.array([task.instances[i].query for i in ids], dtype=np.int64)
            for node in sorted(int(i) for i in ids):
                lines.append(f"{node}\t{task.name}\t{split}")
    _write_lines(directory, "splits.tsv", lines)


def import_dataset(directory):
    """Read a dataset written by export_dataset; returns (graph, tasks)."""
    graph = load_graph_tsv(directory)
    tasks_path = os.path.join(directory, "tasks.tsv")
    tasks: dict[str, TaskSpec] = {}
    task_order = []
    for lineno, parts in _read_rows(tasks_path, 4, "name\tkind\ttarget_type\tn_classes"):
        name, kind, target, n_classes = parts
        try:
            spec = TaskSpec(name=name, kind=TaskKind(kind),
                            target_type=NodeType.from_label(target),
                            n_classes=int(n_classes))
        except ValueError as exc:
            raise ParseError(tasks_path, lineno, str(exc)) from exc
        tasks[name] = spec
        task_order.append(name)

    labels_path = os.path.join(directory, "labels.tsv")
    for lineno, parts in _read_rows(labels_path, 3, "node\ttask\tlabels"):
        node_txt, task_name, label_txt = parts
        task = tasks.get(task_name)
        if task is None:
            raise ParseError(labels_path, lineno, f"unknown task {task_name!r}")
        try:
            node = int(node_txt)
            values = [int(v) for v in label_txt.split(",") if v != ""]
        except ValueError as exc:
            raise ParseError(labels_path, lineno, str(exc)) from exc
        if not values:
            raise ParseError(labels_path, lineno, "empty label list")
        if task.kind is TaskKind.LINK_RANKING:
            task.instances.append(RankInstance.make(node, values[0], values[1:]))
        else:
            task.labels[node] = tuple(sorted(values))

    for task in tasks.values():
        if task.kind is TaskKind.LINK_RANKING:
            task.instances.sort(key=lambda inst: inst.query)

    splits_path = os.path.join(directory, "splits.tsv")
    raw_splits: dict[str, dict[str, list[int]]] = {n: {s: [] for s in SPLITS} for n in tasks}
    for lineno, parts in _read_rows(splits_path, 3, "node\ttask\tsplit"):
        node_txt, task_name, split = parts
        if task_name not in tasks:
            raise ParseError(splits_path, lineno, f"unknown task {task_name!r}")
        if split not in SPLITS:
            raise ParseError(splits_path, lineno, f"unknown split {split!r}")
        try:
            raw_splits[task_name][split].append(int(node_txt))
        except ValueError as exc:
            raise ParseError(splits_path, lineno, str(exc)) from exc

    for name, task in tasks.items():
        if task.kind is TaskKind.LINK_RANKING:
            index_of = {inst.query: i for i, inst in enumerate(task.instances)}
            task.splits = {
                s: np.array([index_of[q] for q in sorted(raw_splits[name][s])], dtype=np.int64)
                for s in SPLITS}
        else:
            task.splits = {s: np.array(sorted(raw_splits[name][s]), dtype=np.int64)
                           for s in SPLITS}
    return graph, [tasks[n] for n in task_order]
