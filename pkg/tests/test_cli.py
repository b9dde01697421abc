"""Command-line behavior: artifacts, idempotency, exit codes."""
import json
import os

import numpy as np
import pytest

from duograph.cli import main

CONFIG = {
    "synth": {"n_papers": 28, "n_authors": 14, "n_venues": 2, "n_fields_l1": 2,
              "n_fields_l2": 3, "feature_dim": 5, "name_group_size": 3,
              "ad_distractors": 3, "seed": 3},
    "model": {"input_dim": 5, "hidden_dim": 4, "num_layers": 1, "epochs": 3,
              "lr_max": 5e-3, "seed": 3},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(CONFIG))
    return str(path)


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestGenerateCommand:
    def test_writes_dataset(self, tmp_path, config_path, capsys):
        out = str(tmp_path / "data")
        assert main(["generate", "--config", config_path, "--out", out]) == 0
        for name in ("nodes.tsv", "edges.tsv", "relations.tsv",
                     "tasks.tsv", "labels.tsv", "splits.tsv"):
            assert os.path.exists(os.path.join(out, name)), name

    def test_idempotent(self, tmp_path, config_path):
        out = str(tmp_path / "data")
        main(["generate", "--config", config_path, "--out", out])
        before = {n: _read(os.path.join(out, n)) for n in os.listdir(out)}
        main(["generate", "--config", config_path, "--out", out])
        after = {n: _read(os.path.join(out, n)) for n in os.listdir(out)}
        assert before == after

    def test_seed_flag_changes_dataset(self, tmp_path, config_path):
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        main(["generate", "--config", config_path, "--out", a])
        main(["generate", "--config", config_path, "--out", b, "--seed", "99"])
        assert _read(os.path.join(a, "edges.tsv")) != _read(os.path.join(b, "edges.tsv"))


class TestTrainEval:
    def test_train_then_eval_report_keys(self, tmp_path, config_path):
        out = str(tmp_path / "run")
        assert main(["train", "--config", config_path, "--out", out]) == 0
        for name in ("checkpoint.bin", "train_log.jsonl", "resolved_config.json"):
            assert os.path.exists(os.path.join(out, name)), name
        assert main(["eval", "--config", config_path, "--out", out]) == 0
        report = json.loads(_read(os.path.join(out, "eval_report.json")))
        assert set(report) == {"pv", "pf_l1", "pf_l2", "ad", "clustering"}

    def test_train_idempotent(self, tmp_path, config_path):
        out = str(tmp_path / "run")
        main(["train", "--config", config_path, "--out", out])
        first = _read(os.path.join(out, "checkpoint.bin"))
        first_log = _read(os.path.join(out, "train_log.jsonl"))
        main(["train", "--config", config_path, "--out", out])
        assert _read(os.path.join(out, "checkpoint.bin")) == first
        assert _read(os.path.join(out, "train_log.jsonl")) == first_log

    def test_train_on_exported_dataset(self, tmp_path, config_path):
        data = str(tmp_path / "data")
        main(["generate", "--config", config_path, "--out", data])
        cfg = dict(CONFIG)
        cfg["data"] = data
        path = tmp_path / "with_data.json"
        path.write_text(json.dumps(cfg))
        out = str(tmp_path / "run")
        assert main(["train", "--config", str(path), "--out", out]) == 0

    def test_variant_flag_respected(self, tmp_path, config_path):
        out = str(tmp_path / "run")
        main(["train", "--config", config_path, "--out", out,
              "--variant", "no-hier"])
        resolved = json.loads(_read(os.path.join(out, "resolved_config.json")))
        assert resolved["model"]["variant"] == "no-hier"

    def test_log_line_schema(self, tmp_path, config_path):
        out = str(tmp_path / "run")
        main(["train", "--config", config_path, "--out", out])
        lines = _read(os.path.join(out, "train_log.jsonl")).decode().strip().split("\n")
        assert len(lines) == CONFIG["model"]["epochs"]
        for line in lines:
            entry = json.loads(line)
            assert set(entry) == {"epoch", "train_loss", "val_ndcg",
                                  "val_loss", "lr"}


class TestAblate:
    def test_all_variants_all_seeds(self, tmp_path, config_path):
        cfg = dict(CONFIG)
        cfg["seeds"] = [0, 1]
        cfg["model"] = dict(cfg["model"], epochs=2)
        path = tmp_path / "ab.json"
        path.write_text(json.dumps(cfg))
        out = str(tmp_path / "ab")
        assert main(["ablate", "--config", str(path), "--out", out]) == 0
        table = json.loads(_read(os.path.join(out, "ablation.json")))
        cells = {(r["variant"], r["seed"]) for r in table["rows"]}
        assert cells == {(v, s) for v in ("full", "no-dual", "no-hier", "no-global")
                         for s in (0, 1)}
        tsv = _read(os.path.join(out, "ablation.tsv")).decode().strip().split("\n")
        assert len(tsv) == 1 + 8
        assert tsv[0].split("\t")[:2] == ["variant", "seed"]


class TestGradcheck:
    def test_passes_and_exits_zero(self, capsys):
        assert main(["gradcheck", "--seed", "7"]) == 0
        out = capsys.readouterr().out
        assert "max rel err" in out and "PASS" in out


class TestExports:
    def test_export_attn(self, tmp_path, config_path):
        out = str(tmp_path / "run")
        main(["train", "--config", config_path, "--out", out])
        assert main(["export-attn", "--config", config_path, "--out", out]) == 0
        intra = _read(os.path.join(out, "attn_intra.tsv")).decode().strip().split("\n")
        assert intra[0] == "layer\trelation\ttarget\tsource\talpha"
        assert len(intra) > 1
        inter = _read(os.path.join(out, "attn_inter.tsv")).decode().strip().split("\n")
        assert inter[0] == "layer\trelation\tdirection\ttarget\tsource\talpha"
        fusion = json.loads(_read(os.path.join(out, "fusion.json")))
        assert fusion and all("mean_coefficients" in f for f in fusion)
        # attention weights per (layer, relation, direction, target) sum to 1
        sums = {}
        for line in intra[1:]:
            layer, rel, tgt, _, alpha = line.split("\t")
            sums.setdefault((layer, rel, tgt), 0.0)
            sums[(layer, rel, tgt)] += float(alpha)
        assert all(abs(v - 1.0) < 1e-6 for v in sums.values())

    def test_export_emb_and_pca(self, tmp_path, config_path):
        out = str(tmp_path / "run")
        main(["train", "--config", config_path, "--out", out])
        assert main(["export-emb", "--config", config_path, "--out", out]) == 0
        emb = _read(os.path.join(out, "embeddings.tsv")).decode().strip().split("\n")
        n_nodes = CONFIG["synth"]["n_papers"] + CONFIG["synth"]["n_authors"]
        assert len(emb) == 1 + n_nodes
        assert emb[0].split("\t")[:2] == ["node_id", "type"]
        pca = _read(os.path.join(out, "embeddings_pca.tsv")).decode().strip().split("\n")
        assert pca[0] == "node_id\ttype\tpc_0\tpc_1"
        assert len(pca) == 1 + n_nodes

    def test_export_idempotent(self, tmp_path, config_path):
        out = str(tmp_path / "run")
        main(["train", "--config", config_path, "--out", out])
        main(["export-emb", "--config", config_path, "--out", out])
        first = _read(os.path.join(out, "embeddings_pca.tsv"))
        main(["export-emb", "--config", config_path, "--out", out])
        assert _read(os.path.join(out, "embeddings_pca.tsv")) == first


class TestExitCodes:
    def test_unknown_flag_is_two(self, capsys):
        assert main(["train", "--gpu"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_unknown_command_is_two(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_missing_config_is_one(self, tmp_path, capsys):
        code = main(["eval", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)])
        assert code == 1
        err = capsys.readouterr().err
        assert err.startswith("error: ") and "\n" not in err.strip()

    def test_bad_model_field_is_one(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"synth": CONFIG["synth"],
                                    "model": {"hidden_dim": -3}}))
        assert main(["train", "--config", str(path),
                     "--out", str(tmp_path / "o")]) == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_checkpoint_is_one(self, tmp_path, config_path):
        assert main(["eval", "--config", config_path,
                     "--out", str(tmp_path / "empty")]) == 1
