from __future__ import annotations

import csv
import importlib
import json
from dataclasses import asdict
from pathlib import Path

import pytest

from mminforec import config
from mminforec.errors import ConfigError
from mminforec.main import dispatch
from mminforec.model import ModelConfig
from mminforec.run_config import RESOLVED_FILE, load_config
from mminforec.services import TrainConfig

TINY_FLAGS = ["--d", "8", "--b", "4", "--batch-size", "64", "--epochs", "1"]


def _write_json(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


# ---------- dispatch basics ----------

def test_unknown_subcommand_prints_usage_and_exits_1(capsys):
    assert dispatch(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_no_subcommand_exits_1():
    assert dispatch([]) == 1


def test_help_exits_0(capsys):
    assert dispatch(["--help"]) == 0
    assert "gradcheck" in capsys.readouterr().out


def test_missing_required_flag_exits_1():
    assert dispatch(["evaluate", "--data", "somewhere"]) == 1


def test_bad_choice_exits_1():
    assert dispatch(["train", "--memory", "lstm", "--data", "d", "--out", "o"]) == 1


# ---------- load_config ----------

def test_empty_config_gives_defaults(tmp_path):
    cfg = load_config(_write_json(tmp_path / "c.json", {}))
    assert cfg.model == ModelConfig()
    assert cfg.train == TrainConfig()
    assert (cfg.model.d, cfg.train.batch_size, cfg.model.tau) == (64, 256, 0.6)


def test_negative_tau_names_the_field(tmp_path):
    with pytest.raises(ConfigError) as e:
        load_config(_write_json(tmp_path / "c.json", {"tau": -1}))
    assert e.value.field == "tau"


def test_flags_override_file_values(tmp_path):
    cfg = load_config(_write_json(tmp_path / "c.json", {"lr": 0.001, "b": 5}), overrides={"lr": 0.003})
    assert cfg.train.lr == 0.003
    assert cfg.model.b == 5


@pytest.mark.parametrize("doc,field", [({"colour": "red"}, "colour"), ({"d": "big"}, "d"), ({"epochs": 1.5}, "epochs")])
def test_bad_keys_and_types_are_rejected(tmp_path, doc, field):
    with pytest.raises(ConfigError) as e:
        load_config(_write_json(tmp_path / "c.json", doc))
    assert e.value.field == field


def test_missing_or_malformed_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(bad))


def test_strict_grids_reject_off_grid_values():
    assert load_config(overrides={"lr": 0.002}).train.lr == 0.002
    with pytest.raises(ConfigError) as e:
        load_config(overrides={"lr": 0.002}, strict_grids=True)
    assert e.value.field == "lr"
    assert load_config(overrides={"lr": 0.003}, strict_grids=True).strict_grids


def test_resolved_config_is_flat_and_complete(tmp_path):
    cfg = load_config(overrides={"data": "d", "out": str(tmp_path)})
    path = cfg.write_resolved(str(tmp_path))
    doc = json.loads(path.read_text(encoding="utf-8"))
    assert set(asdict(ModelConfig())) | set(asdict(TrainConfig())) <= set(doc)
    assert doc["data"] == "d"


def test_invalid_config_exits_1(tmp_path):
    cfg = _write_json(tmp_path / "c.json", {"tau": -1})
    assert dispatch(["train", "--config", cfg, "--data", str(tmp_path), "--out", str(tmp_path / "run")]) == 1


# ---------- end to end ----------

@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data, run = root / "data", root / "run"
    assert dispatch(["synth", "--users", "100", "--items", "20", "--attrs", "2", "--seed", "3", "--out", str(data)]) == 0
    assert dispatch(["train", "--data", str(data), "--out", str(run), *TINY_FLAGS]) == 0
    return root


def test_synth_writes_raw_files_and_a_dataset(workspace):
    data = workspace / "data"
    for name in ("raw/interactions.tsv", "raw/attributes.tsv", "sequences.tsv", "attributes.tsv",
                 "idmaps.json", "stats.json", "transition.npy", RESOLVED_FILE):
        assert (data / name).exists(), name


def test_train_leaves_a_self_describing_run_directory(workspace):
    run = workspace / "run"
    assert (run / "train_log.csv").read_text(encoding="utf-8").startswith("epoch,loss,hr5,ndcg5,hr10,ndcg10\n")
    assert (run / "checkpoint" / "manifest.json").exists()
    resolved = json.loads((run / RESOLVED_FILE).read_text(encoding="utf-8"))
    assert (resolved["d"], resolved["b"], resolved["epochs"]) == (8, 4, 1)
    assert (run / "metrics_test.json").exists()


def test_evaluate_reproduces_the_run_metrics(workspace):
    out = workspace / "eval"
    args = ["evaluate", "--checkpoint", str(workspace / "run"), "--data", str(workspace / "data"), "--out", str(out)]
    assert dispatch(args + ["--baselines"]) == 0
    ours = json.loads((out / "metrics_test.json").read_text(encoding="utf-8"))
    theirs = json.loads((workspace / "run" / "metrics_test.json").read_text(encoding="utf-8"))
    assert ours == theirs
    assert (out / "metrics_test_popularity.json").exists()
    assert (out / "metrics_test_oracle.json").exists()


def test_evaluate_rejects_a_mismatched_dataset(workspace, tmp_path):
    other = tmp_path / "other"
    assert dispatch(["synth", "--users", "100", "--items", "40", "--attrs", "2", "--out", str(other)]) == 0
    args = ["evaluate", "--checkpoint", str(workspace / "run"), "--data", str(other), "--out", str(tmp_path / "e")]
    assert dispatch(args) == 1


def test_inspect_writes_one_row_per_memory_slot(workspace, capsys):
    out = workspace / "inspect"
    assert dispatch(["inspect", "--checkpoint", str(workspace / "run" / "checkpoint"), "--out", str(out)]) == 0
    with (out / "memory_norms.csv").open(encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4
    assert [int(r["slot"]) for r in rows] == [0, 1, 2, 3]
    assert "active slots" in capsys.readouterr().out


def test_inspect_without_memory_exits_1(workspace):
    run = workspace / "run-nomem"
    args = ["train", "--data", str(workspace / "data"), "--out", str(run), "--memory", "none", *TINY_FLAGS, "--epochs", "0"]
    assert dispatch(args) == 0
    assert dispatch(["inspect", "--checkpoint", str(run), "--out", str(workspace / "inspect-nomem")]) == 1


def test_ablate_rejects_unknown_variant_before_training(workspace, tmp_path):
    matrix = _write_json(tmp_path / "m.json", {"variants": ["cpc", "mystery"]})
    out = tmp_path / "abl"
    args = ["ablate", "--matrix", matrix, "--data", str(workspace / "data"), "--out", str(out), *TINY_FLAGS]
    assert dispatch(args) == 1
    assert not (out / "ablation.csv").exists()


def test_preprocess_reference_mismatch_is_a_runtime_failure(workspace, tmp_path):
    raw = workspace / "data" / "raw"
    out = tmp_path / "pre"
    args = ["preprocess", "--interactions", str(raw / "interactions.tsv"), "--attributes", str(raw / "attributes.tsv"),
            "--out", str(out), "--expect", "beauty"]
    assert dispatch(args) == 2
    events = (out / "events.jsonl").read_text(encoding="utf-8")
    assert "beauty" in events


def test_preprocess_round_trips_the_synthetic_raw_files(workspace, tmp_path):
    raw = workspace / "data" / "raw"
    out = tmp_path / "pre"
    args = ["preprocess", "--interactions", str(raw / "interactions.tsv"), "--attributes", str(raw / "attributes.tsv"),
            "--out", str(out)]
    assert dispatch(args) == 0
    assert (out / "sequences.tsv").read_text(encoding="utf-8") == (workspace / "data" / "sequences.tsv").read_text(encoding="utf-8")


def test_gradcheck_on_sampled_entries_passes(tmp_path, capsys):
    assert dispatch(["gradcheck", "--max-entries", "4", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    for group in ("Emb_I", "Emb_A", "g_enc", "g_ta", "pos_enc", "MLP_m", "M", "g_ap"):
        assert group in out
    assert (tmp_path / "gradcheck.csv").exists()


def test_only_the_out_dir_is_read_from_the_environment():
    with pytest.MonkeyPatch.context() as mp:
        mp.setenv("MMINFOREC_OUT", "elsewhere")
        mp.setenv("MMINFOREC_GRIDS", "/nowhere/grids.yaml")
        mp.setenv("MMINFOREC_EVAL_CHUNK", "3")
        importlib.reload(config)
        assert config.OUT_DIR == "elsewhere"
        assert Path(config.GRIDS_PATH) == Path(config.RESOURCES_PATH) / "grids.yaml"
        assert config.EVAL_CHUNK == 256
    importlib.reload(config)
