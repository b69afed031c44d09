import json
import subprocess
import sys

import numpy as np
import pytest

from treecomp.cli import main
from treecomp.synthetic import word_signal_records

TINY = ["--set", "word_dim=3", "--set", "tag_dim=2", "--hidden", "4", "--epochs", "2"]


def run(argv):
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


@pytest.fixture
def data(write_jsonl):
    records = word_signal_records(30, seed=1)
    for r in records[-6:]:
        r["split"] = "dev"
    records[0]["labels"] = ["Temporal", "Expansion"]
    return write_jsonl(records, "corpus.jsonl")


@pytest.fixture
def model(data, tmp_path):
    out = tmp_path / "m.ckpt"
    assert run(["train", "--data", str(data), "--out", str(out), "--seed", "3", *TINY]) == 0
    return out


def test_train_artifacts(model, capsys):
    base = str(model)
    for suffix in ("", ".log.jsonl", ".timing.jsonl", ".vocab.json", ".manifest.json"):
        assert (model.parent / (model.name + suffix)).exists(), suffix
    log = [json.loads(l) for l in open(base + ".log.jsonl")]
    assert [r["epoch"] for r in log] == [1, 2]
    assert set(log[0]) == {"epoch", "train_loss", "dev_accuracy", "best_epoch"}
    manifest = json.load(open(base + ".manifest.json"))
    assert manifest["seed"] == 3 and manifest["config"]["hidden"] == 4


def test_config_file(data, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# tiny model\nword_dim = 3\ntag_dim = 2\nhidden = 3\nepochs = 1\nmode = tree_gru\n")
    out = tmp_path / "c.ckpt"
    assert run(["train", "--config", str(cfg), "--data", str(data), "--out", str(out), "--set", "hidden=5"]) == 0
    manifest = json.load(open(str(out) + ".manifest.json"))
    assert manifest["config"]["hidden"] == 5
    assert manifest["config"]["mode"] == "tree_gru"


def test_eval(model, data, capsys):
    capsys.readouterr()
    assert run(["eval", "--model", str(model), "--data", str(data), "--split", "dev"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["instances"] == 6
    assert 0 <= rep["accuracy"] <= 1


def test_predict(model, tmp_path, write_jsonl):
    src = write_jsonl([{"id": "x1", "arg1": "(S (NN alpha) (VB f1))", "arg2": "(NN gamma)"}], "in.jsonl")
    out = tmp_path / "pred.jsonl"
    assert run(["predict", "--model", str(model), "--data", str(src), "--output", str(out)]) == 0
    (pred,) = [json.loads(l) for l in out.read_text().splitlines()]
    assert pred["id"] == "x1"
    assert pred["label"] in pred["distribution"]
    assert sum(pred["distribution"].values()) == pytest.approx(1.0, abs=1e-12)


def test_export_tags(model, tmp_path):
    out = tmp_path / "tags.tsv"
    assert run(["export-tag-embeddings", "--model", str(model), "--output", str(out)]) == 0
    rows = [l.split("\t") for l in out.read_text().splitlines()]
    assert rows[0][0] == "<unk>"
    assert all(len(r) == 3 for r in rows)
    float(rows[1][1])


def test_export_tags_needs_tag_mode(data, tmp_path):
    out = tmp_path / "plain.ckpt"
    assert run(["train", "--data", str(data), "--out", str(out), "--mode", "tree_lstm", *TINY]) == 0
    assert run(["export-tag-embeddings", "--model", str(out)]) == 1


def test_resume_matches_full_run(data, tmp_path):
    full, half, rest = (tmp_path / n for n in ("full.ckpt", "half.ckpt", "rest.ckpt"))
    assert run(["train", "--data", str(data), "--out", str(full), *TINY]) == 0
    assert run(["train", "--data", str(data), "--out", str(half), *TINY[:-1], "1"]) == 0
    assert run(["train", "--data", str(data), "--out", str(rest), "--resume", str(half), *TINY]) == 0
    assert full.read_bytes() == rest.read_bytes()
    assert open(str(full) + ".log.jsonl").read() == open(str(rest) + ".log.jsonl").read()


def test_from_manifest(model, tmp_path):
    again = tmp_path / "again.ckpt"
    assert run(["train", "--from-manifest", str(model) + ".manifest.json", "--out", str(again)]) == 0
    assert again.read_bytes() == model.read_bytes()


def test_preprocess(tmp_path, capsys):
    src = tmp_path / "in.ptb"
    src.write_text("(ROOT (S (NP (NN a)) (VP (VB b) (NN c) (NN d))))\n")
    assert run(["preprocess", "--input", str(src)]) == 0
    assert capsys.readouterr().out == "(S (NN a) (VP (VB b) (VP (NN c) (NN d))))\n"


def test_gradcheck_command(capsys):
    assert run(["gradcheck", "--mode", "tag_tree_lstm", "--seed", "7"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] and all(v < 1e-4 for v in rep["tensors"].values())
    assert "cell.M" in rep["tensors"]


def test_gradcheck_failure_exit_code(capsys):
    assert run(["gradcheck", "--mode", "tree_lstm", "--seed", "7", "--tolerance", "1e-30"]) == 1


@pytest.mark.parametrize(
    "argv",
    [[], ["frobnicate"], ["train", "--bogus"], ["train", "--data", "x"], ["train", "--mode", "cnn"],
     ["eval", "--model", "m"], ["train", "--data", "x", "--out", "y", "--set", "colour=red"]],
)
def test_usage_errors(argv, capsys):
    assert run(argv) == 2


def test_data_errors(tmp_path, write_jsonl):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"arg1": "(S (NN a)", "arg2": "(NN b)", "labels": ["Temporal"]}\n')
    assert run(["train", "--data", str(bad), "--out", str(tmp_path / "m")]) == 1
    assert run(["train", "--data", str(tmp_path / "missing"), "--out", str(tmp_path / "m")]) == 1
    assert run(["eval", "--model", str(bad), "--data", str(bad)]) == 1


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "treecomp.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "gradcheck" in proc.stdout
