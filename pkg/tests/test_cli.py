import json
import re
import subprocess
import sys

import numpy as np
import pytest

from volleygraph import records
from volleygraph.cli import main
from volleygraph.encoding import load_graphs


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["generate", "--profile", "college", "--count", "300", "--seed", "3", "--out", str(d / "c.vrr")]) == 0
    return d


@pytest.fixture(scope="module")
def set_ckpt(data):
    cfg = data / "cfg.json"
    cfg.write_text(json.dumps({"max_epochs": 2, "hidden_dim": 8, "attention_heads": 2, "batch_size": 16}))
    out = data / "set.ckpt"
    rc = main(["train", "--task", "set", "--arch", "graph_transformer", "--config", str(cfg), "--data", str(data / "c.vrr"), "--out", str(out), "--seed", "1"])
    assert rc == 0
    return out


def run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def test_generate_is_deterministic(data, capsys):
    rc, out, _ = run(capsys, "generate", "--count", "300", "--seed", "3", "--out", str(data / "again.vrr"))
    assert rc == 0 and "300 rallies" in out
    assert (data / "again.vrr").read_bytes() == (data / "c.vrr").read_bytes()


def test_generate_from_profile_file(data, capsys, college):
    from volleygraph.synth import save_profile

    save_profile(college, data / "p.json")
    rc, _, _ = run(capsys, "generate", "--profile", str(data / "p.json"), "--count", "300", "--seed", "3", "--out", str(data / "p.vrr"))
    assert rc == 0 and records.read(data / "p.vrr").rallies == records.read(data / "c.vrr").rallies


def test_validate_clean_file(data, capsys):
    rc, out, _ = run(capsys, "validate", str(data / "c.vrr"))
    assert rc == 0 and out == ""


def test_validate_reports_problems_by_line(data, capsys):
    lines = (data / "c.vrr").read_text().splitlines()
    lines[3] = lines[3][:40]
    lines[5] = re.sub(r'"rating":\d', '"rating":7', lines[5], count=1)
    bad = data / "bad.vrr"
    bad.write_text("\n".join(lines) + "\n")
    rc, out, _ = run(capsys, "validate", str(bad))
    assert rc == 1
    reported = [int(m) for m in re.findall(r"^line (\d+):", out, re.M)]
    assert reported[0] == 4 and 6 in reported and reported == sorted(reported)


def test_validate_bad_header(data, capsys):
    p = data / "v2.vrr"
    p.write_text('{"format_version":"2","source":"x"}\n')
    rc, _, err = run(capsys, "validate", str(p))
    assert rc == 1 and "format_version" in err


def test_missing_file_is_a_data_error(capsys, tmp_path):
    rc, _, err = run(capsys, "validate", str(tmp_path / "nope.vrr"))
    assert rc == 1 and err.startswith("error:")


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["generate", "--count", "3", "--seed", "1", "--out", "x.vrr", "--bogus"],
        ["generate", "--count", "3", "--out", "x.vrr"],
        ["train", "--task", "serve", "--arch", "gcn", "--data", "x", "--out", "y"],
        ["gradcheck", "--arch", "cnn"],
        ["train", "--task", "set", "--arch", "gcn", "--data", "x", "--out", "y", "--split", "0.5,0.5"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    rc, _, err = run(capsys, *argv)
    assert rc == 2 and "usage" in err


def test_encode_writes_graphs_and_summary(data, capsys):
    out = data / "enc"
    rc, _, _ = run(capsys, "encode", "--task", "hit", "--include-blocked", str(data / "c.vrr"), "--out", str(out))
    assert rc == 0
    graphs = load_graphs(out / "graphs.txt")
    summary = json.loads((out / "summary.json").read_text())
    assert summary["graphs"] == len(graphs) == sum(summary["class_counts"].values())
    assert summary["include_blocked"] is True and len(summary["class_counts"]) == 8


@pytest.mark.parametrize("arch", ["gcn", "graph_gru", "graph_transformer"])
def test_gradcheck_per_architecture(arch, capsys):
    rc, out, _ = run(capsys, "gradcheck", "--arch", arch)
    assert rc == 0
    m = re.fullmatch(rf"{arch}: max relative error (\S+)\n", out)
    assert m and float(m.group(1)) < 1e-4


def test_train_and_eval_report(data, set_ckpt, capsys):
    rc, out, _ = run(capsys, "eval", "--ckpt", str(set_ckpt), "--data", str(data / "c.vrr"), "--json-out", str(data / "r.json"))
    assert rc == 0
    header = [c.strip() for c in out.splitlines()[0].split("|")]
    assert header == ["Level of game", "Model", "Categorical Accuracy(%)"]
    row = [c.strip() for c in out.splitlines()[2].split("|")]
    assert row[:2] == ["college", "Graph Transformer"] and re.fullmatch(r"\d+\.\d\d", row[2])
    (rep,) = json.loads((data / "r.json").read_text())
    assert float(row[2]) == pytest.approx(100 * rep["metrics"]["categorical_accuracy"], abs=0.005)


def test_eval_outcome_columns(data, capsys):
    ck = data / "out.ckpt"
    assert main(["train", "--task", "outcome", "--arch", "gcn", "--data", str(data / "c.vrr"), "--out", str(ck), "--seed", "0"]) == 0
    capsys.readouterr()
    rc, out, _ = run(capsys, "eval", "--ckpt", str(ck), "--data", str(data / "c.vrr"), "--group-by", "level", "--subset", "test")
    assert rc == 0
    header = out.splitlines()[0]
    for col in ("Binary Accuracy", "AUC", "Brier Score", "Mean Absolute Error"):
        assert col in header


def test_train_is_deterministic(data, set_ckpt, capsys):
    again = data / "again.ckpt"
    rc = main(["train", "--task", "set", "--arch", "graph_transformer", "--config", str(data / "cfg.json"), "--data", str(data / "c.vrr"), "--out", str(again), "--seed", "1"])
    assert rc == 0 and again.read_bytes() == set_ckpt.read_bytes()


def test_train_bad_config(data, capsys):
    cfg = data / "bad.json"
    cfg.write_text('{"learning_rate": -1}')
    rc, _, err = run(capsys, "train", "--task", "set", "--arch", "gcn", "--config", str(cfg), "--data", str(data / "c.vrr"), "--out", str(data / "x.ckpt"))
    assert rc == 1 and "config" in err


def test_predict_prints_probability_rows(data, set_ckpt, capsys):
    line = (data / "c.vrr").read_text().splitlines()[1]
    rally = records.parse((data / "c.vrr").read_text()).rallies[0]
    rc, out, _ = run(capsys, "predict", "--ckpt", str(set_ckpt), "--rally-json", line)
    assert rc == 0
    rows = out.splitlines()
    assert len(rows) == sum(1 for r in rally.rounds if len(r.contacts) > 1)
    for row in rows:
        probs = np.array([float(v) for v in row.split(":")[1].split()])
        assert probs.shape == (9,) and probs.sum() == pytest.approx(1.0, abs=1e-3)


def test_predict_rejects_bad_record(set_ckpt, capsys):
    rc, _, err = run(capsys, "predict", "--ckpt", str(set_ckpt), "--rally-json", '{"match_id": 1}')
    assert rc == 1 and "bad rally" in err


def test_console_entry_point(data):
    proc = subprocess.run([sys.executable, "-m", "volleygraph", "validate", str(data / "c.vrr")], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == ""
