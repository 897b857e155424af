import os
import subprocess
import sys

import pytest

from canids import dataset, metrics, modelfile
from canids.cli import main
from canids.trainer import evaluate

FAST = ["--epochs", "5", "--num-batches", "20"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["gen", "--per-class", "100", "--seed", "2", "--out", str(d / "data.csv")]) == 0
    assert main(["gen", "--per-class", "10", "--seed", "3", "--format", "log", "--out", str(d / "bus.log")]) == 0
    assert main(["train", "--data", str(d / "data.csv"), "--schema", "synthetic", "--hidden", "2", *FAST,
                 "--seed", "1", "--out", str(d / "model.txt")]) == 0
    return d


def test_train_outputs(workdir, capsys):
    assert main(["train", "--data", str(workdir / "data.csv"), "--schema", "synthetic", *FAST, "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "epoch\tloss\taccuracy" in out
    assert "[20, 15, 10, 5]" in out
    assert "Average" in out


def test_train_deterministic_files(workdir, tmp_path):
    args = ["train", "--data", str(workdir / "data.csv"), "--schema", "synthetic", "--hidden", "2", *FAST,
            "--seed", "1", "--out"]
    assert main(args + [str(tmp_path / "again.txt")]) == 0
    assert (tmp_path / "again.txt").read_bytes() == (workdir / "model.txt").read_bytes()


def test_eval_matches_metrics_module(workdir, tmp_path, capsys):
    out_csv = tmp_path / "eval.csv"
    assert main(["eval", "--model", str(workdir / "model.txt"), "--data", str(workdir / "data.csv"),
                 "--schema", "synthetic", "--out", str(out_csv)]) == 0
    text = capsys.readouterr().out
    model = modelfile.load_model(workdir / "model.txt")
    ds = dataset.load_csv(workdir / "data.csv", "synthetic")
    cm, _ = evaluate(model, ds, timed=False)
    assert metrics.format_table(ds.class_names, metrics.all_classes(cm)) in text
    rows = out_csv.read_text().splitlines()[1:]
    for row, pc in zip(rows, metrics.all_classes(cm)):
        vals = row.split(",")[1:]
        assert [None if v == "" else float(v) for v in vals] == list(pc.as_dict().values())


def test_detect(workdir, tmp_path, capsys):
    events = tmp_path / "events.tsv"
    assert main(["detect", "--model", str(workdir / "model.txt"), "--data", str(workdir / "bus.log"),
                 "--out", str(events)]) == 0
    lines = events.read_text().splitlines()
    assert len(lines) == 50
    assert all(len(l.split("\t")) == 5 for l in lines)
    assert "real-time bound" in capsys.readouterr().err


def test_train_folds(workdir, capsys):
    assert main(["train", "--data", str(workdir / "data.csv"), "--schema", "synthetic", *FAST,
                 "--folds", "3"]) == 0
    assert "cv_percent" in capsys.readouterr().out


def test_tune(workdir, capsys):
    assert main(["tune", "--data", str(workdir / "data.csv"), "--schema", "synthetic", "--trials", "2",
                 "--folds", "2", "--hidden-range", "1", "2", "--batches-range", "10", "20",
                 "--epochs-range", "2", "3"]) == 0
    assert "# best:" in capsys.readouterr().out


def test_bench(workdir, capsys):
    assert main(["bench", "--data", str(workdir / "data.csv"), "--schema", "synthetic", *FAST,
                 "--widths", "10", "50"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("neurons") and len(out) == 4
    assert out[1].startswith("i*c")


def test_gen_from_spec_file(tmp_path):
    spec = tmp_path / "spec.txt"
    spec.write_text("class Normal id=100 payload=random n=5\nclass DoS id=000 payload=0000000000000000 n=5\n")
    assert main(["gen", "--data", str(spec), "--out", str(tmp_path / "s.csv")]) == 0
    assert len(dataset.load_csv(tmp_path / "s.csv", "synthetic")) == 10


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["eval", "--model", str(tmp_path / "missing.txt"), "--schema", "synthetic"]) == 2
    assert main(["train", "--schema", "ciciov2024"]) == 2
    assert "error" in capsys.readouterr().err


def test_module_entry_point_numpy_backend(workdir):
    env = dict(os.environ, CANIDS_NUMBA="0")
    res = subprocess.run([sys.executable, "-m", "canids", "detect", "--model", str(workdir / "model.txt"),
                          "--data", str(workdir / "bus.log")], capture_output=True, text=True, env=env)
    assert res.returncode == 0
    assert len(res.stdout.splitlines()) == 50
    res = subprocess.run([sys.executable, "-m", "canids", "train", "--epochs", "0"],
                         capture_output=True, text=True, env=env)
    assert res.returncode != 0
