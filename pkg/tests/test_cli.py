import csv

import numpy as np
import pytest

from nrtree.cli import main
from nrtree.data import load_csv
from nrtree.evaluation import mae
from nrtree.inference import predict_batch
from nrtree.modelfile import load_model

FAST = ["--epochs", "30", "--lr", "0.01", "--max-depth", "2"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--regimes", "2", "--n", "120", "--dim", "3", "--noise", "0.1",
                 "--seed", "1", "--out", str(root / "data.csv")]) == 0
    assert main(["train", "--data", str(root / "data.csv"), "--response-col", "y",
                 "--out", str(root / "model.json"), *FAST]) == 0
    return root


def read_col(path, name):
    with open(path, newline="") as fh:
        return [row[name] for row in csv.DictReader(fh)]


def test_synth_writes_truth(workdir):
    assert (workdir / "data.truth.json").exists()
    d = load_csv(workdir / "data.csv", "y")
    assert len(d) == 120 and d.dim == 3


def test_train_prints_log(workdir, capsys):
    assert main(["train", "--data", str(workdir / "data.csv"), "--response-col", "y",
                 "--out", str(workdir / "m2.json"), "--max-depth", "1", "--epochs", "20"]) == 0
    out = capsys.readouterr().out
    assert "node   0 depth 0" in out and "objective=" in out


def test_predict_matches_library(workdir):
    out = workdir / "pred.csv"
    assert main(["predict", "--model", str(workdir / "model.json"), "--data", str(workdir / "data.csv"),
                 "--out", str(out)]) == 0
    model = load_model(workdir / "model.json")
    d = load_csv(workdir / "data.csv", "y")
    got = np.array([float(v) for v in read_col(out, "prediction")])
    np.testing.assert_array_equal(got, predict_batch(model, d.X))


def test_predict_hard_writes_leaf(workdir):
    out = workdir / "hard.csv"
    assert main(["predict", "--model", str(workdir / "model.json"), "--data", str(workdir / "data.csv"),
                 "--mode", "hard", "--out", str(out)]) == 0
    leaves = {int(v) for v in read_col(out, "leaf")}
    assert leaves <= set(range(load_model(workdir / "model.json").leaf_count))


def test_evaluate_matches_library(workdir, capsys):
    assert main(["evaluate", "--model", str(workdir / "model.json"), "--data", str(workdir / "data.csv")]) == 0
    lines = dict(line.split() for line in capsys.readouterr().out.splitlines())
    model = load_model(workdir / "model.json")
    d = load_csv(workdir / "data.csv", "y")
    assert float(lines["MAE"]) == pytest.approx(mae(predict_batch(model, d.X), d.y), rel=1e-9)
    assert lines["n"] == "120"


def test_evaluate_self_compare_is_degenerate(workdir):
    pred = workdir / "self.csv"
    main(["predict", "--model", str(workdir / "model.json"), "--data", str(workdir / "data.csv"),
          "--out", str(pred)])
    assert main(["evaluate", "--model", str(workdir / "model.json"), "--data", str(workdir / "data.csv"),
                 "--compare-predictions", str(pred)]) == 3


def test_evaluate_against_constant_predictions(workdir, capsys):
    d = load_csv(workdir / "data.csv", "y")
    pred = workdir / "const.csv"
    pred.write_text("prediction\n" + "\n".join([repr(float(d.y.mean()))] * len(d)) + "\n")
    assert main(["evaluate", "--model", str(workdir / "model.json"), "--data", str(workdir / "data.csv"),
                 "--compare-predictions", str(pred)]) == 0
    lines = dict(line.split() for line in capsys.readouterr().out.splitlines())
    assert lines["df"] == "119" and 0 <= float(lines["p"]) <= 1


def test_analyze_json(workdir, capsys):
    js = workdir / "report.json"
    assert main(["analyze", "--model", str(workdir / "model.json"), "--data", str(workdir / "data.csv"),
                 "--json-out", str(js)]) == 0
    assert "overall MAE" in capsys.readouterr().out
    assert js.exists()


class TestExitCodes:
    @pytest.mark.parametrize("extra", [["--lambda", "1.0"], ["--lambda", "0"], ["--beta", "-1"],
                                       ["--min-leaf", "1"], ["--method", "gradient", "--penalty", "gini"]])
    def test_bad_flags(self, workdir, extra, capsys):
        argv = ["train", "--data", str(workdir / "data.csv"), "--response-col", "y",
                "--out", str(workdir / "x.json"), *extra]
        try:
            code = main(argv)
        except SystemExit as exc:
            code = exc.code
        assert code == 2

    def test_missing_response_column(self, workdir):
        assert main(["train", "--data", str(workdir / "data.csv"), "--response-col", "nope",
                     "--out", str(workdir / "x.json")]) == 3

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,y\n1,2\nx,3\n")
        assert main(["train", "--data", str(p), "--response-col", "y", "--out", str(tmp_path / "m.json")]) == 3

    def test_dimension_mismatch(self, workdir, tmp_path):
        p = tmp_path / "narrow.csv"
        p.write_text("u,v\n1,2\n")
        assert main(["predict", "--model", str(workdir / "model.json"), "--data", str(p),
                     "--out", str(tmp_path / "o.csv")]) == 3

    def test_unknown_baseline(self, workdir):
        assert main(["compare", "--data", str(workdir / "data.csv"), "--response-col", "y",
                     "--baselines", "cart,forest"]) == 2


def test_compare_table_and_determinism(workdir, capsys):
    argv = ["compare", "--data", str(workdir / "data.csv"), "--response-col", "y",
            "--baselines", "mean,cart", "--seeds", "2"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == first
    names = [line.split()[0] for line in first.splitlines()[1:3]]
    assert names == ["mean", "cart"]
