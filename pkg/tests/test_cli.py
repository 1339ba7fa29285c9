from __future__ import annotations

import json

import numpy as np
import pytest

from daccurves.cli import main


@pytest.fixture
def reg_csv(tmp_path, rng):
    X = rng.normal(size=(120, 3))
    y = X[:, 0] ** 2 + 0.1 * rng.normal(size=120)
    lines = ["a,b,c,target"]
    for row, t in zip(X, y):
        lines.append(",".join(repr(v) for v in row) + f",{t!r}")
    p = tmp_path / "reg.csv"
    p.write_text("\n".join(lines) + "\n")
    return str(p)


@pytest.fixture
def cls_csv(tmp_path, rng):
    X = rng.normal(size=(100, 2))
    y = (X[:, 0] > 0).astype(int)
    lines = ["a,b,label"]
    for row, t in zip(X, y):
        lines.append(",".join(repr(v) for v in row) + f",{t}")
    p = tmp_path / "cls.csv"
    p.write_text("\n".join(lines) + "\n")
    return str(p)


class TestTrainPredict:
    def test_regression_round_trip(self, tmp_path, reg_csv):
        model = str(tmp_path / "m.json")
        assert main([
            "train", "--data", reg_csv, "--task", "reg",
            "--model-out", model, "--trees", "5", "--seed", "1",
        ]) == 0
        preds = str(tmp_path / "p.csv")
        assert main(["predict", "--model", model, "--data", reg_csv, "--out", preds]) == 0
        lines = (tmp_path / "p.csv").read_text().strip().split("\n")
        assert lines[0] == "prediction"
        assert len(lines) == 121
        float(lines[1])

    def test_classification_and_adaboost(self, tmp_path, cls_csv, reg_csv):
        assert main([
            "train", "--data", cls_csv, "--task", "cls",
            "--model-out", str(tmp_path / "c.json"), "--trees", "3",
        ]) == 0
        assert main([
            "train", "--data", reg_csv, "--task", "reg", "--adaboost",
            "--model-out", str(tmp_path / "a.json"), "--trees", "3",
            "--max-depth", "3", "--min-samples-leaf", "5",
        ]) == 0


class TestCurveCommands:
    @pytest.fixture
    def model(self, tmp_path, reg_csv):
        path = str(tmp_path / "m.json")
        main([
            "train", "--data", reg_csv, "--task", "reg",
            "--model-out", path, "--trees", "5", "--seed", "0",
        ])
        return path

    @pytest.mark.parametrize("kind", ["dac", "pdp"])
    def test_curve_csv(self, tmp_path, reg_csv, model, kind):
        out = str(tmp_path / f"{kind}.csv")
        assert main([
            kind, "--model", model, "--data", reg_csv,
            "--features", "0", "--grid", "11", "--out", out,
        ]) == 0
        lines = (tmp_path / f"{kind}.csv").read_text().strip().split("\n")
        assert lines[0] == "x_a,value,count"
        assert len(lines) == 12

    def test_dac_json_sidecar(self, tmp_path, reg_csv, model):
        out = str(tmp_path / "curve.csv")
        assert main([
            "dac", "--model", model, "--data", reg_csv,
            "--features", "0,1", "--grid", "6", "--json", "--out", out,
        ]) == 0
        doc = json.loads((tmp_path / "curve.json").read_text())
        assert doc["header"] == ["x_a", "x_b", "value", "count"]
        assert len(doc["rows"]) == 36

    def test_importance(self, capsys, reg_csv, model):
        assert main(["importance", "--model", model, "--data", reg_csv]) == 0
        out = capsys.readouterr().out.strip().split("\n")
        assert len(out) == 3
        name, value = out[0].split(",")
        assert name == "a"
        assert 0.0 <= float(value) <= 1.0

    def test_export_grid(self, tmp_path, reg_csv, capsys):
        out = str(tmp_path / "grid.csv")
        assert main([
            "export-grid", "--data", reg_csv, "--features", "1",
            "--grid", "5", "--out", out,
        ]) == 0
        lines = (tmp_path / "grid.csv").read_text().strip().split("\n")
        assert len(lines) == 6


class TestExperimentsAndErrors:
    def test_simulate_writes_csv(self, tmp_path):
        out = str(tmp_path / "sim.csv")
        assert main([
            "simulate", "--function", "5", "--regime", "iid",
            "--n-train", "300", "--n-test", "3000", "--trees", "3",
            "--out", out,
        ]) == 0
        lines = (tmp_path / "sim.csv").read_text().strip().split("\n")
        assert lines[0].startswith("function,regime,model,")

    def test_fe_experiment(self, tmp_path, cls_csv):
        out = str(tmp_path / "fe.csv")
        assert main([
            "fe-experiment", "--data", cls_csv, "--trees", "5", "--out", out,
        ]) == 0
        assert (tmp_path / "fe.csv").read_text().strip()

    def test_usage_error_exit_1(self, capsys):
        assert main(["train", "--task", "reg"]) == 1  # missing required flags
        assert main(["dac"]) == 1
        capsys.readouterr()

    def test_unknown_command_exit_1(self, capsys):
        assert main(["frobnicate"]) == 1
        capsys.readouterr()

    def test_data_error_exit_2(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1\n")
        assert main([
            "train", "--data", str(bad), "--task", "reg",
            "--model-out", str(tmp_path / "m.json"),
        ]) == 2

    def test_missing_file_exit_2(self, tmp_path):
        assert main([
            "predict", "--model", str(tmp_path / "none.json"),
            "--data", str(tmp_path / "none.csv"),
            "--out", str(tmp_path / "o.csv"),
        ]) == 2

    def test_byte_identical_reruns(self, tmp_path, reg_csv):
        """Same command, same flags, same bytes out."""
        m1, m2 = str(tmp_path / "m1.json"), str(tmp_path / "m2.json")
        for m in (m1, m2):
            assert main([
                "train", "--data", reg_csv, "--task", "reg",
                "--model-out", m, "--trees", "4", "--seed", "7",
            ]) == 0
        assert (tmp_path / "m1.json").read_bytes() == (tmp_path / "m2.json").read_bytes()
