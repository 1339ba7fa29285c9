from __future__ import annotations

import json

import numpy as np
import pytest

from daccurves import DacCurve, DataError, FeatureSet, Grid
from daccurves.curveio import (
    curve_csv,
    curve_json,
    load_dataset_csv,
    write_text_atomic,
)


def small_curve() -> DacCurve:
    grid = Grid((np.array([0.0, 0.5, 1.0]),))
    values = np.array([1.25, np.nan, -2.0])
    counts = np.array([4.0, 0.0, 1.0])
    return DacCurve(grid, values, counts, FeatureSet((0,)))


class TestCurveFormats:
    def test_csv_layout(self):
        text = curve_csv(small_curve(), ("alpha",))
        lines = text.split("\n")
        assert lines[0] == "x_alpha,value,count"
        assert lines[1] == "0.0,1.25,4.0"
        assert lines[2] == "0.5,,0.0"  # undefined cell leaves value empty
        assert lines[3] == "1.0,-2.0,1.0"
        assert text.endswith("\n")

    def test_csv_2d_row_major(self):
        grid = Grid((np.array([0.0, 1.0]), np.array([5.0, 6.0])))
        values = np.arange(4.0).reshape(2, 2)
        curve = DacCurve(grid, values, np.ones((2, 2)), FeatureSet((0, 1)))
        lines = curve_csv(curve, ("a", "b")).strip().split("\n")
        assert lines[0] == "x_a,x_b,value,count"
        assert lines[1].startswith("0.0,5.0,0.0")
        assert lines[2].startswith("0.0,6.0,1.0")
        assert lines[4].startswith("1.0,6.0,3.0")

    def test_json_round_trip(self):
        doc = json.loads(curve_json(small_curve(), ("alpha",)))
        assert doc["header"] == ["x_alpha", "value", "count"]
        assert doc["rows"][0] == [0.0, 1.25, 4.0]
        assert doc["rows"][1] == [0.5, None, 0.0]

    def test_feature_names_resolved_by_index(self):
        base = small_curve()
        curve = DacCurve(base.grid, base.values, base.counts, FeatureSet((1,)))
        text = curve_csv(curve, ("alpha", "beta"))
        assert text.startswith("x_beta,")


class TestDatasetCsv:
    def _write(self, tmp_path, text, name="d.csv"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    def test_basic(self, tmp_path):
        path = self._write(tmp_path, "a,b,label\n1,2,0\n3,4,1\n")
        data = load_dataset_csv(path)
        assert data.feature_names == ("a", "b")
        assert np.array_equal(data.X, [[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(data.y, [0.0, 1.0])

    def test_named_target(self, tmp_path):
        path = self._write(tmp_path, "a,b,c\n1,2,3\n4,5,6\n")
        data = load_dataset_csv(path, target="b")
        assert data.feature_names == ("a", "c")
        assert np.array_equal(data.y, [2.0, 5.0])

    def test_categorical_encoding(self, tmp_path):
        path = self._write(tmp_path, "a,label\nred,0\nblue,1\nred,0\n")
        data = load_dataset_csv(path)
        assert np.array_equal(data.X[:, 0], [0.0, 1.0, 0.0])

    def test_errors(self, tmp_path):
        with pytest.raises(DataError):
            load_dataset_csv(self._write(tmp_path, "", "empty.csv"))
        with pytest.raises(DataError):
            load_dataset_csv(self._write(tmp_path, "a,b\n", "norows.csv"))
        with pytest.raises(DataError):
            load_dataset_csv(self._write(tmp_path, "a,b\n1\n", "ragged.csv"))
        with pytest.raises(DataError):
            load_dataset_csv(
                self._write(tmp_path, "a,b\n1,2\n", "t.csv"), target="zzz"
            )


class TestAtomicWrite:
    def test_writes_and_replaces(self, tmp_path):
        p = tmp_path / "out.txt"
        write_text_atomic(str(p), "one\n")
        write_text_atomic(str(p), "two\n")
        assert p.read_text() == "two\n"
        assert not (tmp_path / "out.txt.tmp").exists()
