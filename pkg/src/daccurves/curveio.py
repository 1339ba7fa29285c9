"""CSV/JSON emission for curves and CSV ingestion for datasets."""

from __future__ import annotations

import csv
import json
import os
from itertools import product

import numpy as np

from .dac import DacCurve
from .trees import DataError, Dataset

__all__ = [
    "curve_csv",
    "curve_json",
    "write_text_atomic",
    "load_dataset_csv",
]


def write_text_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _curve_rows(curve: DacCurve):
    axes = curve.grid.axes
    for idx in product(*[range(a.size) for a in axes]):
        coords = [axes[d][i] for d, i in enumerate(idx)]
        v = curve.values[idx]
        yield coords, (None if not np.isfinite(v) else float(v)), float(
            curve.counts[idx]
        )


def _curve_header(curve: DacCurve, feature_names: tuple[str, ...]) -> list[str]:
    return [f"x_{feature_names[j]}" for j in curve.feature_set.indices] + [
        "value",
        "count",
    ]


def curve_csv(curve: DacCurve, feature_names: tuple[str, ...]) -> str:
    """Row per grid cell in row-major order; undefined cells leave the
    value field empty."""
    lines = [",".join(_curve_header(curve, feature_names))]
    for coords, v, c in _curve_rows(curve):
        cells = [repr(float(x)) for x in coords]
        cells.append("" if v is None else repr(v))
        cells.append(repr(c))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def curve_json(curve: DacCurve, feature_names: tuple[str, ...]) -> str:
    doc = {
        "header": _curve_header(curve, feature_names),
        "rows": [
            [float(x) for x in coords] + [v, c]
            for coords, v, c in _curve_rows(curve)
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _parse_column(raw: list[str], colname: str) -> np.ndarray:
    try:
        return np.asarray([float(v) for v in raw], dtype=np.float64)
    except ValueError:
        pass
    # categorical: integer-encode by first appearance
    codes: dict[str, int] = {}
    out = np.empty(len(raw))
    for i, v in enumerate(raw):
        if v not in codes:
            codes[v] = len(codes)
        out[i] = codes[v]
    return out


def load_dataset_csv(path: str, target: str | None = None) -> Dataset:
    """Dataset from a headered CSV; the target is the last column unless
    named. Non-numeric columns are integer-encoded by first appearance."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    if not rows:
        raise DataError(f"{path}: no data rows")
    if any(len(r) != len(header) for r in rows):
        raise DataError(f"{path}: ragged rows")
    if target is None:
        t_idx = len(header) - 1
    else:
        try:
            t_idx = header.index(target)
        except ValueError:
            raise DataError(f"{path}: no column named {target!r}") from None
    cols = {
        name: _parse_column([r[i] for r in rows], name)
        for i, name in enumerate(header)
    }
    feat_names = tuple(n for i, n in enumerate(header) if i != t_idx)
    X = np.column_stack([cols[n] for n in feat_names])
    return Dataset(X, cols[header[t_idx]], feat_names)
