#!/usr/bin/env python3
"""Export a pickled scikit-learn tree ensemble to the portable model JSON
schema (schema_version 1) plus the data and prediction CSVs needed for
cross-implementation checks.

Usage:
    python export.py --model model.pkl --data data.csv --out out_dir/

The data CSV must contain one header row; the last column is the target.
Writes out_dir/model.json, out_dir/data.csv, out_dir/predictions.csv.

Supported models: RandomForestRegressor, RandomForestClassifier (binary),
AdaBoostRegressor with tree base estimators.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import pickle
import sys

import numpy as np
from sklearn.ensemble import (
    AdaBoostRegressor,
    RandomForestClassifier,
    RandomForestRegressor,
)

SUPPORTED = "RandomForestRegressor, RandomForestClassifier (binary), AdaBoostRegressor"


def _tree_nodes(sk_tree, leaf_value) -> list[dict]:
    """Convert one fitted sklearn tree's node arrays to schema nodes.

    sklearn routes x <= threshold to the left child while the schema's
    convention is x < threshold, so thresholds are nudged to the next
    representable float; the two rules then route every input identically.
    """
    t = sk_tree.tree_
    nodes = []
    for i in range(t.node_count):
        is_leaf = t.children_left[i] == -1
        nodes.append(
            {
                "feature": -1 if is_leaf else int(t.feature[i]),
                "threshold": None
                if is_leaf
                else float(np.nextafter(t.threshold[i], math.inf)),
                "left": int(t.children_left[i]),
                "right": int(t.children_right[i]),
                "value": leaf_value(t.value[i]),
                "n_samples": int(t.n_node_samples[i]),
                "sample_indices": None,
            }
        )
    return nodes


def export(model, X: np.ndarray, feature_names: list[str]) -> tuple[dict, np.ndarray]:
    """Build the schema document and the reference predictions.

    Predictions are the weighted mean of per-tree outputs (probability of
    the positive class for classifiers), which is the aggregation rule the
    importing engine uses. For random forests this equals the model's own
    predict/predict_proba output.
    """
    if isinstance(model, RandomForestClassifier):
        if len(model.classes_) != 2:
            raise SystemExit(
                f"error: only binary classifiers are supported, got "
                f"{len(model.classes_)} classes; supported: {SUPPORTED}"
            )
        task = "binary_classification"
        estimators = list(model.estimators_)
        weights = [1.0 / len(estimators)] * len(estimators)

        def leaf_value(v):
            counts = v[0]
            return float(counts[1] / counts.sum())

        preds = model.predict_proba(X)[:, 1]
    elif isinstance(model, RandomForestRegressor):
        task = "regression"
        estimators = list(model.estimators_)
        weights = [1.0 / len(estimators)] * len(estimators)

        def leaf_value(v):
            return float(v[0][0])

        preds = model.predict(X)
    elif isinstance(model, AdaBoostRegressor):
        task = "regression"
        estimators = list(model.estimators_)
        raw = np.asarray(model.estimator_weights_[: len(estimators)], dtype=float)
        if raw.sum() <= 0:
            raise SystemExit("error: AdaBoost model has no positive weights")
        weights = list(raw / raw.sum())

        def leaf_value(v):
            return float(v[0][0])

        per_tree = np.stack([e.predict(X) for e in estimators])
        preds = np.asarray(weights) @ per_tree
    else:
        raise SystemExit(
            f"error: unsupported model type {type(model).__name__}; "
            f"supported: {SUPPORTED}"
        )

    doc = {
        "schema_version": 1,
        "task": task,
        "n_features": int(model.n_features_in_),
        "feature_names": list(feature_names),
        "weights": [float(w) for w in weights],
        "trees": [{"nodes": _tree_nodes(e, leaf_value)} for e in estimators],
    }
    return doc, preds


def _read_csv(path: str) -> tuple[list[str], np.ndarray, list[str]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise SystemExit(f"error: {path} needs a header and at least one row")
    header = rows[0]
    body = rows[1:]
    X = np.array([[float(v) for v in r[:-1]] for r in body])
    target = [r[-1] for r in body]
    return header, X, target


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", required=True, help="pickled sklearn model")
    ap.add_argument("--data", required=True, help="CSV, target in last column")
    ap.add_argument("--out", required=True, help="output directory")
    args = ap.parse_args(argv)

    with open(args.model, "rb") as fh:
        model = pickle.load(fh)
    header, X, target = _read_csv(args.data)

    doc, preds = export(model, X, header[:-1])

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "model.json"), "w") as fh:
        fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
    with open(os.path.join(args.out, "data.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row, t in zip(X, target):
            w.writerow([repr(float(v)) for v in row] + [t])
    with open(os.path.join(args.out, "predictions.csv"), "w") as fh:
        fh.write("prediction\n")
        for p in preds:
            fh.write(f"{float(p)!r}\n")
    print(f"wrote model.json, data.csv, predictions.csv to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
