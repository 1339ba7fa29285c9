"""Decision trees and tree ensembles with fully exposed internals.

Trees are stored as flat node arrays (feature, threshold, children, value)
so that split rules and leaf membership can be consumed directly by the
attribution engine. Split convention: rows with x[feature] < threshold go
left, rows with x[feature] >= threshold go right.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._kernels import apply_kernel, best_split_kernel

__all__ = [
    "Task",
    "MaxFeatures",
    "Dataset",
    "TrainParams",
    "DecisionTree",
    "Ensemble",
    "DataError",
    "ModelFormatError",
    "BoostingError",
    "fit_tree",
    "fit_random_forest",
    "fit_adaboost_r2",
    "predict",
    "predict_batch",
    "gini_importance",
    "save_model",
    "load_model",
    "model_to_json",
    "model_from_json",
]


class DataError(ValueError):
    """Invalid dataset or query input."""


class ModelFormatError(ValueError):
    """Malformed or inconsistent serialized model."""


class BoostingError(RuntimeError):
    """AdaBoost could not make progress."""


class Task(str, Enum):
    REGRESSION = "regression"
    BINARY_CLASSIFICATION = "binary_classification"


class MaxFeatures(str, Enum):
    ALL = "all"
    SQRT = "sqrt"
    THIRD = "third"

    def resolve(self, d: int) -> int:
        if self is MaxFeatures.ALL:
            return d
        if self is MaxFeatures.SQRT:
            return max(1, int(np.sqrt(d)))
        return max(1, d // 3)


@dataclass(frozen=True)
class Dataset:
    """Feature matrix X (n x d), targets y (n,), and column names."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DataError(f"bad dataset shapes: X {X.shape}, y {y.shape}")
        if X.shape[0] == 0:
            raise DataError("empty dataset")
        if not np.all(np.isfinite(X)):
            raise DataError("non-finite entries in X")
        if not np.all(np.isfinite(y)):
            raise DataError("non-finite entries in y")
        names = tuple(self.feature_names)
        if len(names) != X.shape[1]:
            raise DataError(
                f"{len(names)} feature names for {X.shape[1]} columns"
            )
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def check_binary(self):
        if not np.all((self.y == 0.0) | (self.y == 1.0)):
            raise DataError("binary classification requires y in {0, 1}")


@dataclass(frozen=True)
class TrainParams:
    """Knobs for tree and ensemble training.

    min_samples_leaf=None resolves to the task default (1 for
    classification, 5 for regression). allowed_features, when given,
    restricts every split to that set of column indices; it exists for
    missingness experiments where a feature must never be used.
    """

    n_trees: int = 50
    max_depth: int | None = None
    min_samples_leaf: int | None = None
    max_features: MaxFeatures = MaxFeatures.ALL
    bootstrap: bool = True
    seed: int = 0
    allowed_features: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_leaf is not None and self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")

    def resolve_min_leaf(self, task: Task) -> int:
        if self.min_samples_leaf is not None:
            return self.min_samples_leaf
        return 1 if task is Task.BINARY_CLASSIFICATION else 5


@dataclass
class DecisionTree:
    """Binary tree as parallel node arrays; feature == -1 marks a leaf.

    value/n_samples are statistics of the *original* training rows routed
    through the tree (not the bootstrap resample); sample_indices[i] holds
    those row indices for leaf i (None for internal nodes, or everywhere
    for imported models that did not record membership).
    """

    feature: np.ndarray  # int64, -1 for leaves
    threshold: np.ndarray  # float64, nan for leaves
    left: np.ndarray  # int64, -1 for leaves
    right: np.ndarray  # int64, -1 for leaves
    value: np.ndarray  # float64, per-node target mean
    n_samples: np.ndarray  # int64
    sample_indices: list[np.ndarray | None]
    n_features: int

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def is_leaf(self, i: int) -> bool:
        return self.feature[i] < 0

    def leaf_ids(self) -> np.ndarray:
        return np.nonzero(self.feature < 0)[0]

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf id reached by each row of X."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        return apply_kernel(self.feature, self.threshold, self.left, self.right, X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def path_rules(self) -> list[list[tuple[int, float, bool]]]:
        """Per-node root-to-node rule list as (feature, threshold, is_left).

        is_left=True means the branch requires x[feature] < threshold,
        False means x[feature] >= threshold.
        """
        rules: list[list[tuple[int, float, bool]]] = [[] for _ in range(self.n_nodes)]
        stack = [0]
        while stack:
            node = stack.pop()
            if self.feature[node] < 0:
                continue
            f, t = int(self.feature[node]), float(self.threshold[node])
            rules[self.left[node]] = rules[node] + [(f, t, True)]
            rules[self.right[node]] = rules[node] + [(f, t, False)]
            stack.append(self.left[node])
            stack.append(self.right[node])
        return rules

    def features_used(self) -> set[int]:
        return {int(f) for f in self.feature if f >= 0}


@dataclass
class Ensemble:
    """Weighted collection of trees; weights are nonnegative and sum to 1."""

    trees: list[DecisionTree]
    weights: np.ndarray
    task: Task
    feature_names: tuple[str, ...]
    n_features: int

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if len(self.trees) != self.weights.shape[0] or len(self.trees) < 1:
            raise ValueError("need |trees| == |weights| >= 1")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to 1")

    @property
    def n_trees(self) -> int:
        return len(self.trees)


# ---------------------------------------------------------------------------
# Tree construction
# ---------------------------------------------------------------------------

_PURE_TOL = 1e-12


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    feats: np.ndarray,
    min_leaf: int,
) -> tuple[int, float] | None:
    """Greedy split minimizing total child impurity (SSE; for 0/1 targets
    this is proportional to weighted Gini). Ties break toward the lowest
    feature index, then the lowest threshold."""
    if rows.size < 2 * min_leaf:
        return None
    feats = np.sort(feats)
    Xt = np.ascontiguousarray(X[np.ix_(rows, feats)].T)
    f_local, thr = best_split_kernel(Xt, np.ascontiguousarray(y[rows]), min_leaf)
    if f_local < 0:
        return None
    return int(feats[f_local]), float(thr)


def _node_impurity_total(y: np.ndarray) -> float:
    """Sum of squared deviations from the mean (0 iff constant)."""
    if y.size == 0:
        return 0.0
    m = y.mean()
    return float(np.sum((y - m) ** 2))


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    fit_rows: np.ndarray,
    params: TrainParams,
    task: Task,
    rng: np.random.Generator,
) -> tuple[list, list, list, list]:
    """Build node arrays on fit_rows; returns (feature, threshold, left, right)
    lists plus placeholder stats filled in later from the full dataset."""
    d = X.shape[1]
    min_leaf = params.resolve_min_leaf(task)
    if params.allowed_features is not None:
        pool = np.asarray(sorted(set(params.allowed_features)), dtype=np.int64)
        if pool.size == 0 or pool.min() < 0 or pool.max() >= d:
            raise ValueError("allowed_features out of range")
    else:
        pool = np.arange(d, dtype=np.int64)
    m = min(params.max_features.resolve(d), pool.size)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(float("nan"))
        left.append(-1)
        right.append(-1)
        return len(feature) - 1

    root = new_node()
    stack: list[tuple[int, np.ndarray, int]] = [(root, fit_rows, 0)]
    while stack:
        node, rows, depth = stack.pop()
        ysub = y[rows]
        tot = _node_impurity_total(ysub)
        stop = (
            rows.size < 2 * min_leaf
            or (params.max_depth is not None and depth >= params.max_depth)
            or tot <= _PURE_TOL * max(1.0, float(np.sum(ysub * ysub)))
        )
        split = None
        if not stop:
            feats = pool if m >= pool.size else rng.choice(pool, size=m, replace=False)
            split = _best_split(X, y, rows, feats, min_leaf)
        if split is None:
            continue  # stays a leaf
        f, t = split
        go_left = X[rows, f] < t
        lnode = new_node()
        rnode = new_node()
        feature[node] = f
        threshold[node] = t
        left[node] = lnode
        right[node] = rnode
        stack.append((rnode, rows[~go_left], depth + 1))
        stack.append((lnode, rows[go_left], depth + 1))
    return feature, threshold, left, right


def _finalize_stats(tree: DecisionTree, data: Dataset, task: Task) -> None:
    """Recompute per-node value/count/membership from the full original data.

    Leaf values are means over sorted targets (row-order independent);
    internal values aggregate bottom-up (children are always created after
    their parent, so a reverse index sweep sees children first)."""
    n_nodes = tree.n_nodes
    tree.n_samples = np.zeros(n_nodes, dtype=np.int64)
    tree.value = np.zeros(n_nodes, dtype=np.float64)
    tree.sample_indices = [None] * n_nodes
    arrival = tree.apply(data.X)
    order = np.argsort(arrival, kind="stable")
    bounds = np.searchsorted(arrival[order], np.arange(n_nodes + 1))
    for leaf in np.nonzero(tree.feature < 0)[0]:
        rows = order[bounds[leaf]: bounds[leaf + 1]]
        tree.sample_indices[leaf] = rows
        tree.n_samples[leaf] = rows.size
        if rows.size:
            tree.value[leaf] = float(np.sort(data.y[rows]).mean())
    for node in range(n_nodes - 1, -1, -1):
        if tree.feature[node] < 0:
            continue
        l, r = tree.left[node], tree.right[node]
        nl, nr = tree.n_samples[l], tree.n_samples[r]
        tree.n_samples[node] = nl + nr
        if nl + nr:
            tree.value[node] = (
                nl * tree.value[l] + nr * tree.value[r]
            ) / (nl + nr)


def _fit_tree_on_rows(
    data: Dataset,
    fit_rows: np.ndarray,
    params: TrainParams,
    task: Task,
    rng: np.random.Generator,
) -> DecisionTree:
    feature, threshold, left, right = _grow_tree(
        data.X, data.y, fit_rows, params, task, rng
    )
    tree = DecisionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.zeros(len(feature)),
        n_samples=np.zeros(len(feature), dtype=np.int64),
        sample_indices=[None] * len(feature),
        n_features=data.d,
    )
    _finalize_stats(tree, data, task)
    return tree


def _tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(tree_index,))
    )


def fit_tree(
    data: Dataset,
    params: TrainParams,
    task: Task = Task.REGRESSION,
    rng: np.random.Generator | None = None,
) -> DecisionTree:
    """Fit a single CART tree on all rows of data."""
    if task is Task.BINARY_CLASSIFICATION:
        data.check_binary()
    if rng is None:
        rng = _tree_rng(params.seed, 0)
    return _fit_tree_on_rows(data, np.arange(data.n), params, task, rng)


def fit_random_forest(
    data: Dataset, params: TrainParams, task: Task = Task.REGRESSION
) -> Ensemble:
    """Bagged forest; leaf statistics are refreshed on the original rows."""
    if task is Task.BINARY_CLASSIFICATION:
        data.check_binary()
    trees = []
    for t in range(params.n_trees):
        rng = _tree_rng(params.seed, t)
        if params.bootstrap:
            fit_rows = rng.integers(0, data.n, size=data.n)
        else:
            fit_rows = np.arange(data.n)
        trees.append(_fit_tree_on_rows(data, fit_rows, params, task, rng))
    w = np.full(params.n_trees, 1.0 / params.n_trees)
    return Ensemble(trees, w, task, data.feature_names, data.d)


def fit_adaboost_r2(data: Dataset, params: TrainParams) -> Ensemble:
    """AdaBoost.R2 with linear loss over depth-limited regression trees.

    Estimator t gets beta_t = err/(1-err); ensemble weights are
    log(1/beta_t) normalized to sum 1. Stops early on err >= 0.5 or on a
    (near-)perfect estimator.
    """
    if data.n < 2:
        raise DataError("AdaBoost.R2 needs at least 2 rows")
    if params.max_depth is None:
        params = TrainParams(
            n_trees=params.n_trees,
            max_depth=4,
            min_samples_leaf=params.min_samples_leaf,
            max_features=params.max_features,
            bootstrap=params.bootstrap,
            seed=params.seed,
            allowed_features=params.allowed_features,
        )
    n = data.n
    w = np.full(n, 1.0 / n)
    trees: list[DecisionTree] = []
    log_weights: list[float] = []
    for t in range(params.n_trees):
        rng = _tree_rng(params.seed, t)
        fit_rows = rng.choice(n, size=n, replace=True, p=w)
        tree = _fit_tree_on_rows(data, fit_rows, params, Task.REGRESSION, rng)
        # the weight update scores the machine actually trained this round,
        # i.e. leaf means over the resample; the stored tree carries stats
        # refreshed on the original rows and would otherwise never reduce
        # the relative error of points it cannot fit
        fit_leaves = apply_kernel(
            tree.feature, tree.threshold, tree.left, tree.right,
            np.ascontiguousarray(data.X[fit_rows]),
        )
        m = tree.feature.size
        sums = np.bincount(fit_leaves, weights=data.y[fit_rows], minlength=m)
        cnts = np.bincount(fit_leaves, minlength=m)
        fit_values = np.where(cnts > 0, sums / np.maximum(cnts, 1), 0.0)
        all_leaves = apply_kernel(
            tree.feature, tree.threshold, tree.left, tree.right, data.X
        )
        resid = np.abs(fit_values[all_leaves] - data.y)
        rmax = resid.max()
        if rmax <= 0.0:
            err = 0.0
            rel = np.zeros(n)
        else:
            rel = resid / rmax
            err = float(np.sum(w * rel))
        if err >= 0.5:
            if t == 0:
                raise BoostingError("boosting failed to find weak learner")
            break
        trees.append(tree)
        if err < 1e-10:
            log_weights.append(np.log(1.0 / 1e-10))
            break
        beta = err / (1.0 - err)
        log_weights.append(float(np.log(1.0 / beta)))
        w = w * beta ** (1.0 - rel)
        w = w / w.sum()
    lw = np.asarray(log_weights)
    weights = lw / lw.sum()
    return Ensemble(trees, weights, Task.REGRESSION, data.feature_names, data.d)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def predict_batch(model: Ensemble, X: np.ndarray) -> np.ndarray:
    """Weighted mean of per-tree leaf values, one output per row of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataError(
            f"expected (n, {model.n_features}) inputs, got {X.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite query inputs")
    out = np.zeros(X.shape[0])
    for tree, w in zip(model.trees, model.weights):
        out += w * tree.predict(X)
    return out


def predict(model: Ensemble, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.n_features:
        raise DataError(f"expected length-{model.n_features} vector, got {x.shape}")
    return float(predict_batch(model, x[None, :])[0])


def _impurity(y: np.ndarray, task: Task) -> float:
    if y.size == 0:
        return 0.0
    if task is Task.BINARY_CLASSIFICATION:
        p = y.mean()
        return float(2.0 * p * (1.0 - p))
    return float(np.var(y))


def gini_importance(model: Ensemble, data: Dataset) -> np.ndarray:
    """Mean decrease in impurity, averaged over trees, normalized to sum 1.

    Impurities are evaluated on the original dataset routed through each
    tree (variance for regression, Gini for classification)."""
    n = data.n
    total = np.zeros(model.n_features)
    for tree in model.trees:
        imp = np.zeros(model.n_features)
        stack: list[tuple[int, np.ndarray]] = [(0, np.arange(n))]
        while stack:
            node, rows = stack.pop()
            if tree.feature[node] < 0 or rows.size == 0:
                continue
            go_left = data.X[rows, tree.feature[node]] < tree.threshold[node]
            lrows, rrows = rows[go_left], rows[~go_left]
            yn = data.y[rows]
            parent = _impurity(yn, model.task)
            child = (
                lrows.size * _impurity(data.y[lrows], model.task)
                + rrows.size * _impurity(data.y[rrows], model.task)
            ) / rows.size
            imp[tree.feature[node]] += (rows.size / n) * (parent - child)
            stack.append((tree.left[node], lrows))
            stack.append((tree.right[node], rrows))
        total += imp
    total /= model.n_trees
    s = total.sum()
    if s > 0:
        total = total / s
    return total


# ---------------------------------------------------------------------------
# Serialization (schema_version 1)
# ---------------------------------------------------------------------------


def _tree_to_dict(tree: DecisionTree) -> dict:
    nodes = []
    for i in range(tree.n_nodes):
        leaf = tree.feature[i] < 0
        si = tree.sample_indices[i]
        nodes.append(
            {
                "feature": int(tree.feature[i]),
                "threshold": None if leaf else float(tree.threshold[i]),
                "left": int(tree.left[i]),
                "right": int(tree.right[i]),
                "value": float(tree.value[i]),
                "n_samples": int(tree.n_samples[i]),
                "sample_indices": None if si is None else [int(j) for j in si],
            }
        )
    return {"nodes": nodes}


def model_to_json(model: Ensemble) -> str:
    doc = {
        "schema_version": 1,
        "task": model.task.value,
        "n_features": model.n_features,
        "feature_names": list(model.feature_names),
        "weights": [float(w) for w in model.weights],
        "trees": [_tree_to_dict(t) for t in model.trees],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def save_model(model: Ensemble, path: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))
    os.replace(tmp, path)


def _tree_from_dict(tdoc: dict, tree_idx: int, n_features: int) -> DecisionTree:
    nodes = tdoc.get("nodes")
    if not isinstance(nodes, list) or not nodes:
        raise ModelFormatError(f"tree {tree_idx}: missing or empty node list")
    k = len(nodes)
    feature = np.empty(k, dtype=np.int64)
    threshold = np.full(k, np.nan)
    left = np.empty(k, dtype=np.int64)
    right = np.empty(k, dtype=np.int64)
    value = np.empty(k)
    n_samples = np.empty(k, dtype=np.int64)
    sample_indices: list[np.ndarray | None] = [None] * k
    for i, nd in enumerate(nodes):
        where = f"tree {tree_idx} node {i}"
        try:
            feature[i] = int(nd["feature"])
            left[i] = int(nd["left"])
            right[i] = int(nd["right"])
            value[i] = float(nd["value"])
            n_samples[i] = int(nd["n_samples"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"{where}: {exc}") from exc
        if feature[i] >= 0:
            if feature[i] >= n_features:
                raise ModelFormatError(
                    f"{where}: feature {feature[i]} out of range (d={n_features})"
                )
            if nd.get("threshold") is None or not np.isfinite(float(nd["threshold"])):
                raise ModelFormatError(f"{where}: internal node needs finite threshold")
            threshold[i] = float(nd["threshold"])
            for child in (left[i], right[i]):
                if not (0 <= child < k):
                    raise ModelFormatError(f"{where}: child index {child} out of range")
        else:
            if left[i] != -1 or right[i] != -1:
                raise ModelFormatError(f"{where}: leaf must have children -1")
        si = nd.get("sample_indices")
        if si is not None:
            sample_indices[i] = np.asarray([int(j) for j in si], dtype=np.int64)
    return DecisionTree(
        feature, threshold, left, right, value, n_samples, sample_indices, n_features
    )


def model_from_json(text: str, data: Dataset | None = None) -> Ensemble:
    """Parse the canonical model JSON; with data given, recompute any
    missing leaf membership by routing and warn on inconsistent leaf values."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"malformed JSON: {exc}") from exc
    if doc.get("schema_version") != 1:
        raise ModelFormatError(
            f"unsupported schema_version {doc.get('schema_version')!r}"
        )
    try:
        task = Task(doc["task"])
        n_features = int(doc["n_features"])
        names = tuple(str(s) for s in doc["feature_names"])
        weights = np.asarray(doc["weights"], dtype=np.float64)
        tree_docs = doc["trees"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad model document: {exc}") from exc
    trees = [
        _tree_from_dict(td, i, n_features) for i, td in enumerate(tree_docs)
    ]
    model = Ensemble(trees, weights, task, names, n_features)
    if data is not None:
        _attach_data(model, data)
    return model


def _attach_data(model: Ensemble, data: Dataset) -> None:
    """Fill in missing sample_indices by routing data; warn when stored
    leaf values drift from the recomputed means (bootstrap statistics)."""
    if data.d != model.n_features:
        raise ModelFormatError(
            f"data has {data.d} features, model expects {model.n_features}"
        )
    for t_idx, tree in enumerate(model.trees):
        leaf_ids = tree.leaf_ids()
        have_all = all(tree.sample_indices[i] is not None for i in leaf_ids)
        arrival = tree.apply(data.X)
        for leaf in leaf_ids:
            rows = np.sort(np.nonzero(arrival == leaf)[0])
            if not have_all:
                tree.sample_indices[leaf] = rows
                tree.n_samples[leaf] = rows.size
            if rows.size:
                mean = float(np.sort(data.y[rows]).mean())
                if abs(mean - tree.value[leaf]) > 1e-6:
                    warnings.warn(
                        f"tree {t_idx} leaf {leaf}: stored value "
                        f"{tree.value[leaf]:.6g} differs from recomputed mean "
                        f"{mean:.6g}; keeping stored value",
                        stacklevel=2,
                    )


def load_model(path: str, data: Dataset | None = None) -> Ensemble:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(fh.read(), data=data)
