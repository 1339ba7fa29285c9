"""Feature engineering with attribution curves: train a forest, take its
top Gini feature, turn that feature's 1-D curve into an extra column, and
compare logistic-regression accuracy with and without it."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dac import DacCurve, DacParams, FeatureSet, default_grid, ensemble_dac_curve, evaluate_curve
from .trees import (
    DataError,
    Dataset,
    MaxFeatures,
    Task,
    TrainParams,
    fit_random_forest,
    gini_importance,
    predict_batch,
)

__all__ = [
    "LogisticModel",
    "FeParams",
    "FeResult",
    "train_test_split",
    "fit_logistic",
    "logistic_proba",
    "augment_with_dac",
    "binarize_labels",
    "run_fe_experiment",
]


@dataclass(frozen=True)
class LogisticModel:
    """weights holds the d feature coefficients followed by the intercept."""

    weights: np.ndarray
    iterations: int
    final_loss: float


@dataclass(frozen=True)
class FeParams:
    train_fraction: float = 0.75
    n_trees: int = 50
    seed: int = 0
    l2: float = 1e-3
    max_iters: int = 2000
    tol: float = 1e-6
    dac_params: DacParams = field(default_factory=DacParams)


@dataclass(frozen=True)
class FeResult:
    dataset: str
    rf_accuracy: float
    logit_accuracy: float
    logit_dac_accuracy: float
    selected_feature: int
    difference: float


def train_test_split(
    data: Dataset, train_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Uniform random partition; train gets round(fraction * n) rows."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    if data.n < 2:
        raise DataError("need at least 2 rows to split")
    n_train = int(round(train_fraction * data.n))
    if n_train < 1 or n_train >= data.n:
        raise DataError(
            f"degenerate split: {n_train}/{data.n - n_train} train/test rows"
        )
    perm = np.random.default_rng(seed).permutation(data.n)
    tr, te = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    return (
        Dataset(data.X[tr], data.y[tr], data.feature_names),
        Dataset(data.X[te], data.y[te], data.feature_names),
    )


def _logloss_grad(
    Z: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, l2: float
) -> tuple[float, np.ndarray, float]:
    n = Z.shape[0]
    margin = Z @ w + b
    # log(1 + exp(-|m|)) + max(-ym, 0) form is stable for large margins
    ym = np.where(y > 0.5, margin, -margin)
    loss = float(np.mean(np.log1p(np.exp(-np.abs(ym))) + np.maximum(-ym, 0.0)))
    loss += l2 * float(w @ w)
    p = 1.0 / (1.0 + np.exp(-np.clip(margin, -500, 500)))
    r = (p - y) / n
    return loss, Z.T @ r + 2.0 * l2 * w, float(r.sum())


def fit_logistic(
    data: Dataset,
    l2: float = 1e-3,
    max_iters: int = 2000,
    tol: float = 1e-6,
) -> LogisticModel:
    """Gradient descent with backtracking on mean log-loss + l2 * ||w||^2
    (intercept unpenalized); features are standardized internally."""
    data.check_binary()
    y = data.y
    if y.min() == y.max():
        raise DataError("degenerate labels: only one class present")
    mu = data.X.mean(axis=0)
    sd = data.X.std(axis=0)
    live = sd > 0
    Z = np.zeros_like(data.X)
    Z[:, live] = (data.X[:, live] - mu[live]) / sd[live]

    w = np.zeros(data.d)
    b = 0.0
    loss, gw, gb = _logloss_grad(Z, y, w, b, l2)
    step = 1.0
    it = 0
    for it in range(1, max_iters + 1):
        gnorm2 = float(gw @ gw) + gb * gb
        if np.sqrt(gnorm2) <= tol:
            break
        step = min(step * 2.0, 1e4)
        while True:
            w2 = w - step * gw
            b2 = b - step * gb
            loss2, gw2, gb2 = _logloss_grad(Z, y, w2, b2, l2)
            if loss2 <= loss - 0.5 * step * gnorm2 or step < 1e-14:
                break
            step *= 0.5
        w, b, loss, gw, gb = w2, b2, loss2, gw2, gb2

    # map back to the original feature scale
    coef = np.zeros(data.d)
    coef[live] = w[live] / sd[live]
    intercept = b - float(coef @ mu)
    return LogisticModel(np.append(coef, intercept), it, loss)


def logistic_proba(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    margin = X @ model.weights[:-1] + model.weights[-1]
    return 1.0 / (1.0 + np.exp(-np.clip(margin, -500, 500)))


def augment_with_dac(data: Dataset, curve: DacCurve, feature: int) -> Dataset:
    """Append one column holding the curve evaluated at each row's value of
    the given feature."""
    if not (0 <= feature < data.d):
        raise ValueError(f"feature {feature} out of range (d={data.d})")
    col = np.array(
        [evaluate_curve(curve, np.array([v])) for v in data.X[:, feature]]
    )
    name = f"dac_{data.feature_names[feature]}"
    return Dataset(
        np.hstack([data.X, col[:, None]]), data.y, data.feature_names + (name,)
    )


def binarize_labels(y: np.ndarray) -> np.ndarray:
    """Multi-class labels become one-vs-rest on the most frequent class;
    already-binary {0, 1} labels pass through unchanged."""
    vals = np.unique(y)
    if vals.size <= 2 and set(vals).issubset({0.0, 1.0}):
        return y.astype(np.float64)
    counts = [(np.sum(y == v), v) for v in vals]
    top = max(counts)[1]
    return (y == top).astype(np.float64)


def _accuracy(pred: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean((pred >= 0.5) == (y > 0.5)))


def run_fe_experiment(
    data: Dataset, params: FeParams = FeParams(), name: str = "dataset"
) -> FeResult:
    """75/25 split, forest accuracy, top-Gini feature curve, and logistic
    accuracy with and without the curve feature (all fits on train only)."""
    data = Dataset(data.X, binarize_labels(data.y), data.feature_names)
    train, test = train_test_split(data, params.train_fraction, params.seed)
    rf = fit_random_forest(
        train,
        TrainParams(
            n_trees=params.n_trees,
            max_features=MaxFeatures.SQRT,
            bootstrap=True,
            seed=params.seed,
        ),
        Task.BINARY_CLASSIFICATION,
    )
    rf_acc = _accuracy(predict_batch(rf, test.X), test.y)

    importances = gini_importance(rf, train)
    top = int(np.argmax(importances))
    S = FeatureSet((top,))
    grid = default_grid(train, S, params.dac_params)
    curve = ensemble_dac_curve(rf, train, S, grid, params.dac_params)

    logit = fit_logistic(train, params.l2, params.max_iters, params.tol)
    logit_acc = _accuracy(logistic_proba(logit, test.X), test.y)

    train_aug = augment_with_dac(train, curve, top)
    test_aug = augment_with_dac(test, curve, top)
    logit_dac = fit_logistic(train_aug, params.l2, params.max_iters, params.tol)
    logit_dac_acc = _accuracy(logistic_proba(logit_dac, test_aug.X), test_aug.y)

    return FeResult(
        dataset=name,
        rf_accuracy=rf_acc,
        logit_accuracy=logit_acc,
        logit_dac_accuracy=logit_dac_acc,
        selected_feature=top,
        difference=logit_dac_acc - logit_acc,
    )
