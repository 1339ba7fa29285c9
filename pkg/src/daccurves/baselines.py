"""Partial dependence and empirical conditional-expectation curves, plus
the masked MSE used to compare curves on a shared grid."""

from __future__ import annotations

import numpy as np

from ._kernels import HAVE_NUMBA, pdp_accumulate_jit
from .dac import DacCurve, FeatureSet, Grid
from .trees import Dataset, Ensemble, predict_batch

__all__ = ["pdp_curve", "conditional_expectation_curve", "curve_mse"]


def pdp_curve(
    model: Ensemble, data: Dataset, S: FeatureSet, grid: Grid
) -> DacCurve:
    """Exact partial dependence: mean over data rows of the prediction with
    x_S overridden by each grid cell.

    Computed without materializing the n*|grid| query matrix: at every
    tree node the reachable (row, cell) pairs form a product set, so splits
    on S partition grid axes and splits on the complement partition rows.
    """
    S.validate(data.d)
    if data.d != model.n_features:
        raise ValueError("data does not match model schema")
    pos = {f: i for i, f in enumerate(S.indices)}
    if HAVE_NUMBA and len(S) <= 2:
        s_dims = np.asarray(S.indices, dtype=np.int64)
        ax0 = grid.axes[0]
        ax1 = grid.axes[1] if len(S) == 2 else np.zeros(1)
        total = np.zeros(grid.shape)
        for tree, w in zip(model.trees, model.weights):
            acc = pdp_accumulate_jit(
                tree.feature,
                tree.threshold,
                tree.left,
                tree.right,
                tree.value,
                data.X,
                s_dims,
                ax0,
                ax1,
            )
            if len(S) == 1:
                acc = acc[:, 0]
            total += w * acc / data.n
        return DacCurve(grid, total, np.full(grid.shape, float(data.n)), S)
    total = np.zeros(grid.shape)
    all_rows = np.arange(data.n)
    full_axes = [np.arange(a.size) for a in grid.axes]
    for tree, w in zip(model.trees, model.weights):
        acc = np.zeros(grid.shape)
        stack = [(0, all_rows, full_axes)]
        while stack:
            node, rows, axsubs = stack.pop()
            if tree.feature[node] < 0:
                acc[np.ix_(*axsubs)] += tree.value[node] * rows.size
                continue
            f = int(tree.feature[node])
            t = tree.threshold[node]
            if f in pos:
                dim = pos[f]
                coords = grid.axes[dim][axsubs[dim]]
                go_left = coords < t
                for child, sub in (
                    (tree.left[node], axsubs[dim][go_left]),
                    (tree.right[node], axsubs[dim][~go_left]),
                ):
                    if sub.size:
                        nxt = list(axsubs)
                        nxt[dim] = sub
                        stack.append((int(child), rows, nxt))
            else:
                go_left = data.X[rows, f] < t
                for child, sub in (
                    (tree.left[node], rows[go_left]),
                    (tree.right[node], rows[~go_left]),
                ):
                    if sub.size:
                        stack.append((int(child), sub, axsubs))
        total += w * acc / data.n
    return DacCurve(grid, total, np.full(grid.shape, float(data.n)), S)


def _bin_index(axis: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Bin around each grid coordinate; edges at midpoints, outer bins
    extend to +/- infinity."""
    if axis.size == 1:
        return np.zeros(x.shape[0], dtype=np.int64)
    edges = 0.5 * (axis[:-1] + axis[1:])
    return np.searchsorted(edges, x, side="left")


def conditional_expectation_curve(
    model: Ensemble,
    sample: Dataset,
    S: FeatureSet,
    grid: Grid,
    predictions: np.ndarray | None = None,
) -> DacCurve:
    """Mean model prediction per grid-cell bin over the sample rows; cells
    whose bin receives no rows are undefined.

    predictions, when given, must be predict_batch(model, sample.X); it
    lets callers evaluating several feature sets pay for the prediction
    pass once."""
    S.validate(sample.d)
    if len(S) not in (1, 2):
        raise ValueError("conditional expectation supports |S| of 1 or 2")
    preds = predict_batch(model, sample.X) if predictions is None else predictions
    bins = [
        _bin_index(axis, sample.X[:, j])
        for axis, j in zip(grid.axes, S.indices)
    ]
    flat = np.ravel_multi_index(tuple(bins), grid.shape)
    ncells = int(np.prod(grid.shape))
    sums = np.bincount(flat, weights=preds, minlength=ncells)
    cnts = np.bincount(flat, minlength=ncells).astype(np.float64)
    values = np.full(ncells, np.nan)
    mask = cnts > 0
    values[mask] = sums[mask] / cnts[mask]
    return DacCurve(
        grid, values.reshape(grid.shape), cnts.reshape(grid.shape), S
    )


def curve_mse(a: DacCurve, b: DacCurve) -> float:
    """Mean squared difference over the cells where both curves are defined."""
    if not a.grid.same_as(b.grid):
        raise ValueError("curves live on different grids")
    mask = np.isfinite(a.values) & np.isfinite(b.values)
    if not mask.any():
        raise ValueError("curves have no jointly defined cells")
    diff = a.values[mask] - b.values[mask]
    return float(np.mean(diff * diff))
